#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "thg/models.hpp"
#include "thg/schedules.hpp"
#include "thg/solvers.hpp"

namespace thg::harness {

using json = nlohmann::json;

/// Environment variable that redirects all relative output paths.
inline constexpr const char* kOutputDirEnv = "THG_OUTPUT_DIR";

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ScheduleSpec {
  std::string kind = "vp";
  double beta_min = 0.1;
  double beta_max = 20.0;
  double T = 1.0;
};

struct ComponentSpec {
  double weight = 1.0;
  std::vector<double> mean;  ///< length dim; a scalar in JSON fills every coordinate
  double scale = 1.0;
};

struct ModelSpec {
  std::string mode = "epsilon";
  int dim = 8;
  std::vector<ComponentSpec> cond;
  std::vector<ComponentSpec> uncond;
};

/// One experiment: schedule, model, solver and THG hyperparameters
/// (N, omega, rho, b, i_hi), batch sizes, seeds and output locations.
struct ExperimentConfig {
  ScheduleSpec schedule;
  ModelSpec model;
  std::string solver = "ddim";
  std::string spacing = "uniform-in-t";
  int N = 50;
  double omega = 7.5;
  double rho = 1.1;
  double boost = 1.1;
  int i_hi = 38;
  bool always_boost = false;
  std::optional<int> cap;

  int calibration_batch = 100;
  std::uint64_t calibration_seed = 0;
  std::uint64_t sample_seed = 0;
  int compare_seeds = 20;
  std::uint64_t compare_seed = 1'000'000;
  int oracle_substeps = 10'000;

  std::string output_dir = "out";
  std::string profile_csv = "profile.csv";
  std::string profile_meta = "profile.meta.json";

  NoiseSchedule make_schedule() const {
    if (schedule.kind == "vp") return make_vp_schedule(schedule.beta_min, schedule.beta_max, schedule.T);
    if (schedule.kind == "flow") return make_flow_schedule();
    throw ConfigError("unknown schedule kind '" + schedule.kind + "' (expected vp or flow)");
  }

  PredictionMode prediction_mode() const {
    if (model.mode == "epsilon") return PredictionMode::Epsilon;
    if (model.mode == "velocity") return PredictionMode::Velocity;
    throw ConfigError("unknown model mode '" + model.mode + "' (expected epsilon or velocity)");
  }

  GuidedModel make_model() const {
    auto convert = [this](const std::vector<ComponentSpec>& specs) {
      Mixture mix;
      for (const auto& c : specs) {
        if (static_cast<int>(c.mean.size()) != model.dim) {
          throw ConfigError("component mean length does not match model.dim");
        }
        mix.push_back({c.weight, Eigen::Map<const Vector>(c.mean.data(), model.dim), c.scale});
      }
      return mix;
    };
    return GuidedModel(prediction_mode(), convert(model.cond), convert(model.uncond));
  }

  SolverStep make_solver() const {
    auto s = parse_solver(solver);
    if (!s) throw ConfigError("unknown solver '" + solver + "' (expected ddim, euler or midpoint2)");
    return *s;
  }

  GridSpacing grid_spacing() const {
    if (spacing == "uniform-in-t") return GridSpacing::UniformInTime;
    if (spacing == "uniform-in-discrete-index") return GridSpacing::UniformInDiscreteIndex;
    throw ConfigError("unknown spacing '" + spacing + "'");
  }

  FineGrid make_grid() const { return make_fine_grid(make_schedule(), N, grid_spacing()); }

  /// Checks that every referenced component can be built.
  void validate() const {
    if (N < 1) throw ConfigError("N must be >= 1");
    if (!(omega >= 0.0)) throw ConfigError("omega must be >= 0");
    if (!(rho > 0.0)) throw ConfigError("rho must be > 0");
    if (!(boost >= 1.0)) throw ConfigError("boost must be >= 1");
    if (i_hi < 0 || i_hi > N) throw ConfigError("i_hi must lie in [0, N]");
    if (cap && *cap < 1) throw ConfigError("cap must be >= 1");
    if (calibration_batch < 1) throw ConfigError("calibration.batch must be >= 1");
    if (compare_seeds < 1) throw ConfigError("compare.seeds must be >= 1");
    if (oracle_substeps < 1000) throw ConfigError("compare.oracle_substeps must be >= 1000");
    try {
      if (make_schedule().kind() == ScheduleKind::VariancePreservingLinear &&
          prediction_mode() == PredictionMode::Velocity) {
        throw ConfigError("velocity mode requires the flow schedule");
      }
      make_model();
      make_solver();
      make_grid();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::vector<ComponentSpec> read_components(const json& arr, int dim) {
  std::vector<ComponentSpec> out;
  for (const auto& c : arr) {
    ComponentSpec spec;
    read_opt(c, "weight", spec.weight);
    read_opt(c, "scale", spec.scale);
    const auto& m = c.at("mean");
    if (m.is_number()) {
      spec.mean.assign(static_cast<std::size_t>(dim), m.get<double>());
    } else {
      spec.mean = m.get<std::vector<double>>();
    }
    out.push_back(std::move(spec));
  }
  return out;
}

inline json components_json(const std::vector<ComponentSpec>& comps) {
  json arr = json::array();
  for (const auto& c : comps) arr.push_back({{"weight", c.weight}, {"mean", c.mean}, {"scale", c.scale}});
  return arr;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      detail::read_opt(s, "kind", cfg.schedule.kind);
      detail::read_opt(s, "beta_min", cfg.schedule.beta_min);
      detail::read_opt(s, "beta_max", cfg.schedule.beta_max);
      detail::read_opt(s, "T", cfg.schedule.T);
    }
    const auto& m = j.at("model");
    detail::read_opt(m, "mode", cfg.model.mode);
    detail::read_opt(m, "dim", cfg.model.dim);
    cfg.model.cond = detail::read_components(m.at("cond"), cfg.model.dim);
    cfg.model.uncond = detail::read_components(m.at("uncond"), cfg.model.dim);

    detail::read_opt(j, "solver", cfg.solver);
    detail::read_opt(j, "spacing", cfg.spacing);
    detail::read_opt(j, "N", cfg.N);
    detail::read_opt(j, "omega", cfg.omega);
    detail::read_opt(j, "rho", cfg.rho);
    detail::read_opt(j, "boost", cfg.boost);
    detail::read_opt(j, "i_hi", cfg.i_hi);
    detail::read_opt(j, "always_boost", cfg.always_boost);
    if (j.contains("cap") && !j.at("cap").is_null()) cfg.cap = j.at("cap").get<int>();

    if (j.contains("calibration")) {
      detail::read_opt(j.at("calibration"), "batch", cfg.calibration_batch);
      detail::read_opt(j.at("calibration"), "seed", cfg.calibration_seed);
    }
    if (j.contains("sample")) detail::read_opt(j.at("sample"), "seed", cfg.sample_seed);
    if (j.contains("compare")) {
      detail::read_opt(j.at("compare"), "seeds", cfg.compare_seeds);
      detail::read_opt(j.at("compare"), "seed", cfg.compare_seed);
      detail::read_opt(j.at("compare"), "oracle_substeps", cfg.oracle_substeps);
    }
    if (j.contains("output")) {
      detail::read_opt(j.at("output"), "dir", cfg.output_dir);
      detail::read_opt(j.at("output"), "profile_csv", cfg.profile_csv);
      detail::read_opt(j.at("output"), "profile_meta", cfg.profile_meta);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

/// Fully resolved config, defaults included.
inline json to_json(const ExperimentConfig& c) {
  return json{
      {"schedule", {{"kind", c.schedule.kind}, {"beta_min", c.schedule.beta_min},
                    {"beta_max", c.schedule.beta_max}, {"T", c.schedule.T}}},
      {"model", {{"mode", c.model.mode}, {"dim", c.model.dim},
                 {"cond", detail::components_json(c.model.cond)},
                 {"uncond", detail::components_json(c.model.uncond)}}},
      {"solver", c.solver},
      {"spacing", c.spacing},
      {"N", c.N},
      {"omega", c.omega},
      {"rho", c.rho},
      {"boost", c.boost},
      {"i_hi", c.i_hi},
      {"always_boost", c.always_boost},
      {"cap", c.cap ? json(*c.cap) : json(nullptr)},
      {"calibration", {{"batch", c.calibration_batch}, {"seed", c.calibration_seed}}},
      {"sample", {{"seed", c.sample_seed}}},
      {"compare", {{"seeds", c.compare_seeds}, {"seed", c.compare_seed},
                   {"oracle_substeps", c.oracle_substeps}}},
      {"output", {{"dir", c.output_dir}, {"profile_csv", c.profile_csv},
                  {"profile_meta", c.profile_meta}}},
  };
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

/// Output directory: the environment override when set, else the config value.
inline std::filesystem::path output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

/// Relative paths land under the environment override when it is set.
inline std::filesystem::path resolve_output(const std::filesystem::path& p) {
  if (p.is_absolute()) return p;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    return std::filesystem::path(env) / p;
  }
  return p;
}

}  // namespace thg::harness
