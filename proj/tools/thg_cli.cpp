// Command-line driver: calibrate -> build-grid -> sample / compare.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "thg/harness/config.hpp"
#include "thg/harness/io.hpp"
#include "thg/harness/pipeline.hpp"
#include "thg/thg.hpp"

namespace fs = std::filesystem;
using namespace thg;
using namespace thg::harness;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

CoarseGrid load_grid(const fs::path& path, const ExperimentConfig& cfg) {
  return attach_grid(parse_grid_json(read_text(path)), cfg.make_grid());
}

int run_calibrate(const std::string& config_path) {
  const auto cfg = load_config(config_path);
  const auto profile = run_calibration(cfg);
  const int p = cfg.make_solver().order();
  const auto rows = error_bound_profile_report(profile, cfg.rho, p, cfg.cap);
  const fs::path dir = output_dir(cfg);
  const fs::path csv = dir / cfg.profile_csv;
  const fs::path meta = dir / cfg.profile_meta;
  write_text(csv, profile_csv(rows));
  write_text(meta, calibration_metadata(cfg, profile).dump(2) + '\n');
  std::cout << "profile: " << csv.string() << "\nmetadata: " << meta.string()
            << "\nnfe: " << profile.nfe << '\n';
  return 0;
}

int run_build_grid(const std::string& profile_path, double rho, int p, std::optional<int> cap,
                   std::optional<int> i_hi, const std::string& out) {
  const auto profile = parse_profile_csv(read_text(profile_path));
  const auto grid = build_coarse_grid(profile, rho, p, cap);
  const fs::path target = resolve_output(out);
  write_text(target, grid_json(grid, rho, p).dump() + '\n');
  const int limit = i_hi.value_or(grid.steps());
  std::cout << "grid: " << target.string() << "\n|C|: " << grid.size()
            << "\nprojected_nfe: " << grid.projected_nfe(limit) << " (i_hi = " << limit << ")\n";
  return 0;
}

int run_sample(const std::string& config_path, const std::string& grid_path,
               const std::string& method, const std::string& out) {
  const auto cfg = load_config(config_path);
  const auto schedule = cfg.make_schedule();
  const auto model = cfg.make_model();
  const auto solver = cfg.make_solver();
  const auto grid = load_grid(grid_path, cfg);
  const Vector x_T = initial_noise(schedule, model.mode(), model.dim(), cfg.sample_seed);
  const TrajectoryRecord rec =
      method == "cfg"
          ? sample_cfg(model, schedule, grid.fine(), cfg.omega, solver, x_T)
          : sample_thg(model, schedule,
                       ThgConfig{cfg.omega, cfg.rho, cfg.boost, cfg.i_hi, grid, solver,
                                 cfg.always_boost},
                       x_T);
  const fs::path csv = resolve_output(out);
  fs::path json_path = csv;
  json_path.replace_extension(".json");
  write_text(csv, trajectory_csv(rec));
  write_text(json_path, trajectory_json(rec).dump() + '\n');
  std::cout << "trajectory: " << csv.string() << "\nstates: " << json_path.string()
            << "\nnfe: " << rec.nfe << '\n';
  return 0;
}

int run_compare(const std::string& config_path, const std::string& grid_path,
                const std::string& out) {
  const auto cfg = load_config(config_path);
  const auto grid = load_grid(grid_path, cfg);
  const fs::path target = resolve_output(out);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream report(target, std::ios::binary);
  if (!report) throw IoError("cannot open " + target.string() + " for writing");
  report << kReportHeader << '\n' << std::flush;
  const auto result = run_comparison(cfg, grid, [&](const ComparisonRow& row) {
    report << report_csv_row(row) << std::flush;
  });
  for (const char* method : {"cfg", "thg"}) {
    const auto& r = result.aggregate(method);
    std::cout << method << ": nfe " << r.nfe << ", mean endpoint error " << fmt(r.endpoint_error)
              << '\n';
  }
  std::cout << "report: " << target.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multirate classifier-free guidance sampler"};
  app.require_subcommand(1);

  std::string config, profile, grid, out, method;
  double rho = 1.1;
  int p = 1;
  std::optional<int> cap, i_hi;

  auto* calibrate = app.add_subcommand("calibrate", "estimate per-step error constants");
  calibrate->add_option("--config", config, "experiment config JSON")->required()->check(CLI::ExistingFile);

  auto* build = app.add_subcommand("build-grid", "build a coarse grid from a profile");
  build->add_option("--profile", profile, "profile CSV")->required()->check(CLI::ExistingFile);
  build->add_option("--rho", rho, "error-ratio threshold")->required()->check(CLI::PositiveNumber);
  build->add_option("--p", p, "solver order")->required()->check(CLI::PositiveNumber);
  build->add_option("--cap", cap, "maximum leap length")->check(CLI::PositiveNumber);
  build->add_option("--i-hi", i_hi, "truncation index for the projected NFE")->check(CLI::NonNegativeNumber);
  build->add_option("--out", out, "grid JSON")->required();

  auto* sample = app.add_subcommand("sample", "sample one trajectory");
  sample->add_option("--config", config, "experiment config JSON")->required()->check(CLI::ExistingFile);
  sample->add_option("--grid", grid, "grid JSON")->required()->check(CLI::ExistingFile);
  sample->add_option("--method", method, "cfg or thg")->required()->check(CLI::IsMember({"cfg", "thg"}));
  sample->add_option("--out", out, "trajectory CSV; states go to the sibling .json")->required();

  auto* compare = app.add_subcommand("compare", "CFG vs THG against the reference oracle");
  compare->add_option("--config", config, "experiment config JSON")->required()->check(CLI::ExistingFile);
  compare->add_option("--grid", grid, "grid JSON")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", out, "report CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*calibrate) return run_calibrate(config);
    if (*build) return run_build_grid(profile, rho, p, cap, i_hi, out);
    if (*sample) return run_sample(config, grid, method, out);
    if (*compare) return run_compare(config, grid, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
