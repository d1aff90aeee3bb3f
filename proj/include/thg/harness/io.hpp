#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "thg/calibration.hpp"
#include "thg/coarse_grid.hpp"
#include "thg/harness/config.hpp"
#include "thg/sampler.hpp"

namespace thg::harness {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest round-trip decimal representation, '.' separator, locale-free.
inline std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- profile CSV -----------------------------------------------------------

inline constexpr std::string_view kProfileHeader =
    "index,t,tortoise_mean,tortoise_std,hare_mean,hare_std,m_max";

inline std::string profile_csv(const std::vector<ProfileReportRow>& rows) {
  std::string s(kProfileHeader);
  s += '\n';
  for (const auto& r : rows) {
    s += std::to_string(r.index) + ',' + fmt(r.t) + ',' + fmt(r.tortoise_mean) + ',' +
         fmt(r.tortoise_std) + ',' + fmt(r.hare_mean) + ',' + fmt(r.hare_std) + ',' +
         std::to_string(r.m_max) + '\n';
  }
  return s;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError("malformed number '" + std::string(s) + "'");
  }
  return v;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError("malformed integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

/// Parse a profile CSV back into an error-constant profile. The CSV carries
/// t_0..t_{N-1}; the final time t_N is supplied by the caller.
inline ErrorConstantProfile parse_profile_csv(const std::string& text, double t_final = 0.0) {
  ErrorConstantProfile p;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kProfileHeader) {
    throw IoError("profile CSV must start with header: " + std::string(kProfileHeader));
  }
  int expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != 7) throw IoError("profile row must have 7 columns: " + line);
    if (detail::parse_int(cols[0]) != expected) throw IoError("profile rows out of order");
    ++expected;
    p.times.push_back(detail::parse_double(cols[1]));
    p.tortoise_mean.push_back(detail::parse_double(cols[2]));
    p.tortoise_std.push_back(detail::parse_double(cols[3]));
    p.hare_mean.push_back(detail::parse_double(cols[4]));
    p.hare_std.push_back(detail::parse_double(cols[5]));
    if (p.tortoise_mean.back() < 0.0 || p.hare_mean.back() < 0.0) {
      throw IoError("profile entries must be non-negative");
    }
  }
  if (expected == 0) throw IoError("profile CSV has no rows");
  p.times.push_back(t_final);
  return p;
}

// ---- grid JSON -------------------------------------------------------------

inline nlohmann::json grid_json(const CoarseGrid& grid, double rho, int p) {
  return {{"N", grid.steps()}, {"rho", rho}, {"p", p}, {"indices", grid.indices()}};
}

struct GridFile {
  int N = 0;
  double rho = 0.0;
  int p = 1;
  std::vector<int> indices;
};

inline GridFile parse_grid_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GridFile g;
    g.N = j.at("N").get<int>();
    g.rho = j.at("rho").get<double>();
    g.p = j.at("p").get<int>();
    g.indices = j.at("indices").get<std::vector<int>>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed grid file: ") + e.what());
  }
}

/// Attach a grid file to the fine grid it was built for.
inline CoarseGrid attach_grid(const GridFile& g, const FineGrid& fine) {
  if (g.N != fine.steps()) {
    throw InvalidParameter("grid file N = " + std::to_string(g.N) +
                           " does not match fine grid N = " + std::to_string(fine.steps()));
  }
  return CoarseGrid(fine, g.indices);
}

// ---- trajectory export -----------------------------------------------------

inline constexpr std::string_view kTrajectoryHeader = "i,t,tortoise_norm,hare_norm,state_norm";

inline std::string trajectory_csv(const TrajectoryRecord& rec) {
  std::string s(kTrajectoryHeader);
  s += '\n';
  for (std::size_t i = 0; i < rec.full_states.size(); ++i) {
    s += std::to_string(i) + ',' + fmt(rec.times[i]) + ',' + fmt(rec.tortoise_states[i].norm()) +
         ',' + fmt(rec.hare_states[i].norm()) + ',' + fmt(rec.full_states[i].norm()) + '\n';
  }
  return s;
}

inline nlohmann::json trajectory_json(const TrajectoryRecord& rec) {
  auto vecs = [](const std::vector<Vector>& vs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : vs) arr.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return arr;
  };
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : rec.coarse_events) {
    events.push_back({{"index", e.index}, {"leap", e.leap}, {"boosted", e.boosted}});
  }
  return {{"nfe", rec.nfe},
          {"times", rec.times},
          {"tortoise_states", vecs(rec.tortoise_states)},
          {"hare_states", vecs(rec.hare_states)},
          {"full_states", vecs(rec.full_states)},
          {"coarse_events", events}};
}

}  // namespace thg::harness
