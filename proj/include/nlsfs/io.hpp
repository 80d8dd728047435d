#pragma once

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <set>
#include <sstream>

#include "analysis.hpp"
#include "nonlinearity.hpp"
#include "profiles.hpp"
#include "solver.hpp"

namespace nlsfs {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct NonlinearitySpec {
  std::string family = "real-part";  // gauge | cos-power | sin-power | real-part | re-im-combo
  double alpha = 5.0 / 3.0;
  double lambda = 1.0;  // gauge coupling, or overall scale of real-part
  int n_max = 21;
};

struct GridSpec {
  std::string kind = "radial";
  int dim = 3;
  int n = 4095;
  double L = 6;
};

struct SolverSpec {
  std::string mode = "final-state";  // final-state | picard | both
  std::string scheme = "strang_rk4";
  std::string frame = "lens";
  std::string leading = "stationary-phase";  // stationary-phase | free
  double dt = 0.02;
  double t_start = 64, t_end = 8;
  double T = 4, T_max = 64;
  int iters = 4;
  int samples_per_octave = 8;
  bool include_calV = false;
};

struct AnalysisSpec {
  double delta = 1.55;
  double eta = 0.1;
  double b = 0.76;
  double tol = 0.1;
  double fit_lo = 8, fit_hi = 32;
};

struct ExperimentConfig {
  NonlinearitySpec nonlinearity;
  GaussianFamily data;
  GridSpec grid;
  SolverSpec solver;
  AnalysisSpec analysis;
  std::string out = "nlsfs_out";
  std::uint64_t seed = 1;
  int threads = 0;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"nonlinearity", {"family", "alpha", "lambda", "n_max"}},
      {"data", {"eps", "kappa", "width"}},
      {"grid", {"kind", "dim", "n", "L"}},
      {"solver",
       {"mode", "scheme", "frame", "leading", "dt", "t_start", "t_end", "T", "T_max", "iters",
        "samples_per_octave", "include_calV"}},
      {"analysis", {"delta", "eta", "b", "tol", "fit_lo", "fit_hi"}},
      {"run", {"out", "seed", "threads"}}};
  return keys;
}

inline void require_one_of(const std::string& key, const std::string& v,
                           std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string msg = key + " = '" + v + "' is not one of:";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw config_error(msg);
}

}  // namespace detail

// 3/2 < delta < 5/3, delta - 3/2 < 2 eta, and basic sanity of every other field
inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& what, const std::string& vals) {
    throw config_error("violated: " + what + " (" + vals + ")");
  };
  auto num = [](double x) {
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
  };
  const auto& a = c.analysis;
  if (!(a.delta > 1.5)) fail("3/2 < delta", "delta = " + num(a.delta));
  if (!(a.delta < 5.0 / 3.0)) fail("delta < 5/3", "delta = " + num(a.delta));
  if (!(a.eta > 0)) fail("eta > 0", "eta = " + num(a.eta));
  if (!(a.delta - 1.5 < 2 * a.eta))
    fail("delta - 3/2 < 2 eta", "delta = " + num(a.delta) + ", eta = " + num(a.eta));
  if (!(a.b > 0)) fail("b > 0", "b = " + num(a.b));
  if (!(a.tol >= 0)) fail("tol >= 0", "tol = " + num(a.tol));
  if (!(a.fit_lo > 0 && a.fit_hi > a.fit_lo))
    fail("0 < fit_lo < fit_hi", "fit_lo = " + num(a.fit_lo) + ", fit_hi = " + num(a.fit_hi));

  const auto& nl = c.nonlinearity;
  detail::require_one_of("nonlinearity.family", nl.family,
                         {"gauge", "cos-power", "sin-power", "real-part", "re-im-combo"});
  if (!(nl.alpha > 0)) fail("alpha > 0", "alpha = " + num(nl.alpha));
  if (nl.n_max < 1) fail("n_max >= 1", "n_max = " + std::to_string(nl.n_max));

  if (!(c.data.eps >= 0)) fail("eps >= 0", "eps = " + num(c.data.eps));
  if (!(c.data.width > 0)) fail("width > 0", "width = " + num(c.data.width));
  if (!(c.data.kappa >= 0)) fail("kappa >= 0", "kappa = " + num(c.data.kappa));

  const auto& g = c.grid;
  detail::require_one_of("grid.kind", g.kind, {"radial", "cartesian"});
  if (g.dim < 1 || g.dim > 3) fail("1 <= dim <= 3", "dim = " + std::to_string(g.dim));
  if (g.kind == "radial" && g.dim != 3) fail("radial grids have dim = 3", "dim = " + std::to_string(g.dim));
  if (g.n < 2) fail("n >= 2", "n = " + std::to_string(g.n));
  if (!(g.L > 0)) fail("L > 0", "L = " + num(g.L));

  const auto& s = c.solver;
  detail::require_one_of("solver.mode", s.mode, {"final-state", "picard", "both"});
  detail::require_one_of("solver.scheme", s.scheme, {"strang_rk4", "lie"});
  detail::require_one_of("solver.frame", s.frame, {"physical", "lens"});
  detail::require_one_of("solver.leading", s.leading, {"stationary-phase", "free"});
  if (!(s.dt > 0)) fail("dt > 0", "dt = " + num(s.dt));
  if (!(s.t_start > s.t_end && s.t_end >= 2))
    fail("t_start > t_end >= 2", "t_start = " + num(s.t_start) + ", t_end = " + num(s.t_end));
  if (!(s.T >= 2 && s.T_max > s.T)) fail("2 <= T < T_max", "T = " + num(s.T) + ", T_max = " + num(s.T_max));
  if (s.iters < 2) fail("iters >= 2", "iters = " + std::to_string(s.iters));
  if (s.samples_per_octave < 1)
    fail("samples_per_octave >= 1", "samples_per_octave = " + std::to_string(s.samples_per_octave));
  if (c.threads < 0) fail("threads >= 0", "threads = " + std::to_string(c.threads));
}

inline ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  const auto& keys = detail::config_keys();
  for (auto& [section, body] : tree) {
    auto it = keys.find(section);
    if (it == keys.end()) throw config_error("config: unknown section [" + section + "]");
    for (auto& [key, _] : body)
      if (!it->second.count(key)) throw config_error("config: unknown key " + section + "." + key);
  }
  ExperimentConfig c;
  auto get = [&](const std::string& path, auto& slot) {
    using T = std::decay_t<decltype(slot)>;
    auto v = tree.get_optional<std::string>(path);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (*v == "true" || *v == "1") slot = true;
        else if (*v == "false" || *v == "0") slot = false;
        else throw std::invalid_argument("bool");
      } else if constexpr (std::is_same_v<T, std::string>) {
        slot = *v;
      } else {
        std::size_t used = 0;
        if constexpr (std::is_floating_point_v<T>) slot = std::stod(*v, &used);
        else slot = static_cast<T>(std::stoll(*v, &used));
        if (used != v->size()) throw std::invalid_argument("trailing");
      }
    } catch (const std::logic_error&) {
      throw config_error("config: cannot parse " + path + " = '" + *v + "'");
    }
  };
  get("nonlinearity.family", c.nonlinearity.family);
  get("nonlinearity.alpha", c.nonlinearity.alpha);
  get("nonlinearity.lambda", c.nonlinearity.lambda);
  get("nonlinearity.n_max", c.nonlinearity.n_max);
  get("data.eps", c.data.eps);
  get("data.kappa", c.data.kappa);
  get("data.width", c.data.width);
  get("grid.kind", c.grid.kind);
  get("grid.dim", c.grid.dim);
  get("grid.n", c.grid.n);
  get("grid.L", c.grid.L);
  get("solver.mode", c.solver.mode);
  get("solver.scheme", c.solver.scheme);
  get("solver.frame", c.solver.frame);
  get("solver.leading", c.solver.leading);
  get("solver.dt", c.solver.dt);
  get("solver.t_start", c.solver.t_start);
  get("solver.t_end", c.solver.t_end);
  get("solver.T", c.solver.T);
  get("solver.T_max", c.solver.T_max);
  get("solver.iters", c.solver.iters);
  get("solver.samples_per_octave", c.solver.samples_per_octave);
  get("solver.include_calV", c.solver.include_calV);
  get("analysis.delta", c.analysis.delta);
  get("analysis.eta", c.analysis.eta);
  get("analysis.b", c.analysis.b);
  get("analysis.tol", c.analysis.tol);
  get("analysis.fit_lo", c.analysis.fit_lo);
  get("analysis.fit_hi", c.analysis.fit_hi);
  get("run.out", c.out);
  get("run.seed", c.seed);
  get("run.threads", c.threads);
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path.string());
  return parse_config(in);
}

inline json to_json(const ExperimentConfig& c) {
  const auto& s = c.solver;
  const auto& a = c.analysis;
  return {{"nonlinearity",
           {{"family", c.nonlinearity.family},
            {"alpha", c.nonlinearity.alpha},
            {"lambda", c.nonlinearity.lambda},
            {"n_max", c.nonlinearity.n_max}}},
          {"data", {{"eps", c.data.eps}, {"kappa", c.data.kappa}, {"width", c.data.width}}},
          {"grid", {{"kind", c.grid.kind}, {"dim", c.grid.dim}, {"n", c.grid.n}, {"L", c.grid.L}}},
          {"solver",
           {{"mode", s.mode},
            {"scheme", s.scheme},
            {"frame", s.frame},
            {"leading", s.leading},
            {"dt", s.dt},
            {"t_start", s.t_start},
            {"t_end", s.t_end},
            {"T", s.T},
            {"T_max", s.T_max},
            {"iters", s.iters},
            {"samples_per_octave", s.samples_per_octave},
            {"include_calV", s.include_calV}}},
          {"analysis",
           {{"delta", a.delta},
            {"eta", a.eta},
            {"b", a.b},
            {"tol", a.tol},
            {"fit_lo", a.fit_lo},
            {"fit_hi", a.fit_hi}}},
          {"run", {{"seed", c.seed}}}};
}

// SHA-1 of "blob <size>\0" + bytes, the content address git gives a file
inline std::string git_blob_hash(const std::string& bytes) {
  std::string head = "blob " + std::to_string(bytes.size());
  head.push_back('\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), head.data(), head.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw numeric_error("sha1 digest failed");
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

inline std::string config_hash(const ExperimentConfig& c) { return git_blob_hash(to_json(c).dump()); }

inline Grid make_grid(const GridSpec& g) {
  return g.kind == "radial" ? Grid::radial(g.n, g.L) : Grid::cartesian(g.dim, g.n, g.L);
}

inline FourierSymbol make_symbol(const NonlinearitySpec& s, int dim = 3) {
  if (s.family == "gauge") return gauge_nonlinearity(s.lambda, dim).symbol;
  if (s.family == "cos-power" || s.family == "real-part")
    return build_symbol(SymbolSource::cos_power(s.family == "real-part" ? 1.0 + 2.0 / dim : s.alpha, s.n_max), dim);
  if (s.family == "sin-power") return build_symbol(SymbolSource::sin_power(s.alpha, s.n_max), dim);
  if (s.family == "re-im-combo") return re_im_combination(s.n_max, dim).symbol;
  throw config_error("unknown nonlinearity family '" + s.family + "'");
}

// only families of the critical degree 1 + 2/d drive the solver
inline HomogeneousNonlinearity make_nonlinearity(const NonlinearitySpec& s, int dim = 3) {
  if (s.family == "gauge") return gauge_nonlinearity(s.lambda, dim);
  if (s.family == "real-part") return real_part_nonlinearity(s.n_max, dim, s.lambda);
  if (s.family == "re-im-combo") return re_im_combination(s.n_max, dim);
  throw config_error("nonlinearity family '" + s.family +
                     "' has no direct evaluation for time stepping; use gauge, real-part or re-im-combo");
}

inline SolverConfig make_solver_config(const ExperimentConfig& c) {
  SolverConfig s;
  s.grid = make_grid(c.grid);
  s.dt = c.solver.dt;
  s.scheme = c.solver.scheme == "lie" ? Scheme::lie : Scheme::strang_rk4;
  s.frame = c.solver.frame == "lens" ? Frame::lens : Frame::physical;
  s.t_start = c.solver.t_start;
  s.t_end = c.solver.t_end;
  s.nonlinearity = make_nonlinearity(c.nonlinearity, c.grid.dim);
  s.samples_per_octave = c.solver.samples_per_octave;
  return s;
}

inline ProfileOptions make_profile_options(const ExperimentConfig& c) {
  ProfileOptions o;
  o.n_max = c.nonlinearity.n_max;
  o.delta = c.analysis.delta;
  return o;
}

// fixed-notation round-trip formatting keeps CSV output byte-stable
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write " + path.string());
  out << text;
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw config_error(path.string() + ": " + e.what());
  }
}

inline void write_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ostringstream s;
  for (std::size_t i = 0; i < header.size(); ++i) s << (i ? "," : "") << header[i];
  s << "\n";
  for (auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << fmt(row[i]);
    s << "\n";
  }
  write_text(path, s.str());
}

inline void write_series_csv(const fs::path& path, const Series& series, const std::string& name) {
  std::vector<std::vector<double>> rows;
  for (auto [t, v] : series) rows.push_back({t, v});
  write_csv(path, {"t", name}, rows);
}

inline json to_json(const DecayFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r2", f.r_squared},
          {"window", {f.t_min, f.t_max}},
          {"n_points", f.n_points},
          {"low_r2", f.low_r2}};
}

inline json to_json(const Grid& g) {
  return {{"kind", g.radial_kind() ? "radial" : "cartesian"}, {"dim", g.dim}, {"n", g.n}, {"L", g.L}};
}

inline Grid grid_from_json(const json& j) {
  return j.at("kind") == "radial" ? Grid::radial(j.at("n"), j.at("L"))
                                  : Grid::cartesian(j.at("dim"), j.at("n"), j.at("L"));
}

inline std::string field_bytes(const Field& f) {
  std::string b(f.size() * 2 * sizeof(double), '\0');
  std::memcpy(b.data(), f.v.data(), b.size());
  return b;
}

// directory of raw complex128 snapshots plus manifest.json
inline json write_archive(const fs::path& dir, const Trajectory& traj, const json& config) {
  fs::create_directories(dir);
  json samples = json::array();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "state_%04zu.bin", i);
    std::string bytes = field_bytes(traj.states[i]);
    write_text(dir / name, bytes);
    json s{{"t", traj.times[i]},
           {"file", name},
           {"hash", git_blob_hash(bytes)},
           {"l2", l2_norm(traj.states[i])}};
    if (traj.residuals.size() == traj.size()) s["residual"] = traj.residuals[i];
    samples.push_back(s);
  }
  json manifest{{"config", config},
                {"config_hash", traj.config_hash},
                {"frame", traj.frame},
                {"grid", traj.size() ? to_json(traj.states.front().grid) : json()},
                {"samples", samples}};
  write_json(dir / "manifest.json", manifest);
  return manifest;
}

inline Trajectory read_archive(const fs::path& dir) {
  json m = read_json(dir / "manifest.json");
  Trajectory traj;
  traj.config_hash = m.value("config_hash", "");
  traj.frame = m.value("frame", "physical");
  if (m.at("samples").empty()) return traj;
  Grid g = grid_from_json(m.at("grid"));
  for (auto& s : m.at("samples")) {
    fs::path p = dir / s.at("file").get<std::string>();
    std::ifstream in(p, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (git_blob_hash(bytes) != s.at("hash")) throw numeric_error("archive: hash mismatch in " + p.string());
    Field f(g);
    if (bytes.size() != f.size() * 2 * sizeof(double))
      throw numeric_error("archive: wrong snapshot size in " + p.string());
    std::memcpy(f.v.data(), bytes.data(), bytes.size());
    std::optional<double> res;
    if (s.contains("residual")) res = s.at("residual").get<double>();
    traj.add(s.at("t"), std::move(f), res);
  }
  return traj;
}

}  // namespace nlsfs
