#include <CLI11.hpp>
#include <iostream>

#include "nlsfs/io.hpp"

using namespace nlsfs;

namespace {

enum Exit { ok = 0, failed = 1, usage = 2 };

struct Check {
  std::string name;
  bool pass;
  double value;
  double limit;
  std::string relation;  // how value is compared with limit
};

json checks_json(const std::vector<Check>& checks) {
  json a = json::array();
  for (auto& c : checks)
    a.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"limit", c.limit}, {"relation", c.relation}});
  return a;
}

std::string show(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Check at_most(std::string name, double v, double lim) { return {std::move(name), v <= lim, v, lim, "<="}; }
Check at_least(std::string name, double v, double lim) { return {std::move(name), v >= lim, v, lim, ">="}; }

int finish(const fs::path& dir, json summary, const std::vector<Check>& checks) {
  bool pass = std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  summary["checks"] = checks_json(checks);
  summary["pass"] = pass;
  write_json(dir / "summary.json", summary);
  for (auto& c : checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << show(c.value) << " " << c.relation << " "
              << show(c.limit) << "\n";
  std::cout << "wrote " << (dir / "summary.json").string() << "\n";
  return pass ? ok : failed;
}

json header(const std::string& cmd, const ExperimentConfig& c) {
  return {{"command", cmd}, {"config", to_json(c)}, {"config_hash", config_hash(c)}};
}

FinalData make_data(const ExperimentConfig& c) { return FinalData::gaussian(c.data); }

int cmd_coeffs(const ExperimentConfig& c) {
  fs::path dir = fs::path(c.out) / "coeffs";
  const auto& nl = c.nonlinearity;
  FourierSymbol s = make_symbol(nl, c.grid.dim);
  std::optional<PeriodicSymbol> periodic;
  std::function<cplx(int)> closed;
  if (nl.family == "cos-power" || nl.family == "real-part") {
    double a = nl.family == "real-part" ? 1.0 + 2.0 / c.grid.dim : nl.alpha;
    periodic = cos_power_symbol(a);
    closed = [a](int n) { return coeff_cos_power(a, n); };
  } else if (nl.family == "sin-power") {
    periodic = sin_power_symbol(nl.alpha);
    closed = [a = nl.alpha](int n) { return -I * coeff_sin_power(a, n); };
  }
  std::vector<int> ns;
  for (auto& [n, _] : s.coeffs) ns.push_back(n);
  std::vector<QuadResult> quad(ns.size());
  if (periodic)
    parallel_for(ns.size(), [&](std::size_t i) {
      quad[i] = coeff_quadrature(*periodic, ns[i], std::max(64, 8 * (std::abs(ns[i]) + 1)));
    });
  std::vector<std::vector<double>> rows;
  double worst = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    cplx g = s[ns[i]];
    std::vector<double> row{double(ns[i]), g.real(), g.imag(), std::abs(g)};
    if (periodic) {
      cplx q = quad[i].value;
      double rel = std::abs(q - closed(ns[i])) / std::max(std::abs(closed(ns[i])), 1e-300);
      if (std::abs(closed(ns[i])) > 0) worst = std::max(worst, rel);
      row.insert(row.end(), {q.real(), q.imag(), quad[i].error, std::abs(closed(ns[i])) > 0 ? rel : 0.0});
    }
    rows.push_back(row);
  }
  std::vector<std::string> cols{"n", "re", "im", "abs"};
  if (periodic) cols.insert(cols.end(), {"quad_re", "quad_im", "quad_err", "rel_diff"});
  write_csv(dir / "coefficients.csv", cols, rows);

  json summary = header("coeffs", c);
  std::vector<Check> checks;
  cplx g1 = s[1];
  bool free_case = std::abs(g1) <= 1e-10;
  summary["g1"] = {g1.real(), g1.imag()};
  summary["asymptotically_free"] = free_case;
  summary["entries"] = std::count_if(s.coeffs.begin(), s.coeffs.end(), [](auto& p) { return p.second != cplx{}; });
  auto split = resonant_split(s);
  summary["g0_flag"] = split.g0_flag;
  summary["im_g1_flag"] = split.im_g1_flag;
  if (free_case) std::cout << "g1 = 0: asymptotically free case, no logarithmic phase correction\n";
  if (periodic) checks.push_back(at_most("closed form vs quadrature, max relative difference", worst, 1e-8));
  if (s.max_index() >= 15) {
    auto fit = coeff_decay_fit(s, 11, s.max_index());
    summary["decay_fit"] = to_json(fit);
    std::cout << "decay exponent of |g_n| over odd n in [11, " << s.max_index() << "]: " << show(fit.slope) << "\n";
  }
  auto sm = summability(s, c.analysis.eta);
  summary["summability"] = {{"eta", c.analysis.eta},
                            {"partial", sm.partial},
                            {"tail", std::isinf(sm.tail) ? json("inf") : json(sm.tail)},
                            {"divergent", sm.divergent}};
  return finish(dir, summary, checks);
}

int cmd_profiles(const ExperimentConfig& c) {
  fs::path dir = fs::path(c.out) / "profiles";
  FinalData data = make_data(c);
  FourierSymbol s = make_symbol(c.nonlinearity).truncated(c.nonlinearity.n_max);
  double g1 = s[1].real();
  ProfileOptions o = make_profile_options(c);
  auto times = dyadic_times(c.solver.T, c.solver.T_max, c.solver.samples_per_octave);
  std::vector<std::vector<double>> rows;
  Series calV_norm, vp6;
  Trajectory snaps;
  snaps.config_hash = config_hash(c);
  double worst_dual = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double t = times[i];
    Grid G = reference_grid(t);
    ProfileBundle b(data, s, g1, t, G, o);
    bool octave = i % c.solver.samples_per_octave == 0;
    double dual = 0;
    if (octave) {
      auto op = make_calV_operator_form(data, s, g1, t, G, o).field;
      double nv = l2_norm(b.calV);
      dual = nv > 0 ? l2_norm(op - b.calV) / nv : l2_norm(op);
      worst_dual = std::max(worst_dual, dual);
      snaps.add(t, b.calV);
    }
    double nv = l2_norm(b.calV), n6 = norm_lebesgue(b.v_p, 6);
    calV_norm.emplace_back(t, nv);
    vp6.emplace_back(t, n6);
    rows.push_back({t, l2_norm(b.u_p), nv, n6, octave ? dual : std::nan("")});
  }
  write_csv(dir / "profiles.csv", {"t", "up_l2", "calV_l2", "vp_l6", "calV_dual_rel"}, rows);
  write_archive(dir / "calV", snaps, to_json(c));

  json summary = header("profiles", c);
  std::vector<Check> checks;
  checks.push_back(at_most("calV closed form vs operator form, relative L2", worst_dual, 1e-6));
  bool has_calV = std::any_of(calV_norm.begin(), calV_norm.end(), [](auto& p) { return p.second > 0; });
  if (has_calV) {
    auto fit = fit_decay(calV_norm);
    summary["calV_fit"] = to_json(fit);
    checks.push_back(at_most("slope of ||calV(t)||_2", fit.slope, -0.5 * c.analysis.delta + c.analysis.tol));
    // L^2([T, T_max]; L^6) of v_p for T at each octave
    Series horizon;
    for (std::size_t i = 0; i + c.solver.samples_per_octave < times.size(); i += c.solver.samples_per_octave)
      horizon.emplace_back(times[i], norm_spacetime(vp6, 2, times[i]).value);
    if (horizon.size() >= 3) {
      auto hf = fit_decay(horizon);
      summary["vp_horizon_fit"] = to_json(hf);
      write_series_csv(dir / "vp_horizon.csv", horizon, "vp_L2L6");
      std::cout << "v_p L2([T,T_max];L6) slope in T: " << show(hf.slope) << " (reference -1/2)\n";
    }
  } else {
    std::cout << "symbol has no nonresonant modes: calV and v_p vanish\n";
  }
  return finish(dir, summary, checks);
}

int cmd_operators(const ExperimentConfig& c) {
  fs::path dir = fs::path(c.out) / "operators";
  json summary = header("operators", c);
  std::vector<Check> checks;
  auto gauss = [](const Grid& g) { return sample_radial(g, [](double r) { return cplx(std::exp(-0.5 * r * r)); }); };
  auto gauss_c = [](const Grid& g) {
    return sample(g, [](const std::array<double, 3>& x) {
      return cplx(std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])));
    });
  };
  std::vector<std::vector<double>> mdfm;
  for (double t : {0.5, 1.0, 2.0}) {
    double r = mdfm_residual(gauss_c(Grid::cartesian(1, 512, 40)), t);
    mdfm.push_back({1, t, r});
    checks.push_back(at_most("MDFM residual d=1 t=" + show(t), r, 1e-6));
  }
  double r3 = mdfm_residual(gauss_c(Grid::cartesian(3, 64, 20)), 1.0);
  mdfm.push_back({3, 1.0, r3});
  checks.push_back(at_most("MDFM residual d=3 t=1", r3, 1e-6));
  write_csv(dir / "mdfm.csv", {"dim", "t", "residual"}, mdfm);

  Grid g = Grid::cartesian(1, 4096, 50);
  TesterFactory fam = [&](double a) { return default_testers(g, a, c.seed); };
  std::vector<double> ts{1, 4, 16, 64};
  std::vector<std::vector<double>> flat;
  for (double theta : {1.0, 1.5, 2.0})
    for (int n : {2, 5}) {
      auto p = probe_K_flatness(CutoffKernel::psi0(), theta, ts, n, fam);
      flat.push_back({theta, double(n), p.fit.slope, p.fit.r_squared});
      Check k{"K_psi0 flatness slope theta=" + show(theta) + " n=" + std::to_string(n),
              std::abs(p.fit.slope + 0.5 * theta) <= 0.1, p.fit.slope, -0.5 * theta, "within 0.1 of"};
      checks.push_back(k);
    }
  write_csv(dir / "flatness.csv", {"theta", "n", "slope", "r2"}, flat);

  // pointwise A_n and resolvent C_n bounds
  Grid g3 = Grid::cartesian(3, 32, 10);
  Field one = sample(g3, [](const std::array<double, 3>&) { return cplx(1.0); });
  double an_excess = 0, cn_excess = 0;
  for (int n : {-3, -1, 2, 5}) {
    for (double t : {0.5, 4.0, 32.0}) {
      Field a = multiply_An(one, t, n);
      Field b = B_weight(g3, t);
      for (std::size_t i = 0; i < a.size(); ++i)
        an_excess = std::max(an_excess, std::abs(a[i]) - (1 + 1 / std::abs(1 - 1.0 / n)) * std::norm(b[i]));
      Field f = gauss(Grid::radial(1023, 30));
      Field cf = resolvent_Cn(f, t, n);
      cn_excess = std::max(cn_excess, l2_norm(cf) / l2_norm(f) - 1);
    }
  }
  checks.push_back(at_most("A_n pointwise bound excess", an_excess, 1e-14));
  checks.push_back(at_most("C_n L2 contraction excess", cn_excess, 1e-12));

  std::vector<std::vector<double>> kernels;
  for (auto k : {CutoffKernel::psi0(), CutoffKernel::psi1(), CutoffKernel::psi2()}) {
    double h = 1e-4;
    double grad = std::abs(k.eval({h, 0, 0}) - k.eval({-h, 0, 0})) / (2 * h);
    kernels.push_back({double(k.kind), std::abs(k.eval({0, 0, 0})), grad});
    checks.push_back(at_most(k.name + " gradient at the origin", grad, 1e-3));
  }
  write_csv(dir / "kernels.csv", {"kernel", "abs_value_at_0", "gradient_at_0"}, kernels);
  return finish(dir, summary, checks);
}

int cmd_simulate(const ExperimentConfig& c) {
  fs::path dir = fs::path(c.out) / "simulate";
  FinalData data = make_data(c);
  SolverConfig sc = make_solver_config(c);
  FourierSymbol s = sc.nonlinearity.symbol.truncated(c.nonlinearity.n_max);
  double g1 = s[1].real();
  ProfileOptions o = make_profile_options(c);
  json summary = header("simulate", c);
  std::vector<Check> checks;
  if (c.solver.mode != "picard") {
    auto lead = c.solver.leading == "free" ? LeadingProfile::free : LeadingProfile::stationary_phase;
    auto run = [&](bool calV) {
      auto r = integrate_final_state(data, s, g1, sc, calV, o, lead);
      r.traj.config_hash = config_hash(c);
      return r;
    };
    auto r = run(c.solver.include_calV);
    write_archive(dir / "trajectory", r.traj, to_json(c));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.distance.size(); ++i)
      rows.push_back({r.distance[i].first, r.distance[i].second, r.distance_profile[i].second});
    write_csv(dir / "residual.csv", {"t", "distance", "distance_with_calV"}, rows);
    Series fitted;
    for (auto& p : (c.solver.include_calV ? r.distance_profile : r.distance))
      if (p.first >= c.analysis.fit_lo * (1 - 1e-12) && p.first <= c.analysis.fit_hi * (1 + 1e-12) &&
          p.first < c.solver.t_start * (1 - 1e-12))
        fitted.push_back(p);
    auto fit = fit_decay(fitted);
    auto v = rate_verdict(fit, c.analysis.delta, c.analysis.tol);
    summary["residual_fit"] = to_json(fit);
    summary["verdict"] = {{"b", v.b}, {"text", v.text}, {"uniqueness", v.meets_uniqueness}, {"full_rate", v.meets_full_rate}};
    summary["mass_drift_rate"] = r.mass_drift_rate;
    summary["steps"] = r.steps;
    std::cout << "residual decay b = " << show(v.b) << ": " << v.text << "\n";
    checks.push_back(at_least("residual decay exponent b", v.b, 0.75 - c.analysis.tol));
    if (c.solver.include_calV) {
      auto base = run(false);
      double with = fitted.empty() ? 0 : fitted.front().second;
      double without = 0;
      for (auto& p : base.distance)
        if (std::abs(p.first - fitted.front().first) < 1e-9 * p.first) without = p.second;
      summary["calV_pair"] = {{"t", fitted.front().first}, {"with", with}, {"without", without}};
      checks.push_back(at_most("residual with calV / without", with / without, 1.0));
    }
  }
  if (c.solver.mode != "final-state") {
    auto p = picard_iterate(data, s, g1, sc, c.solver.T, c.solver.T_max, c.solver.iters, o, c.analysis.b);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < p.differences.size(); ++k)
      rows.push_back({double(k + 1), p.differences[k], k >= 1 ? p.ratios[k - 1] : std::nan("")});
    write_csv(dir / "picard.csv", {"iteration", "difference", "ratio"}, rows);
    summary["picard"] = {{"ratios", p.ratios}, {"diverged", p.diverged}};
    double worst = p.ratios.empty() ? 0 : *std::max_element(p.ratios.begin(), p.ratios.end());
    checks.push_back(at_most("largest Picard contraction ratio", worst, 1.0));
    if (p.diverged) std::cout << "Picard iteration diverged\n";
  }
  return finish(dir, summary, checks);
}

std::vector<fs::path> summaries_under(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(p)) return {p};
  if (!fs::is_directory(p)) throw config_error("report: no such run directory " + p.string());
  for (auto& e : fs::recursive_directory_iterator(p))
    if (e.is_regular_file() && e.path().filename() == "summary.json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_report(const ExperimentConfig& c, const std::vector<std::string>& runs) {
  if (runs.empty()) throw config_error("report: give at least one run directory");
  std::vector<fs::path> files;
  for (auto& r : runs)
    for (auto& f : summaries_under(r)) files.push_back(f);
  if (files.empty()) throw config_error("report: no summary.json found under the given directories");
  std::ostringstream text;
  json all = json::array();
  int failures = 0;
  for (auto& f : files) {
    json s = read_json(f);
    text << "== " << s.value("command", "?") << " (" << f.string() << ")\n";
    for (auto& k : s.at("checks")) {
      bool pass = k.at("pass");
      failures += !pass;
      text << (pass ? "PASS " : "FAIL ") << k.at("name").get<std::string>() << ": " << show(k.at("value"))
           << " " << k.at("relation").get<std::string>() << " " << show(k.at("limit")) << "\n";
    }
    all.push_back({{"file", f.string()}, {"command", s.value("command", "")}, {"checks", s.at("checks")}});
  }
  text << (failures ? std::to_string(failures) + " check(s) failed\n" : "all checks passed\n");
  fs::path dir = fs::path(c.out);
  write_text(dir / "report.txt", text.str());
  write_json(dir / "report.json", {{"runs", all}, {"failures", failures}});
  std::cout << text.str();
  return failures ? failed : ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlsfs: final-state problem experiments for the critical-degree NLS"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  int threads = -1;
  app.add_option("--config", config_path, "experiment config (INI sections)")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "seed for probe testers");
  app.add_option("--threads", threads, "worker threads (default: NLSFS_THREADS or hardware)")
      ->check(CLI::NonNegativeNumber);

  auto* coeffs = app.add_subcommand("coeffs", "Fourier coefficient tables and decay fit");
  std::string family;
  std::optional<double> alpha, lambda;
  std::optional<int> nmax;
  coeffs->add_option("--family", family, "gauge | cos-power | sin-power | real-part | re-im-combo");
  coeffs->add_option("--alpha", alpha, "power for cos-power and sin-power");
  coeffs->add_option("--lambda", lambda, "gauge coupling or real-part scale");
  coeffs->add_option("--nmax", nmax, "truncation N_max");

  auto* profiles = app.add_subcommand("profiles", "asymptotic profiles at dyadic times");
  auto* operators = app.add_subcommand("operators", "operator identities and probes");

  auto* simulate = app.add_subcommand("simulate", "final-state run and/or Picard iteration");
  std::string mode, leading;
  std::optional<double> eps;
  bool calV = false;
  simulate->add_option("--mode", mode, "final-state | picard | both");
  simulate->add_option("--leading", leading, "stationary-phase | free");
  simulate->add_option("--eps", eps, "amplitude of the final datum");
  simulate->add_flag("--include-calV", calV, "start from u_p + V and report the paired run");

  auto* report = app.add_subcommand("report", "aggregate summaries into a pass/fail report");
  std::vector<std::string> runs;
  report->add_option("runs", runs, "run directories or summary files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (!out.empty()) c.out = out;
    if (seed) c.seed = *seed;
    if (threads >= 0) c.threads = threads;
    if (!family.empty()) c.nonlinearity.family = family;
    if (alpha) c.nonlinearity.alpha = *alpha;
    if (lambda) c.nonlinearity.lambda = *lambda;
    if (nmax) c.nonlinearity.n_max = *nmax;
    if (!mode.empty()) c.solver.mode = mode;
    if (!leading.empty()) c.solver.leading = leading;
    if (eps) c.data.eps = *eps;
    if (calV) c.solver.include_calV = true;
    validate(c);
    if (c.threads > 0) set_threads(c.threads);

    if (*coeffs) return cmd_coeffs(c);
    if (*profiles) return cmd_profiles(c);
    if (*operators) return cmd_operators(c);
    if (*simulate) return cmd_simulate(c);
    if (*report) return cmd_report(c, runs);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return failed;
  }
  return usage;
}
