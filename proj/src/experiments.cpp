#include "viscoflow/experiments.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>

#include "viscoflow/errors.hpp"
#include "viscoflow/presets.hpp"

namespace viscoflow {

namespace fs = std::filesystem;
using nlohmann::json;

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope needs two or more matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SweepResult rho_sweep(const TimeSeries& g, const ProblemConfig& cfg,
                      const std::vector<double>& rho_list, bool parallel) {
  check_series(g, cfg, "sweep control");
  const TimeSeries loads = to_loads(g, cfg.mesh);
  const Trajectory oracle = solve_nonsmooth(loads, cfg);
  const int nt = cfg.grid.steps();
  const double tau = cfg.grid.tau();

  SweepResult out;
  out.entries.resize(rho_list.size());
  auto run = [&](std::size_t i) {
    const ProblemConfig c = cfg.with_rho(rho_list[i]);
    const Trajectory tr = solve_regularized(loads, c);
    SweepEntry& e = out.entries[i];
    e.rho = rho_list[i];
    double l2 = 0.0;
    for (int k = 1; k <= nt; ++k) {
      const double d = norm_V(tr.w[k] - oracle.w[k], cfg.mesh);
      l2 += tau * d * d;
      e.err_CIV = std::max(e.err_CIV, norm_V(tr.z[k] - oracle.z[k], cfg.mesh));
    }
    e.err_L2IV = std::sqrt(l2);
    e.bound_sqrt = std::sqrt(4.0 * cfg.grid.T() * rho_list[i] / cfg.sigma);
    e.initial_rate_V = norm_V(tr.w[1], cfg.mesh);
  };

  if (parallel && rho_list.size() > 1) {
    std::vector<std::exception_ptr> errors(rho_list.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < rho_list.size(); ++i)
      pool.emplace_back([&, i] {
        try {
          run(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t i = 0; i < rho_list.size(); ++i) run(i);
  }

  std::vector<double> rs, es;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    auto& e = out.entries[i];
    e.slope_local = std::numeric_limits<double>::quiet_NaN();
    if (i > 0) {
      const auto& p = out.entries[i - 1];
      e.slope_local = std::log(e.err_L2IV / p.err_L2IV) / std::log(e.rho / p.rho);
    }
    rs.push_back(e.rho);
    es.push_back(e.err_L2IV);
  }
  out.fitted_slope = rs.size() >= 2 ? loglog_slope(rs, es) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

GradCheckResult gradient_check(const TimeSeries& g, const CostConfig& cost,
                               const ProblemConfig& cfg, const std::vector<double>& epsilons,
                               int directions, unsigned seed) {
  if (epsilons.empty() || directions < 1)
    throw std::invalid_argument("gradient check needs epsilons and at least one direction");
  const ReducedEvaluation base = reduced_gradient(g, cost, cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  GradCheckResult res;
  res.epsilons = epsilons;
  res.worst_rel_error.assign(epsilons.size(), 0.0);
  for (int d = 0; d < directions; ++d) {
    TimeSeries dir = zero_series(cfg.mesh, cfg.grid);
    for (int k = 1; k <= cfg.grid.steps(); ++k)
      for (Eigen::Index i = 0; i < dir[k].size(); ++i) dir[k][i] = normal(rng);
    const double nrm = h1_norm(dir, cfg.mesh, cfg.grid);
    for (auto& v : dir) v /= nrm;
    const double predicted = h1_inner(base.gradient, dir, cfg.mesh, cfg.grid);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
      TimeSeries gp(g.size()), gm(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) {
        gp[k] = g[k] + epsilons[e] * dir[k];
        gm[k] = g[k] - epsilons[e] * dir[k];
      }
      const double fd = (reduced_objective(gp, cost, cfg).objective -
                         reduced_objective(gm, cost, cfg).objective) /
                        (2.0 * epsilons[e]);
      const double rel = std::abs(fd - predicted) / std::max(std::abs(predicted), 1e-300);
      res.worst_rel_error[e] = std::max(res.worst_rel_error[e], rel);
      best = std::min(best, rel);
    }
    res.best_rel_error.push_back(best);
    res.max_best_rel_error = std::max(res.max_best_rel_error, best);
  }
  return res;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

fs::path output_dir(const ExperimentConfig& cfg, const CommandOptions& opts) {
  fs::path dir = opts.out_dir ? fs::path(*opts.out_dir) : fs::path(cfg.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

// CSV with a header row, data rows and a trailing "# key=value" block.
class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  void finish(const std::string& command, const ExperimentConfig& cfg) {
    out_ << "# command=" << command << '\n';
    for (const auto& [k, v] : config_key_values(cfg)) out_ << "# " << k << '=' << v << '\n';
    out_.close();
    if (!out_) throw IoError("failed writing '" + path_.string() + "'");
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json config_json(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : config_key_values(cfg)) j[k] = v;
  return j;
}

// NaN is not representable in JSON.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_series(CsvFile& csv, const TimeSeries& s, const ProblemConfig& p) {
  for (int k = 0; k <= p.grid.steps(); ++k)
    for (int i = 0; i < p.mesh.nodes(); ++i)
      csv.row({std::to_string(k), num(p.grid.t(k)), std::to_string(i), num(p.mesh.x(i)),
               num(s[k][i])});
}

struct Verdict {
  std::vector<std::pair<std::string, bool>> checks;
  void add(std::string name, bool ok) { checks.emplace_back(std::move(name), ok); }
  bool ok() const {
    for (const auto& c : checks)
      if (!c.second) return false;
    return true;
  }
  json to_json() const {
    json j = json::object();
    for (const auto& [n, ok] : checks) j[n] = ok;
    return j;
  }
};

int finish(const Verdict& v, const CommandOptions& opts, std::ostream& log) {
  for (const auto& [n, ok] : v.checks) log << "  " << (ok ? "ok    " : "FAILED") << ' ' << n << '\n';
  return (opts.assert_thresholds && !v.ok()) ? exit_threshold : exit_ok;
}

constexpr double kInclusionTol = 1e-8;
constexpr double kSignTol = 1e-10;
constexpr double kUnclassifiedMax = 0.01;

json kkt_json(const KktReport& r) {
  json j = {{"r_state", r.r_state},     {"r_adjoint", r.r_adjoint}, {"r_gradient", r.r_gradient},
            {"r_comp", r.r_comp},       {"comp_bound", r.comp_bound}, {"sign_u_xi", r.sign_u_xi},
            {"sign_q_xi", r.sign_q_xi}, {"cone_c", r.cone_c}};
  json reg = json::object();
  for (int i = 0; i < regime_count; ++i) {
    const auto name = std::string(regime_name(static_cast<Regime>(i)));
    reg[name] = {{"count", r.regimes.stats[i].count},
                 {"fraction", r.regimes.fraction(static_cast<Regime>(i))},
                 {"violation", r.regimes.stats[i].violation}};
  }
  j["regimes"] = reg;
  return j;
}

}  // namespace

int cmd_solve(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const ProblemConfig p = make_problem(cfg);
  const TimeSeries g = make_control(cfg, p);
  const TimeSeries loads = to_loads(g, p.mesh);
  const bool nonsmooth = cfg.solve.solver == "nonsmooth";
  const Trajectory tr = nonsmooth ? solve_nonsmooth(loads, p) : solve_regularized(loads, p);

  const fs::path dir = output_dir(cfg, opts);
  std::vector<std::string> header{"k", "t", "node", "x", "z", "w"};
  if (nonsmooth) header.push_back("dual");
  CsvFile csv(dir / "solve.csv", header);
  double max_w = 0.0, max_z = 0.0;
  for (int k = 0; k <= p.grid.steps(); ++k)
    for (int i = 0; i < p.mesh.nodes(); ++i) {
      std::vector<std::string> r{std::to_string(k), num(p.grid.t(k)), std::to_string(i),
                                 num(p.mesh.x(i)), num(tr.z[k][i]), num(tr.w[k][i])};
      if (nonsmooth) r.push_back(num((*tr.dual)[k][i]));
      csv.row(r);
      max_w = std::max(max_w, std::abs(tr.w[k][i]));
      max_z = std::max(max_z, std::abs(tr.z[k][i]));
    }
  csv.finish("solve", cfg);

  long iters = 0;
  for (int it : tr.iterations) iters += it;
  json j = {{"command", "solve"}, {"solver", cfg.solve.solver}, {"max_abs_w", max_w},
            {"max_abs_z", max_z}, {"inner_iterations", iters}};
  Verdict v;
  if (nonsmooth) {
    const InclusionReport inc = residual_inclusion(tr, loads, p);
    j["inclusion"] = {{"dual_range", inc.worst.dual_range},
                      {"sign_consistency", inc.worst.sign_consistency},
                      {"force_balance", inc.worst.force_balance}};
    v.add("inclusion residuals <= 1e-8", inc.worst.dual_range <= kInclusionTol &&
                                             inc.worst.sign_consistency <= kInclusionTol &&
                                             inc.worst.force_balance <= kInclusionTol);
  }
  v.add("state finite", std::isfinite(max_w) && std::isfinite(max_z));
  j["checks"] = v.to_json();
  j["config"] = config_json(cfg);
  write_json(dir / "solve.json", j);
  log << "solve (" << cfg.solve.solver << "): max|w| = " << max_w << ", max|z| = " << max_z << '\n';
  return finish(v, opts, log);
}

int cmd_grad_check(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const ProblemConfig p = make_problem(cfg);
  const CostConfig cost = make_cost(cfg, p);
  const TimeSeries g = make_control(cfg, p);
  const GradCheckResult r = gradient_check(g, cost, p, cfg.grad_check.epsilons,
                                           cfg.grad_check.directions, cfg.grad_check.seed);
  const fs::path dir = output_dir(cfg, opts);
  CsvFile csv(dir / "grad_check.csv", {"epsilon", "rel_error"});
  for (std::size_t e = 0; e < r.epsilons.size(); ++e)
    csv.row({num(r.epsilons[e]), num(r.worst_rel_error[e])});
  csv.finish("grad-check", cfg);

  Verdict v;
  v.add("best relative error <= rel_tol in every direction",
        r.max_best_rel_error <= cfg.grad_check.rel_tol);
  json j = {{"command", "grad-check"},
            {"best_rel_error_per_direction", r.best_rel_error},
            {"max_best_rel_error", r.max_best_rel_error},
            {"rel_tol", cfg.grad_check.rel_tol},
            {"checks", v.to_json()},
            {"config", config_json(cfg)}};
  write_json(dir / "grad_check.json", j);
  log << "grad-check: worst direction best relative error = " << r.max_best_rel_error << '\n';
  return finish(v, opts, log);
}

int cmd_rho_sweep(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const ProblemConfig p = make_problem(cfg);
  const TimeSeries g = make_control(cfg, p);
  const SweepResult r = rho_sweep(g, p, cfg.sweep.rho_list, cfg.sweep.parallel);
  const fs::path dir = output_dir(cfg, opts);
  CsvFile csv(dir / "rho_sweep.csv", {"rho", "err_L2IV", "err_CIV", "bound_sqrt", "slope_local"});
  bool within = true, rate_ok = true;
  json rows = json::array();
  for (const auto& e : r.entries) {
    csv.row({num(e.rho), num(e.err_L2IV), num(e.err_CIV), num(e.bound_sqrt), num(e.slope_local)});
    within = within && e.err_L2IV <= e.bound_sqrt * (1.0 + cfg.sweep.slack);
    rate_ok = rate_ok && e.initial_rate_V <= e.rho / p.sigma + 5.0 * p.grid.tau();
    rows.push_back({{"rho", e.rho}, {"err_L2IV", e.err_L2IV}, {"err_CIV", e.err_CIV},
                    {"bound_sqrt", e.bound_sqrt}, {"slope_local", jnum(e.slope_local)},
                    {"initial_rate_V", e.initial_rate_V}});
  }
  csv.finish("rho-sweep", cfg);

  Verdict v;
  v.add("err_L2IV <= bound_sqrt*(1+slack)", within);
  v.add("fitted slope in [0.4, 0.6]", r.fitted_slope >= 0.4 && r.fitted_slope <= 0.6);
  v.add("initial rate ||w_1||_V <= rho/sigma + 5 tau", rate_ok);
  json j = {{"command", "rho-sweep"}, {"entries", rows}, {"fitted_slope", jnum(r.fitted_slope)},
            {"checks", v.to_json()}, {"config", config_json(cfg)}};
  write_json(dir / "rho_sweep.json", j);
  log << "rho-sweep: fitted slope = " << r.fitted_slope << '\n';
  return finish(v, opts, log);
}

int cmd_optimize(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const ProblemConfig p = make_problem(cfg);
  const CostConfig cost = make_cost(cfg, p);
  const OptimizeOptions o = make_optimize_options(cfg, p);
  const ContinuationResult r = continuation(cost, p, o);
  const fs::path dir = output_dir(cfg, opts);

  CsvFile csv(dir / "optimize.csv",
              {"rho", "iterations", "converged", "objective", "grad_norm", "r_state", "r_adjoint",
               "r_gradient", "r_comp", "comp_bound", "sign_u_xi", "sign_q_xi", "cone_c",
               "unclassified_fraction", "step_change_H1"});
  bool monotone = true, comp_decreasing = true, sign_ok = true;
  json levels = json::array();
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const auto& L = r.levels[i];
    const KktReport& k = *L.report.kkt;
    double change = std::numeric_limits<double>::quiet_NaN();
    if (i > 0) {
      TimeSeries d(L.g.size());
      for (std::size_t t = 0; t < d.size(); ++t) d[t] = L.g[t] - r.levels[i - 1].g[t];
      change = h1_norm(d, p.mesh, p.grid);
      comp_decreasing = comp_decreasing && k.r_comp < r.levels[i - 1].report.kkt->r_comp;
    }
    for (std::size_t t = 1; t < L.report.objective.size(); ++t)
      monotone = monotone && L.report.objective[t] <= L.report.objective[t - 1] +
                                 objective_rounding(L.report.objective[t - 1]);
    sign_ok = sign_ok && k.sign_u_xi <= kSignTol;
    const double unclassified = k.regimes.fraction(Regime::unclassified);
    csv.row({num(L.rho), std::to_string(L.report.iterations), L.report.converged ? "1" : "0",
             num(L.report.objective.back()), num(L.report.grad_norm.back()), num(k.r_state),
             num(k.r_adjoint), num(k.r_gradient), num(k.r_comp), num(k.comp_bound),
             num(k.sign_u_xi), num(k.sign_q_xi), num(k.cone_c), num(unclassified), num(change)});
    json lj = kkt_json(k);
    lj["rho"] = L.rho;
    lj["iterations"] = L.report.iterations;
    lj["converged"] = L.report.converged;
    lj["objective"] = L.report.objective.back();
    lj["grad_norm"] = L.report.grad_norm.back();
    lj["step_change_H1"] = jnum(change);
    levels.push_back(lj);
  }
  csv.finish("optimize", cfg);

  CsvFile ctrl(dir / "optimize_control.csv", {"k", "t", "node", "x", "g"});
  write_series(ctrl, r.levels.back().g, p);
  ctrl.finish("optimize", cfg);

  const auto& last = r.levels.back();
  const KktReport& kf = *last.report.kkt;
  Verdict v;
  v.add("every level converged", [&] {
    for (const auto& L : r.levels)
      if (!L.report.converged) return false;
    return true;
  }());
  v.add("final r_gradient <= 10*opt_tol", kf.r_gradient <= 10.0 * o.opt_tol);
  v.add("objective monotone across accepted steps", monotone);
  v.add("r_comp decreasing across rho levels", comp_decreasing);
  v.add("final r_comp <= 10*comp_bound", kf.r_comp <= 10.0 * kf.comp_bound);
  v.add("sign_u_xi <= 1e-10 at every level", sign_ok);
  json j = {{"command", "optimize"},
            {"levels", levels},
            {"nonsmooth_gap_L2V", r.nonsmooth_gap_L2V},
            {"nonsmooth_bound", r.nonsmooth_bound},
            {"checks", v.to_json()},
            {"config", config_json(cfg)}};
  write_json(dir / "optimize.json", j);
  log << "optimize: " << r.levels.size() << " levels, final objective "
      << last.report.objective.back() << ", r_gradient " << kf.r_gradient << '\n';
  return finish(v, opts, log);
}

int cmd_check_kkt(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const ProblemConfig p = make_problem(cfg);
  const CostConfig cost = make_cost(cfg, p);
  const TimeSeries g = make_control(cfg, p);
  const ReducedEvaluation ev = reduced_gradient(g, cost, p);
  const bool nonsmooth = cfg.solve.solver == "nonsmooth";
  const Trajectory tr = nonsmooth ? solve_nonsmooth(to_loads(g, p.mesh), p) : ev.state;
  const KktReport k = check_nonsmooth_kkt(tr, g, ev.adjoint, cost, p, cfg.kkt.eps);

  const fs::path dir = output_dir(cfg, opts);
  CsvFile csv(dir / "kkt.csv", {"field", "value"});
  const std::pair<const char*, double> fields[] = {
      {"r_state", k.r_state},     {"r_adjoint", k.r_adjoint}, {"r_gradient", k.r_gradient},
      {"r_comp", k.r_comp},       {"comp_bound", k.comp_bound}, {"sign_u_xi", k.sign_u_xi},
      {"sign_q_xi", k.sign_q_xi}, {"cone_c", k.cone_c}};
  for (const auto& [n, val] : fields) csv.row({n, num(val)});
  for (int i = 0; i < regime_count; ++i) {
    const auto name = std::string(regime_name(static_cast<Regime>(i)));
    csv.row({"count_" + name, std::to_string(k.regimes.stats[i].count)});
    csv.row({"fraction_" + name, num(k.regimes.fraction(static_cast<Regime>(i)))});
    csv.row({"violation_" + name, num(k.regimes.stats[i].violation)});
  }
  csv.finish("check-kkt", cfg);

  Verdict v;
  v.add("sign_u_xi <= 1e-10", k.sign_u_xi <= kSignTol);
  v.add("unclassified fraction <= 1%", k.regimes.fraction(Regime::unclassified) <= kUnclassifiedMax);
  if (nonsmooth) v.add("r_state <= 1e-8", k.r_state <= kInclusionTol);
  json j = kkt_json(k);
  j["command"] = "check-kkt";
  j["checks"] = v.to_json();
  j["config"] = config_json(cfg);
  write_json(dir / "kkt.json", j);
  log << "check-kkt: r_gradient " << k.r_gradient << ", r_comp " << k.r_comp << ", cone_c "
      << k.cone_c << '\n';
  return finish(v, opts, log);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "grad-check", "rho-sweep", "optimize",
                                              "check-kkt"};
  return names;
}

int run_command(std::string_view name, const ExperimentConfig& cfg, const CommandOptions& opts,
                std::ostream& log) {
  using Fn = int (*)(const ExperimentConfig&, const CommandOptions&, std::ostream&);
  Fn fn = nullptr;
  if (name == "solve") fn = cmd_solve;
  else if (name == "grad-check") fn = cmd_grad_check;
  else if (name == "rho-sweep") fn = cmd_rho_sweep;
  else if (name == "optimize") fn = cmd_optimize;
  else if (name == "check-kkt") fn = cmd_check_kkt;
  else throw UsageError("unknown command '" + std::string(name) + "'");
  try {
    return fn(cfg, opts, log);
  } catch (const SolverError& e) {
    log << "solver error: " << e.what() << '\n';
    return exit_solver;
  } catch (const IoError& e) {
    log << "io error: " << e.what() << '\n';
    return exit_io;
  }
}

}  // namespace viscoflow
