#include "viscoflow/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "viscoflow/errors.hpp"

namespace viscoflow {

std::vector<double> default_rho_schedule(int levels) {
  std::vector<double> s;
  for (int i = 0; i < levels; ++i) s.push_back(1e-1 * std::ldexp(1.0, -i));
  return s;
}

void OptimizeOptions::validate() const {
  if (max_outer < 0) throw std::invalid_argument("max_outer must be non-negative");
  if (!(opt_tol > 0.0)) throw std::invalid_argument("opt_tol must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("armijo_c must lie in (0, 1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink must lie in (0, 1)");
  if (delta && !(*delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (rho_schedule.empty()) throw std::invalid_argument("rho schedule is empty");
  for (std::size_t i = 0; i < rho_schedule.size(); ++i) {
    if (!(rho_schedule[i] > 0.0)) throw std::invalid_argument("rho schedule entries must be positive");
    if (i && !(rho_schedule[i] < rho_schedule[i - 1]))
      throw std::invalid_argument("rho schedule must be strictly decreasing");
  }
}

TimeSeries project_ball(const TimeSeries& g, const TimeSeries& center, double delta,
                        const Mesh& mesh, const TimeGrid& grid) {
  TimeSeries d(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) d[k] = g[k] - center[k];
  const double nrm = h1_norm(d, mesh, grid);
  if (nrm <= delta) return g;
  const double s = delta / nrm;
  TimeSeries out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = center[k] + s * d[k];
  return out;
}

namespace {

TimeSeries axpy(const TimeSeries& x, double a, const TimeSeries& y) {
  TimeSeries out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + a * y[k];
  return out;
}

TimeSeries diff(const TimeSeries& a, const TimeSeries& b) { return axpy(a, -1.0, b); }

}  // namespace

double objective_rounding(double objective) {
  return 10.0 * std::numeric_limits<double>::epsilon() * std::abs(objective);
}

MinimizeResult minimize_smoothed(SmoothingParam rho, const TimeSeries& g0, const CostConfig& cost,
                                 const ProblemConfig& base, const OptimizeOptions& opts) {
  opts.validate();
  const ProblemConfig cfg = base.with_rho(rho.rho());
  check_series(g0, cfg, "initial control");
  if (g0.front().cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("initial control must vanish at t = 0");
  cost.validate(cfg);
  const Mesh& mesh = cfg.mesh;
  const TimeGrid& grid = cfg.grid;

  std::optional<ProxTerm> prox;
  if (opts.prox_center) {
    check_series(*opts.prox_center, cfg, "prox center");
    prox = ProxTerm{*opts.prox_center};
  }
  const ProxTerm* prox_ptr = prox ? &*prox : nullptr;
  const TimeSeries center = opts.prox_center ? *opts.prox_center : zero_series(mesh, grid);
  auto project = [&](const TimeSeries& g) {
    return opts.delta ? project_ball(g, center, *opts.delta, mesh, grid) : g;
  };

  MinimizeResult res;
  res.g = project(g0);
  ReducedEvaluation ev = reduced_gradient(res.g, cost, cfg, prox_ptr);
  OptimizeReport& rep = res.report;

  auto stationarity = [&](const TimeSeries& g, const TimeSeries& grad) {
    if (!opts.delta) return h1_norm(grad, mesh, grid);
    return h1_norm(diff(g, project(axpy(g, -1.0, grad))), mesh, grid);
  };

  double step = 1.0;
  TimeSeries g_prev, grad_prev;
  double gnorm = stationarity(res.g, ev.gradient);
  rep.objective.push_back(ev.objective);
  rep.grad_norm.push_back(gnorm);

  while (gnorm > opts.opt_tol && rep.iterations < opts.max_outer) {
    if (!g_prev.empty()) {
      // Barzilai–Borwein: s = (Δg, Δg)/(Δg, Δr) in the H¹ inner product.
      const TimeSeries dg = diff(res.g, g_prev);
      const TimeSeries dr = diff(ev.gradient, grad_prev);
      const double num = h1_inner(dg, dg, mesh, grid);
      const double den = h1_inner(dg, dr, mesh, grid);
      step = den > 0.0 ? std::clamp(num / den, 1e-4, 1e4) : 1.0;
    }

    bool accepted = false;
    TimeSeries trial;
    ReducedEvaluation trial_ev;
    for (int b = 0; b <= opts.max_backtracks; ++b, step *= opts.shrink) {
      trial = project(axpy(res.g, -step, ev.gradient));
      trial_ev = reduced_objective(trial, cost, cfg, prox_ptr);
      // J(g⁺) ≤ J(g) + c·(r, g⁺ − g); equals −c·s‖r‖² without projection.
      // Near a minimizer the predicted decrease drops below the rounding
      // level of J, which is allowed for so that BB steps keep going.
      const double decrease = h1_inner(ev.gradient, diff(trial, res.g), mesh, grid);
      if (trial_ev.objective <= ev.objective + opts.armijo_c * decrease +
                                    objective_rounding(ev.objective)) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw SolverError("line search stalled at rho = " + std::to_string(rho.rho()) +
                            ", gradient norm " + std::to_string(gnorm),
                        gnorm, rep.iterations);

    g_prev = std::move(res.g);
    grad_prev = std::move(ev.gradient);
    res.g = std::move(trial);
    ev = reduced_gradient(res.g, cost, cfg, prox_ptr);
    gnorm = stationarity(res.g, ev.gradient);
    ++rep.iterations;
    rep.step.push_back(step);
    rep.objective.push_back(ev.objective);
    rep.grad_norm.push_back(gnorm);
  }
  rep.converged = gnorm <= opts.opt_tol;
  rep.iterations_per_rho.push_back(rep.iterations);
  rep.kkt = check_nonsmooth_kkt(ev.state, res.g, ev.adjoint, cost, cfg, opts.kkt_eps);
  return res;
}

ContinuationResult continuation(const CostConfig& cost, const ProblemConfig& cfg,
                                const OptimizeOptions& opts, const TimeSeries& g0) {
  opts.validate();
  ContinuationResult out;
  TimeSeries g = g0.empty() ? zero_series(cfg.mesh, cfg.grid) : g0;
  for (double rho : opts.rho_schedule) {
    MinimizeResult r = minimize_smoothed(SmoothingParam(rho), g, cost, cfg, opts);
    g = r.g;
    out.levels.push_back({rho, std::move(r.g), std::move(r.report)});
  }

  const double rho_final = opts.rho_schedule.back();
  const ProblemConfig fine = cfg.with_rho(rho_final);
  const TimeSeries loads = to_loads(g, cfg.mesh);
  const Trajectory smooth = solve_regularized(loads, fine);
  const Trajectory exact = solve_nonsmooth(loads, fine);
  double e = 0.0;
  for (int k = 1; k <= cfg.grid.steps(); ++k) {
    const double d = norm_V(smooth.w[k] - exact.w[k], cfg.mesh);
    e += cfg.grid.tau() * d * d;
  }
  out.nonsmooth_gap_L2V = std::sqrt(e);
  out.nonsmooth_bound = std::sqrt(4.0 * cfg.grid.T() * rho_final / cfg.sigma);  // |Ω| = 1
  return out;
}

}  // namespace viscoflow
