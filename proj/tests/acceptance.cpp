// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "estimates.hpp"
#include "oracles.hpp"
#include "viscoflow/config.hpp"
#include "viscoflow/experiments.hpp"
#include "viscoflow/kkt.hpp"
#include "viscoflow/optimizer.hpp"

using namespace viscoflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

int failures = 0;

void criterion(const char* id, const char* title, double time_limit,
               const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string detail = o.detail;
  if (time_limit > 0.0 && secs > time_limit) {
    o.pass = false;
    detail += fmt("; runtime %.2f s exceeds %.0f s", secs, time_limit);
  }
  if (!o.pass) ++failures;
  std::printf("%s %-4s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, title, detail.c_str(), secs);
  std::fflush(stdout);
}

ExperimentConfig load(const char* name) {
  return parse_config(std::string(VF_CONFIG_DIR) + "/" + name);
}

// Shared by AC6, AC7 and AC9.
struct Reference {
  ExperimentConfig ecfg = load("reference.cfg");
  ProblemConfig p = make_problem(ecfg);
  CostConfig cost = make_cost(ecfg, p);
  TimeSeries g = make_control(ecfg, p);
  std::optional<ContinuationResult> path;
  double seconds = 0.0;

  const ContinuationResult& continuation_path() {
    if (!path) {
      const auto t0 = std::chrono::steady_clock::now();
      path = continuation(cost, p, make_optimize_options(ecfg, p));
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return *path;
  }
};

}  // namespace

int main() {
  Reference ref;

  criterion("AC1", "smoothing properties", 5.0, [] {
    const auto a = oracle::audit_smoothing(1'000'000, 7);
    std::string worst;
    for (int i = 0; i < oracle::SmoothingAudit::count; ++i)
      if (a.worst[i] == a.max()) worst = oracle::SmoothingAudit::names[i];
    return Outcome{a.max() <= 1e-12,
                   fmt("13 properties, 1e6 samples, worst violation %.3g", a.max()) + " (" + worst + ")"};
  });

  criterion("AC2", "T_rho Lipschitz constant 1/sigma", 10.0, [] {
    std::mt19937_64 rng(11);
    double worst = -INFINITY;
    for (double sigma : {0.1, 1.0, 10.0})
      for (int trial = 0; trial < 100; ++trial) {
        const double rho = oracle::log_uniform(rng, 1e-4, 1.0);
        const double scale = oracle::log_uniform(rng, 1e-3, 10.0);
        const ProblemConfig cfg(sigma, Mesh(64), TimeGrid(1.0, 1), SmoothingParam(rho));
        const Vector v1 = oracle::random_vector(63, rng, scale);
        const Vector v2 = oracle::random_vector(63, rng, scale);
        const double ratio = norm_V(t_rho_apply(v1, cfg) - t_rho_apply(v2, cfg), cfg.mesh) /
                             norm_Vstar(v1 - v2, cfg.mesh);
        worst = std::max(worst, ratio - 1.0 / sigma);
      }
    return Outcome{worst <= 1e-8, fmt("max ratio - 1/sigma = %.3g over 300 pairs", worst)};
  });

  criterion("AC3", "adjoint gradient vs central differences", 30.0, [] {
    const ExperimentConfig e = parse_config_string(
        "[problem]\nn_el = 16\nn_t = 16\nrho = 1e-2\n[cost]\ntarget = sine\ncontrol = sine\n");
    const ProblemConfig p = make_problem(e);
    const auto r = gradient_check(make_control(e, p), make_cost(e, p), p, e.grad_check.epsilons,
                                  10, e.grad_check.seed);
    return Outcome{r.max_best_rel_error <= 1e-6,
                   fmt("worst best-epsilon relative error %.3g over 10 directions",
                       r.max_best_rel_error)};
  });

  const ExperimentConfig sweep_cfg = load("sweep.cfg");
  const ProblemConfig sweep_p = make_problem(sweep_cfg);
  const TimeSeries sweep_g = make_control(sweep_cfg, sweep_p);
  std::optional<SweepResult> sweep;
  criterion("AC4", "sqrt(rho) convergence to the non-smooth state", 180.0, [&] {
    sweep = rho_sweep(sweep_g, sweep_p, sweep_cfg.sweep.rho_list, true);
    bool within = true;
    double worst_ratio = 0.0;
    for (const auto& en : sweep->entries) {
      within = within && en.err_L2IV <= en.bound_sqrt * 1.1;
      worst_ratio = std::max(worst_ratio, en.err_L2IV / en.bound_sqrt);
    }
    const double s = sweep->fitted_slope;
    const bool slope_ok = s >= 0.4 && s <= 0.6;
    std::string d = fmt("(a) max err/bound %.3g, (b) fitted slope %.4f", worst_ratio, s);
    if (!within) d += "; bound (a) violated";
    if (!slope_ok) d += "; slope outside [0.4, 0.6]";
    return Outcome{within && slope_ok, d};
  });

  criterion("AC5", "initial rate ||w_1||_V <= rho/sigma + 5 tau", 0.0, [&] {
    std::vector<double> rhos = sweep_cfg.sweep.rho_list;
    for (double r : default_rho_schedule()) rhos.push_back(r);
    const TimeSeries loads = to_loads(sweep_g, sweep_p.mesh);
    double worst = -INFINITY;
    for (double rho : rhos) {
      const ProblemConfig p = sweep_p.with_rho(rho);
      const StepResult s = step_regularized(Vector::Zero(p.mesh.nodes()), loads[1], p);
      worst = std::max(worst, norm_V(s.w, p.mesh) - (rho / p.sigma + 5.0 * p.grid.tau()));
    }
    return Outcome{worst <= 0.0, fmt("max ||w_1||_V - bound = %.3g over %.0f rho values", worst,
                                     static_cast<double>(rhos.size()))};
  });

  criterion("AC6", "a-priori space regularity bound", 0.0, [&] {
    // The configured control and the optimized control at every continuation level.
    std::vector<std::pair<TimeSeries, double>> cases{{ref.g, ref.p.rho.rho()}};
    for (const auto& L : ref.continuation_path().levels) cases.emplace_back(L.g, L.rho);
    double worst = 0.0;
    for (const auto& [g, rho] : cases) {
      const ProblemConfig p = ref.p.with_rho(rho);
      const Trajectory tr = solve_regularized(to_loads(g, p.mesh), p);
      const auto b = estimates::space_regularity(tr, g, p);
      worst = std::max(worst, b.lhs / (1.05 * b.rhs));
    }
    return Outcome{worst <= 1.0, fmt("max lhs/(1.05 rhs) = %.4f over %.0f controls", worst,
                                     static_cast<double>(cases.size()))};
  });

  criterion("AC7", "adjoint growth bound and sign identity", 0.0, [&] {
    double worst_growth = 0.0, worst_sign = INFINITY;
    for (const auto& L : ref.continuation_path().levels) {
      const ProblemConfig p = ref.p.with_rho(L.rho);
      const ReducedEvaluation ev = reduced_gradient(L.g, ref.cost, p);
      const auto b = estimates::adjoint_growth(ev.state, ev.adjoint, ref.cost, p);
      worst_growth = std::max(worst_growth, b.lhs / (1.05 * b.rhs));
      worst_sign = std::min(worst_sign, estimates::sign_identity_min(ev.adjoint, p));
    }
    return Outcome{worst_growth <= 1.0 && worst_sign >= -1e-10,
                   fmt("max lhs/(1.05 rhs) = %.4f, min sign identity = %.3g", worst_growth,
                       worst_sign)};
  });

  criterion("AC8", "non-smooth oracle residuals and rho -> 0 cross-check", 0.0, [&] {
    const TimeSeries loads = to_loads(ref.g, ref.p.mesh);
    const Trajectory ns = solve_nonsmooth(loads, ref.p);
    const InclusionResidual w = residual_inclusion(ns, loads, ref.p).worst;
    const double inc = std::max({w.dual_range, w.sign_consistency, w.force_balance});
    const ProblemConfig tiny = ref.p.with_rho(1e-8);
    const Trajectory sm = solve_regularized(loads, tiny);
    const double gap = oracle::l2v_distance(ns.w, sm.w, ref.p.mesh, ref.p.grid.tau());
    return Outcome{inc <= 1e-8 && gap <= 1e-4,
                   fmt("worst inclusion residual %.3g, ||w_admm - w_1e-8||_L2V = %.3g", inc, gap)};
  });

  criterion("AC9", "continuation end to end", 0.0, [&] {
    const ContinuationResult& r = ref.continuation_path();
    bool converged = true, monotone = true, decreasing = true;
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
      const auto& rep = r.levels[i].report;
      converged = converged && rep.converged;
      for (std::size_t t = 1; t < rep.objective.size(); ++t)
        monotone = monotone &&
                   rep.objective[t] <= rep.objective[t - 1] + objective_rounding(rep.objective[t - 1]);
      if (i > 0) decreasing = decreasing && rep.kkt->r_comp < r.levels[i - 1].report.kkt->r_comp;
    }
    const KktReport& k = *r.levels.back().report.kkt;
    const bool ok = converged && monotone && decreasing && k.r_gradient <= 1e-7 &&
                    k.r_comp <= 10.0 * k.comp_bound && ref.seconds < 300.0;
    std::string d = fmt("r_gradient %.3g, r_comp %.3g <= 10*%.3g", k.r_gradient, k.r_comp,
                        k.comp_bound);
    d += std::string(", converged ") + (converged ? "yes" : "no") + ", monotone " +
         (monotone ? "yes" : "no") + ", r_comp decreasing " + (decreasing ? "yes" : "no") +
         fmt(", continuation %.2f s", ref.seconds);
    return Outcome{ok, d};
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
