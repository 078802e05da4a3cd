#pragma once

#include <optional>
#include <vector>

#include "viscoflow/adjoint.hpp"
#include "viscoflow/kkt.hpp"

namespace viscoflow {

/// ρ_i = 1e-1·2^{-i}, i = 0..levels-1.
std::vector<double> default_rho_schedule(int levels = 10);

struct OptimizeOptions {
  int max_outer = 5000;
  double opt_tol = 1e-8;    // stop when the projected H¹ gradient norm drops below
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;
  std::optional<TimeSeries> prox_center;  // adds ½‖g − center‖²_{H¹}
  std::optional<double> delta;            // H¹ trust ball around the center (0 if none)
  std::vector<double> rho_schedule = default_rho_schedule();
  double kkt_eps = 0.05;

  /// Throws std::invalid_argument on out-of-range values or a schedule that is
  /// empty or not strictly decreasing.
  void validate() const;
};

struct OptimizeReport {
  std::vector<double> objective;  // J at every iterate, starting with g0
  std::vector<double> grad_norm;  // stationarity measure at every iterate
  std::vector<double> step;       // accepted step per iteration
  int iterations = 0;
  bool converged = false;
  std::vector<int> iterations_per_rho;
  std::optional<KktReport> kkt;   // evaluated at the returned control
};

struct MinimizeResult {
  TimeSeries g;
  OptimizeReport report;
};

/// Rounding allowance 10·ε·|J| used by the line search: objective values that
/// differ by less are treated as equal.
double objective_rounding(double objective);

/// Projected gradient descent with Armijo backtracking on
/// g ↦ J(S_ρ(g), g) [+ ½‖g − center‖²] in the H¹(I,H) geometry. The trial step
/// starts from a Barzilai–Borwein estimate. Throws SolverError if a line search
/// fails after max_backtracks reductions.
MinimizeResult minimize_smoothed(SmoothingParam rho, const TimeSeries& g0, const CostConfig& cost,
                                 const ProblemConfig& cfg, const OptimizeOptions& opts);

/// Euclidean projection onto {g : ‖g − center‖_{H¹} ≤ delta}.
TimeSeries project_ball(const TimeSeries& g, const TimeSeries& center, double delta,
                        const Mesh& mesh, const TimeGrid& grid);

struct ContinuationLevel {
  double rho = 0.0;
  TimeSeries g;
  OptimizeReport report;
};

struct ContinuationResult {
  std::vector<ContinuationLevel> levels;
  // Final control pushed through the regularized and non-smooth solvers.
  double nonsmooth_gap_L2V = 0.0;   // ‖w_ρ − w‖_{L²(I,V)}
  double nonsmooth_bound = 0.0;     // sqrt(4T|Ω|ρ/σ)
};

/// Warm-started minimize_smoothed along opts.rho_schedule, starting from g0
/// (zero if empty).
ContinuationResult continuation(const CostConfig& cost, const ProblemConfig& cfg,
                                const OptimizeOptions& opts, const TimeSeries& g0 = {});

}  // namespace viscoflow
