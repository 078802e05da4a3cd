#pragma once

#include <optional>
#include <vector>

#include "viscoflow/fem1d.hpp"
#include "viscoflow/smoothing.hpp"

namespace viscoflow {

/// Uniform grid t_k = k·tau, k = 0..n_t, on [0, T].
class TimeGrid {
 public:
  /// Throws std::invalid_argument unless T > 0 and n_t ≥ 1.
  TimeGrid(double T, int n_t);

  double T() const noexcept { return T_; }
  int steps() const noexcept { return n_t_; }
  double tau() const noexcept { return T_ / n_t_; }
  double t(int k) const noexcept { return k * tau(); }

 private:
  double T_;
  int n_t_;
};

/// A field per time level, index k = 0..n_t.
using TimeSeries = std::vector<Vector>;

TimeSeries zero_series(const Mesh& mesh, const TimeGrid& grid);

struct NewtonOptions {
  double tol = 1e-11;  // absolute ∞-norm of the nonlinear residual
  int max_iter = 200;  // cold starts at small ρ converge slowly
  double armijo_c = 1e-4;
  int max_backtracks = 60;
};

struct AdmmOptions {
  double tol = 1e-10;           // max(primal, dual) residual, ∞-norm
  int max_iter = 200000;
  double beta_scale = 1.0;      // penalty β = beta_scale·σ/h
  double relaxation = 1.0;
  double tol_active = 1e-8;     // |w_i| above this counts as slip
  bool polish = true;           // exact solve on the identified active set
};

/// Everything the forward, sensitivity and adjoint solvers need.
struct ProblemConfig {
  /// Throws std::invalid_argument unless sigma is finite and > 0.
  ProblemConfig(double sigma, Mesh mesh, TimeGrid grid, SmoothingParam rho);

  double sigma;
  Mesh mesh;
  TimeGrid grid;
  SmoothingParam rho;
  NewtonOptions newton;
  AdmmOptions admm;

  ProblemConfig with_rho(double r) const;
};

/// z[k] for k = 0..n_t with z[0] = 0 and z[k] = z[k-1] + tau·w[k]. w[0] is a
/// zero placeholder so that w[k] is the rate on (t_{k-1}, t_k]. dual[k] is the
/// nodal selection f ∈ ∂|w[k]| produced by the non-smooth solver.
struct Trajectory {
  TimeSeries z;
  TimeSeries w;
  std::optional<TimeSeries> dual;
  std::vector<int> iterations;  // inner solver iterations per step (0 at k = 0)
};

/// Converts nodal controls g[k] into load vectors M·g[k].
TimeSeries to_loads(const TimeSeries& g_nodal, const Mesh& mesh);

struct MonotoneSolve {
  Vector w;
  double residual = 0.0;
  int iterations = 0;
};

/// Solves c·K w + M_L·|w|'_ρ = rhs by damped Newton with Armijo backtracking on
/// the convex energy ½c·wᵀKw + h·Σ|w_i|_ρ − wᵀrhs, starting from w0.
/// Throws SolverError if the residual is not below opts.tol in opts.max_iter
/// iterations.
MonotoneSolve solve_monotone(double c, const Vector& rhs, const Vector& w0, const Mesh& mesh,
                             SmoothingParam rho, const NewtonOptions& opts);

/// w = T_ρ(v): solves σKw + M_L|w|'_ρ = v for a load vector v.
Vector t_rho_apply(const Vector& v, const ProblemConfig& cfg);

struct StepResult {
  Vector z;
  Vector w;
  Vector dual;  // empty for the regularized step
  int iterations = 0;
};

/// One implicit Euler step of ż = T_ρ(g + Δz): solves
/// σKw + M_L|w|'_ρ + K(z_prev + tau·w) = load and sets z = z_prev + tau·w.
/// w_guess seeds Newton (zero if empty).
StepResult step_regularized(const Vector& z_prev, const Vector& load, const ProblemConfig& cfg,
                            const Vector& w_guess = Vector());

/// Discrete S_ρ. loads[0] must be zero.
Trajectory solve_regularized(const TimeSeries& loads, const ProblemConfig& cfg);

/// Warm-start state carried between ADMM steps.
struct AdmmState {
  Vector y;
  Vector u;
};

/// One implicit Euler step of the inclusion: finds w and f with
/// σKw + M_L f + K(z_prev + tau·w) = load, f_i ∈ ∂|w_i|. Equivalently w
/// minimizes ½(σ+tau)wᵀKw + wᵀ(K z_prev − load) + h·Σ|w_i|, solved by ADMM with
/// nodal shrinkage. Throws SolverError past the iteration cap.
StepResult step_nonsmooth(const Vector& z_prev, const Vector& load, const ProblemConfig& cfg,
                          AdmmState* warm = nullptr);

/// Discrete S (no smoothing). loads[0] must be zero. The result carries dual.
Trajectory solve_nonsmooth(const TimeSeries& loads, const ProblemConfig& cfg);

struct InclusionResidual {
  double dual_range = 0.0;        // max(|f_i| − 1, 0)
  double sign_consistency = 0.0;  // max |f_i − sign(w_i)| over |w_i| > tol_active
  double force_balance = 0.0;     // ‖σKw + M_L f + K z − load‖∞
};

struct InclusionReport {
  std::vector<InclusionResidual> steps;  // k = 1..n_t at index k-1
  InclusionResidual worst;
};

/// Checks f ∈ ∂|w| and the force balance per step. Throws UsageError if the
/// trajectory has no dual.
InclusionReport residual_inclusion(const Trajectory& traj, const TimeSeries& loads,
                                   const ProblemConfig& cfg);

/// Validates sizes of a time series against mesh and grid.
void check_series(const TimeSeries& s, const ProblemConfig& cfg, const char* what);

}  // namespace viscoflow
