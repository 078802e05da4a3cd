#pragma once

#include <optional>

#include "viscoflow/state_solver.hpp"

namespace viscoflow {

/// Quadratic tracking cost
///   j₁(z) = (α₁/2) Σ_k tau·(z_k − z_d,k)ᵀM(z_k − z_d,k)   (k = 1..n_t)
///   j₂(v) = (α₂/2) (v − z_T)ᵀM(v − z_T)
/// with nodal targets.
struct CostConfig {
  TimeSeries z_d;
  Vector z_T;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  /// Throws std::invalid_argument on size mismatch or negative weights.
  void validate(const ProblemConfig& cfg) const;
};

/// Discrete adjoint of the implicit Euler scheme.
///
/// u[n_t] = j₂'(z_{n_t}) is the terminal value; marching backward,
///   ((σ+tau)K + M_L diag|w_k|''_ρ) ξ_k = u[k] + tau·j₁'_k,
///   u[k-1] = u[k] + tau·(j₁'_k − Kξ_k),
/// so that (σK + M_L diag|w_k|''_ρ) ξ_k = u[k-1] on every step: ξ_k lives on
/// (t_{k-1}, t_k] and pairs with the left value u[k-1]. q[k] = u[k-1] − σKξ_k
/// is stored as a load vector. xi[0] and q[0] are zero placeholders.
struct AdjointTriple {
  TimeSeries u;
  TimeSeries xi;
  TimeSeries q;
};

double tracking_cost(const Trajectory& traj, const CostConfig& cost, const ProblemConfig& cfg);

/// α₁M(z_k − z_d,k): the j₁ derivative load per unit time at step k.
Vector j1_load(const Trajectory& traj, const CostConfig& cost, const ProblemConfig& cfg, int k);
/// α₂M(z_{n_t} − z_T).
Vector j2_load(const Trajectory& traj, const CostConfig& cost, const ProblemConfig& cfg);

/// Throws std::invalid_argument if fwd lacks rates or sizes mismatch.
AdjointTriple solve_adjoint(const Trajectory& fwd, const CostConfig& cost, const ProblemConfig& cfg);

// Time-space inner products for controls with g[0] = 0:
//   (a, b)_{L²(I,H)} = Σ_{k≥1} tau·a_kᵀMb_k
//   (a, b)_{H¹(I,H)} = (a, b)_{L²(I,H)} + Σ_{k≥1} (a_k − a_{k-1})ᵀM(b_k − b_{k-1})/tau

double l2_inner(const TimeSeries& a, const TimeSeries& b, const Mesh& mesh, const TimeGrid& grid);
double h1_inner(const TimeSeries& a, const TimeSeries& b, const Mesh& mesh, const TimeGrid& grid);
double h1_norm(const TimeSeries& a, const Mesh& mesh, const TimeGrid& grid);

/// Riesz map of the L²(I,H) functional h ↦ (xi, h) into H¹_*(I,H): per node,
/// the discrete two-point problem −r̈ + r = xi, r(0) = 0, ṙ(T) = 0.
TimeSeries riesz_time(const TimeSeries& xi, const TimeGrid& grid);

/// Optional localization ½‖g − center‖²_{H¹(I,H)}.
struct ProxTerm {
  TimeSeries center;
};

struct ReducedEvaluation {
  double objective = 0.0;  // j₁ + j₂ + ½‖g‖²_{H¹} (+ prox)
  double tracking = 0.0;   // j₁ + j₂
  TimeSeries gradient;     // H¹(I,H) Riesz representative; empty if not requested
  Trajectory state;
  AdjointTriple adjoint;
};

/// J(g) = j(S_ρ(g)) + ½‖g‖²_{H¹(I,H)} for nodal controls g with g[0] = 0.
ReducedEvaluation reduced_objective(const TimeSeries& g, const CostConfig& cost,
                                    const ProblemConfig& cfg, const ProxTerm* prox = nullptr);

/// Objective plus the H¹(I,H) gradient riesz_time(ξ) + g (+ g − center).
ReducedEvaluation reduced_gradient(const TimeSeries& g, const CostConfig& cost,
                                   const ProblemConfig& cfg, const ProxTerm* prox = nullptr);

}  // namespace viscoflow
