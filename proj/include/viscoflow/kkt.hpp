#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "viscoflow/adjoint.hpp"

namespace viscoflow {

/// Pointwise regime of a (step, node) pair, read off the rate w and the dual
/// argument d = M_L⁻¹M·g + Δz + σΔẇ.
enum class Regime : int {
  stick_interior = 0,  // w = 0, |d| < 1 − eps
  stick_upper,         // w = 0, d ≈ +1
  stick_lower,         // w = 0, d ≈ −1
  slip_positive,       // w > 0
  slip_negative,       // w < 0
  unclassified,        // |d| > 1 + eps, which the inclusion rules out
};
inline constexpr int regime_count = 6;

std::string_view regime_name(Regime r);

struct RegimeStats {
  long count = 0;
  // Worst violation of the formal pointwise condition for this regime:
  // slip± → |q|, stick_upper → max(−q, −ξ, 0), stick_interior → |ξ|,
  // stick_lower → max(q, ξ, 0). Filled by check_nonsmooth_kkt only.
  double violation = 0.0;
};

struct RegimeTable {
  double eps = 0.05;
  double zero_threshold = 0.0;        // |w| ≤ this counts as w = 0
  std::vector<std::vector<Regime>> labels;  // [k-1][i] for k = 1..n_t
  std::array<RegimeStats, regime_count> stats{};

  long total() const;
  double fraction(Regime r) const;
};

/// Labels every (k, i), k = 1..n_t. g holds nodal controls. Δ acts through the
/// lumped inverse −M_L⁻¹K. A rate counts as zero when |w| ≤ tol_active for
/// trajectories with a dual, and when |w| < ρ for regularized ones.
/// Throws std::invalid_argument unless eps ∈ (0, ½).
RegimeTable classify_regimes(const Trajectory& traj, const TimeSeries& g, const ProblemConfig& cfg,
                             double eps = 0.05);

/// ‖ξ‖ restricted to stick-interior pairs over ‖ξ‖_{L²(I,H)}; 0 if either is empty.
double check_cone_c(const Trajectory& traj, const AdjointTriple& adj, const RegimeTable& regimes);

struct KktReport {
  double r_state = 0.0;     // max of |f| − 1, |w| − f·w, force balance (∞-norm)
  double r_adjoint = 0.0;   // integrated adjoint identity, max_k V*-norm
  double r_gradient = 0.0;  // ‖riesz(ξ) + g‖_{H¹(I,H)}
  double r_comp = 0.0;      // Σ_k tau Σ_i |q_{k,i}|·|w_{k,i}|
  double comp_bound = 0.0;  // T·sqrt(2ρ)·max_k ‖sqrt(|w_k|''_ρ)·ξ_k‖_H (lumped)
  double sign_u_xi = 0.0;   // max_k max(0, σξ_kᵀKξ_k − u[k-1]ᵀξ_k)
  double sign_q_xi = 0.0;   // max_k max(0, −q_kᵀξ_k)
  double cone_c = 0.0;
  RegimeTable regimes;
};

/// Evaluates the limit optimality system on a computed state/adjoint pair.
/// traj may come from solve_nonsmooth (dual used as given) or from a
/// regularized solve (dual taken as |w|'_ρ).
KktReport check_nonsmooth_kkt(const Trajectory& traj, const TimeSeries& g,
                              const AdjointTriple& adj, const CostConfig& cost,
                              const ProblemConfig& cfg, double eps = 0.05);

}  // namespace viscoflow
