#pragma once

#include "viscoflow/state_solver.hpp"

namespace viscoflow {

/// zeta[k] = S'_ρ(g)h at t_k, omega[k] its rate on (t_{k-1}, t_k]; index 0 holds zeros.
struct SensitivityTrajectory {
  TimeSeries zeta;
  TimeSeries omega;
};

/// Linearizes the implicit Euler scheme around a stored forward trajectory:
///
///   σKω_k + M_L diag(|w_k|''_ρ) ω_k + K(ζ_{k-1} + tau·ω_k) = h_k,  ζ_k = ζ_{k-1} + tau·ω_k.
///
/// h_loads are load vectors with h_loads[0] = 0. The curvature is frozen at the
/// stored rates w_k, which makes ζ the exact derivative of the discrete map.
SensitivityTrajectory solve_sensitivity(const Trajectory& fwd, const TimeSeries& h_loads,
                                        const ProblemConfig& cfg);

/// Jacobian of one regularized step, (σ+tau)K + M_L diag(|w|''_ρ).
SymTridiag step_jacobian(const Vector& w, const ProblemConfig& cfg);

}  // namespace viscoflow
