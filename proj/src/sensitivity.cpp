#include "viscoflow/sensitivity.hpp"

#include <stdexcept>

namespace viscoflow {

SymTridiag step_jacobian(const Vector& w, const ProblemConfig& cfg) {
  const double c = cfg.sigma + cfg.grid.tau();
  const SymTridiag& K = cfg.mesh.stiffness();
  SymTridiag J{c * K.diag, c * K.off};
  const double h = cfg.mesh.lumped();
  for (Eigen::Index i = 0; i < w.size(); ++i) J.diag[i] += h * smoothing::second(w[i], cfg.rho);
  return J;
}

SensitivityTrajectory solve_sensitivity(const Trajectory& fwd, const TimeSeries& h_loads,
                                        const ProblemConfig& cfg) {
  check_series(fwd.z, cfg, "solve_sensitivity forward z");
  check_series(fwd.w, cfg, "solve_sensitivity forward w");
  check_series(h_loads, cfg, "solve_sensitivity direction");
  const double tau = cfg.grid.tau();
  SensitivityTrajectory s{zero_series(cfg.mesh, cfg.grid), zero_series(cfg.mesh, cfg.grid)};
  for (int k = 1; k <= cfg.grid.steps(); ++k) {
    const Vector rhs = h_loads[k] - cfg.mesh.apply_stiffness(s.zeta[k - 1]);
    s.omega[k] = step_jacobian(fwd.w[k], cfg).solve(rhs);
    s.zeta[k] = s.zeta[k - 1] + tau * s.omega[k];
  }
  return s;
}

}  // namespace viscoflow
