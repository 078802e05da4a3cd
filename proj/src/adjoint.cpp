#include "viscoflow/adjoint.hpp"

#include <cmath>
#include <stdexcept>

#include "viscoflow/sensitivity.hpp"

namespace viscoflow {

void CostConfig::validate(const ProblemConfig& cfg) const {
  check_series(z_d, cfg, "cost target z_d");
  cfg.mesh.check(z_T);
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0))
    throw std::invalid_argument("cost weights alpha1, alpha2 must be non-negative");
}

double tracking_cost(const Trajectory& traj, const CostConfig& cost, const ProblemConfig& cfg) {
  cost.validate(cfg);
  const Mesh& mesh = cfg.mesh;
  const int nt = cfg.grid.steps();
  double j1 = 0.0;
  if (cost.alpha1 != 0.0) {
    for (int k = 1; k <= nt; ++k) {
      const Vector e = traj.z[k] - cost.z_d[k];
      j1 += e.dot(mesh.apply_mass(e));
    }
    j1 *= 0.5 * cost.alpha1 * cfg.grid.tau();
  }
  double j2 = 0.0;
  if (cost.alpha2 != 0.0) {
    const Vector e = traj.z[nt] - cost.z_T;
    j2 = 0.5 * cost.alpha2 * e.dot(mesh.apply_mass(e));
  }
  return j1 + j2;
}

Vector j1_load(const Trajectory& traj, const CostConfig& cost, const ProblemConfig& cfg, int k) {
  return cost.alpha1 * cfg.mesh.apply_mass(traj.z[k] - cost.z_d[k]);
}

Vector j2_load(const Trajectory& traj, const CostConfig& cost, const ProblemConfig& cfg) {
  return cost.alpha2 * cfg.mesh.apply_mass(traj.z[cfg.grid.steps()] - cost.z_T);
}

AdjointTriple solve_adjoint(const Trajectory& fwd, const CostConfig& cost, const ProblemConfig& cfg) {
  check_series(fwd.z, cfg, "solve_adjoint forward z");
  check_series(fwd.w, cfg, "solve_adjoint forward w");
  cost.validate(cfg);
  const int nt = cfg.grid.steps();
  const double tau = cfg.grid.tau();

  AdjointTriple adj{zero_series(cfg.mesh, cfg.grid), zero_series(cfg.mesh, cfg.grid),
                    zero_series(cfg.mesh, cfg.grid)};
  adj.u[nt] = j2_load(fwd, cost, cfg);
  for (int k = nt; k >= 1; --k) {
    const Vector j1 = j1_load(fwd, cost, cfg, k);
    adj.xi[k] = step_jacobian(fwd.w[k], cfg).solve(adj.u[k] + tau * j1);
    const Vector Kxi = cfg.mesh.apply_stiffness(adj.xi[k]);
    adj.u[k - 1] = adj.u[k] + tau * (j1 - Kxi);
    adj.q[k] = adj.u[k - 1] - cfg.sigma * Kxi;
  }
  return adj;
}

double l2_inner(const TimeSeries& a, const TimeSeries& b, const Mesh& mesh, const TimeGrid& grid) {
  double s = 0.0;
  for (int k = 1; k <= grid.steps(); ++k) s += a[k].dot(mesh.apply_mass(b[k]));
  return grid.tau() * s;
}

double h1_inner(const TimeSeries& a, const TimeSeries& b, const Mesh& mesh, const TimeGrid& grid) {
  double s = 0.0;
  for (int k = 1; k <= grid.steps(); ++k) {
    const Vector da = a[k] - a[k - 1];
    s += da.dot(mesh.apply_mass(b[k] - b[k - 1]));
  }
  return l2_inner(a, b, mesh, grid) + s / grid.tau();
}

double h1_norm(const TimeSeries& a, const Mesh& mesh, const TimeGrid& grid) {
  return std::sqrt(std::max(0.0, h1_inner(a, a, mesh, grid)));
}

TimeSeries riesz_time(const TimeSeries& xi, const TimeGrid& grid) {
  const int nt = grid.steps();
  if (static_cast<int>(xi.size()) != nt + 1)
    throw std::invalid_argument("riesz_time: wrong number of time levels");
  const Eigen::Index n = xi.front().size();
  const double tau = grid.tau();

  // (tau² I + D) r = tau² ξ per node, D = tridiag(-1, 2, -1) with D_NN = 1.
  SymTridiag L{Vector::Constant(nt, tau * tau + 2.0), Vector::Constant(nt - 1, -1.0)};
  L.diag[nt - 1] = tau * tau + 1.0;

  TimeSeries r(nt + 1, Vector::Zero(n));
  Vector rhs(nt);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 1; k <= nt; ++k) {
      if (xi[k].size() != n) throw std::invalid_argument("riesz_time: ragged input");
      rhs[k - 1] = tau * tau * xi[k][i];
    }
    const Vector sol = L.solve(rhs);
    for (int k = 1; k <= nt; ++k) r[k][i] = sol[k - 1];
  }
  return r;
}

namespace {

ReducedEvaluation evaluate(const TimeSeries& g, const CostConfig& cost, const ProblemConfig& cfg,
                           const ProxTerm* prox, bool with_gradient) {
  check_series(g, cfg, "control");
  if (prox) check_series(prox->center, cfg, "prox center");
  const Mesh& mesh = cfg.mesh;
  const TimeGrid& grid = cfg.grid;

  ReducedEvaluation ev;
  ev.state = solve_regularized(to_loads(g, mesh), cfg);
  ev.tracking = tracking_cost(ev.state, cost, cfg);
  const double gg = h1_inner(g, g, mesh, grid);
  ev.objective = ev.tracking + 0.5 * gg;
  TimeSeries diff;
  if (prox) {
    diff.reserve(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) diff.push_back(g[k] - prox->center[k]);
    ev.objective += 0.5 * h1_inner(diff, diff, mesh, grid);
  }
  if (!with_gradient) return ev;

  ev.adjoint = solve_adjoint(ev.state, cost, cfg);
  ev.gradient = riesz_time(ev.adjoint.xi, grid);
  for (std::size_t k = 0; k < g.size(); ++k) {
    ev.gradient[k] += g[k];
    if (prox) ev.gradient[k] += diff[k];
  }
  return ev;
}

}  // namespace

ReducedEvaluation reduced_objective(const TimeSeries& g, const CostConfig& cost,
                                    const ProblemConfig& cfg, const ProxTerm* prox) {
  return evaluate(g, cost, cfg, prox, false);
}

ReducedEvaluation reduced_gradient(const TimeSeries& g, const CostConfig& cost,
                                   const ProblemConfig& cfg, const ProxTerm* prox) {
  return evaluate(g, cost, cfg, prox, true);
}

}  // namespace viscoflow
