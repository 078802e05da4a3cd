#include "viscoflow/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace viscoflow {

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::stick_interior: return "stick_interior";
    case Regime::stick_upper: return "stick_upper";
    case Regime::stick_lower: return "stick_lower";
    case Regime::slip_positive: return "slip_positive";
    case Regime::slip_negative: return "slip_negative";
    case Regime::unclassified: return "unclassified";
  }
  return "?";
}

long RegimeTable::total() const {
  long n = 0;
  for (const auto& s : stats) n += s.count;
  return n;
}

double RegimeTable::fraction(Regime r) const {
  const long n = total();
  return n ? static_cast<double>(stats[static_cast<int>(r)].count) / n : 0.0;
}

namespace {

// Nodal dual argument d = g + Δz + σΔw with Δ = −M_L⁻¹K. The control enters
// as M_L⁻¹M·g, the nodal density of the load the state solvers see, so that
// d coincides with the selection f ∈ ∂|w| up to the solver residual.
Vector dual_argument(const Vector& g, const Vector& z, const Vector& w, const ProblemConfig& cfg) {
  const Mesh& m = cfg.mesh;
  return (m.apply_mass(g) - m.apply_stiffness(z + cfg.sigma * w)) / m.lumped();
}

Regime label(double w, double d, double zero, double eps) {
  if (std::abs(d) > 1.0 + eps) return Regime::unclassified;
  if (w > zero) return Regime::slip_positive;
  if (w < -zero) return Regime::slip_negative;
  if (d >= 1.0 - eps) return Regime::stick_upper;
  if (d <= -1.0 + eps) return Regime::stick_lower;
  return Regime::stick_interior;
}

}  // namespace

RegimeTable classify_regimes(const Trajectory& traj, const TimeSeries& g, const ProblemConfig& cfg,
                             double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("regime eps must lie in (0, 1/2)");
  check_series(traj.z, cfg, "classify_regimes z");
  check_series(traj.w, cfg, "classify_regimes w");
  check_series(g, cfg, "classify_regimes control");

  RegimeTable t;
  t.eps = eps;
  t.zero_threshold = traj.dual ? cfg.admm.tol_active : cfg.rho.rho() * (1.0 - 1e-12);
  for (int k = 1; k <= cfg.grid.steps(); ++k) {
    const Vector d = dual_argument(g[k], traj.z[k], traj.w[k], cfg);
    std::vector<Regime> row(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      row[i] = label(traj.w[k][i], d[i], t.zero_threshold, eps);
      ++t.stats[static_cast<int>(row[i])].count;
    }
    t.labels.push_back(std::move(row));
  }
  return t;
}

double check_cone_c(const Trajectory& traj, const AdjointTriple& adj, const RegimeTable& regimes) {
  const std::size_t nt = regimes.labels.size();
  if (adj.xi.size() != nt + 1 || traj.w.size() != nt + 1)
    throw std::invalid_argument("check_cone_c: regime table does not match the time grid");
  double all = 0.0, stick = 0.0;
  for (std::size_t k = 1; k <= nt; ++k) {
    const auto& row = regimes.labels[k - 1];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double x2 = adj.xi[k][i] * adj.xi[k][i];
      all += x2;
      if (row[i] == Regime::stick_interior) stick += x2;
    }
  }
  // Uniform lumped weights tau·h cancel in the ratio.
  if (all == 0.0 || stick == 0.0) return 0.0;
  return std::sqrt(stick / all);
}

KktReport check_nonsmooth_kkt(const Trajectory& traj, const TimeSeries& g,
                              const AdjointTriple& adj, const CostConfig& cost,
                              const ProblemConfig& cfg, double eps) {
  check_series(traj.z, cfg, "kkt z");
  check_series(traj.w, cfg, "kkt w");
  check_series(g, cfg, "kkt control");
  check_series(adj.u, cfg, "kkt u");
  check_series(adj.xi, cfg, "kkt xi");
  check_series(adj.q, cfg, "kkt q");
  const Mesh& mesh = cfg.mesh;
  const int nt = cfg.grid.steps();
  const double tau = cfg.grid.tau();
  const double h = mesh.lumped();
  const TimeSeries loads = to_loads(g, mesh);

  KktReport rep;

  // State inclusion. For f ∈ [−1, 1], f ∈ ∂|w| iff |w| − f·w = 0.
  for (int k = 1; k <= nt; ++k) {
    const Vector& w = traj.w[k];
    Vector f(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
      f[i] = traj.dual ? (*traj.dual)[k][i] : smoothing::deriv(w[i], cfg.rho);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      rep.r_state = std::max(rep.r_state, std::abs(f[i]) - 1.0);
      rep.r_state = std::max(rep.r_state, std::abs(w[i]) - f[i] * w[i]);
    }
    const Vector balance =
        cfg.sigma * mesh.apply_stiffness(w) + h * f + mesh.apply_stiffness(traj.z[k]) - loads[k];
    rep.r_state = std::max(rep.r_state, balance.cwiseAbs().maxCoeff());
  }

  // u(t) = j₂'(z(T)) + ∫_t^T Δξ + j₁'(z), accumulated from the terminal value.
  Vector acc = j2_load(traj, cost, cfg);
  rep.r_adjoint = norm_Vstar(adj.u[nt] - acc, mesh);
  for (int k = nt; k >= 1; --k) {
    acc += tau * (j1_load(traj, cost, cfg, k) - mesh.apply_stiffness(adj.xi[k]));
    rep.r_adjoint = std::max(rep.r_adjoint, norm_Vstar(adj.u[k - 1] - acc, mesh));
  }

  // Weak gradient identity (ξ, h)_{L²(I,H)} + (g, h)_{H¹(I,H)} = 0.
  TimeSeries res = riesz_time(adj.xi, cfg.grid);
  for (int k = 0; k <= nt; ++k) res[k] += g[k];
  rep.r_gradient = h1_norm(res, mesh, cfg.grid);

  double weighted_xi_max = 0.0;
  for (int k = 1; k <= nt; ++k) {
    const Vector& w = traj.w[k];
    const Vector& xi = adj.xi[k];
    const Vector& q = adj.q[k];
    double pair = 0.0, weighted = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      pair += std::abs(q[i]) * std::abs(w[i]);
      weighted += h * smoothing::second(w[i], cfg.rho) * xi[i] * xi[i];
    }
    rep.r_comp += tau * pair;
    weighted_xi_max = std::max(weighted_xi_max, std::sqrt(weighted));

    const double xKx = xi.dot(mesh.apply_stiffness(xi));
    rep.sign_u_xi = std::max(rep.sign_u_xi, cfg.sigma * xKx - adj.u[k - 1].dot(xi));
    rep.sign_q_xi = std::max(rep.sign_q_xi, -q.dot(xi));
  }
  rep.comp_bound = cfg.grid.T() * std::sqrt(2.0 * cfg.rho.rho()) * weighted_xi_max;

  rep.regimes = classify_regimes(traj, g, cfg, eps);
  for (int k = 1; k <= nt; ++k) {
    const auto& row = rep.regimes.labels[k - 1];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double qn = adj.q[k][i] / h;  // nodal density of the load
      const double xi = adj.xi[k][i];
      double v = 0.0;
      switch (row[i]) {
        case Regime::slip_positive:
        case Regime::slip_negative: v = std::abs(qn); break;
        case Regime::stick_upper: v = std::max({-qn, -xi, 0.0}); break;
        case Regime::stick_lower: v = std::max({qn, xi, 0.0}); break;
        case Regime::stick_interior: v = std::abs(xi); break;
        case Regime::unclassified: break;
      }
      auto& s = rep.regimes.stats[static_cast<int>(row[i])];
      s.violation = std::max(s.violation, v);
    }
  }
  rep.cone_c = check_cone_c(traj, adj, rep.regimes);
  return rep;
}

}  // namespace viscoflow
