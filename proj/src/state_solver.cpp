#include "viscoflow/state_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "viscoflow/errors.hpp"

namespace viscoflow {

TimeGrid::TimeGrid(double T, int n_t) : T_(T), n_t_(n_t) {
  if (!std::isfinite(T) || T <= 0.0) throw std::invalid_argument("time horizon T must be positive");
  if (n_t < 1) throw std::invalid_argument("number of time steps must be at least 1");
}

TimeSeries zero_series(const Mesh& mesh, const TimeGrid& grid) {
  return TimeSeries(grid.steps() + 1, Vector::Zero(mesh.nodes()));
}

ProblemConfig::ProblemConfig(double sigma_, Mesh mesh_, TimeGrid grid_, SmoothingParam rho_)
    : sigma(sigma_), mesh(std::move(mesh_)), grid(grid_), rho(rho_) {
  if (!std::isfinite(sigma) || sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
}

ProblemConfig ProblemConfig::with_rho(double r) const {
  ProblemConfig c = *this;
  c.rho = SmoothingParam(r);
  return c;
}

void check_series(const TimeSeries& s, const ProblemConfig& cfg, const char* what) {
  if (static_cast<int>(s.size()) != cfg.grid.steps() + 1)
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(cfg.grid.steps() + 1) + " time levels, got " +
                                std::to_string(s.size()));
  for (const auto& v : s) cfg.mesh.check(v);
}

TimeSeries to_loads(const TimeSeries& g_nodal, const Mesh& mesh) {
  TimeSeries out;
  out.reserve(g_nodal.size());
  for (const auto& g : g_nodal) {
    mesh.check(g);
    out.push_back(mesh.apply_mass(g));
  }
  return out;
}

namespace {

double energy(double c, const Vector& w, const Vector& rhs, const Mesh& mesh, SmoothingParam rho) {
  double e = 0.5 * c * w.dot(mesh.apply_stiffness(w)) - w.dot(rhs);
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) s += smoothing::value(w[i], rho);
  return e + mesh.lumped() * s;
}

Vector residual(double c, const Vector& w, const Vector& rhs, const Mesh& mesh, SmoothingParam rho) {
  Vector r = c * mesh.apply_stiffness(w) - rhs;
  const double h = mesh.lumped();
  for (Eigen::Index i = 0; i < w.size(); ++i) r[i] += h * smoothing::deriv(w[i], rho);
  return r;
}

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void check_zero_initial(const TimeSeries& loads) {
  if (!loads.empty() && inf_norm(loads.front()) != 0.0)
    throw std::invalid_argument("control must vanish at t = 0 (compatibility g(0) = 0)");
}

// LU factors of a symmetric tridiagonal matrix, reused across many solves.
class TridiagFactor {
 public:
  explicit TridiagFactor(const SymTridiag& a) : off_(a.off), c_(a.size()), inv_(a.size()) {
    const Eigen::Index n = a.size();
    double denom = a.diag[0];
    inv_[0] = 1.0 / denom;
    c_[0] = n > 1 ? off_[0] * inv_[0] : 0.0;
    for (Eigen::Index i = 1; i < n; ++i) {
      denom = a.diag[i] - off_[i - 1] * c_[i - 1];
      inv_[i] = 1.0 / denom;
      c_[i] = i + 1 < n ? off_[i] * inv_[i] : 0.0;
    }
  }

  void solve_in_place(Vector& d) const {
    const Eigen::Index n = d.size();
    d[0] *= inv_[0];
    for (Eigen::Index i = 1; i < n; ++i) d[i] = (d[i] - off_[i - 1] * d[i - 1]) * inv_[i];
    for (Eigen::Index i = n - 2; i >= 0; --i) d[i] -= c_[i] * d[i + 1];
  }

 private:
  Vector off_, c_, inv_;
};

}  // namespace

MonotoneSolve solve_monotone(double c, const Vector& rhs, const Vector& w0, const Mesh& mesh,
                             SmoothingParam rho, const NewtonOptions& opts) {
  mesh.check(rhs);
  const double h = mesh.lumped();
  const SymTridiag& K = mesh.stiffness();

  Vector w = w0.size() ? w0 : Vector::Zero(mesh.nodes());
  mesh.check(w);
  Vector F = residual(c, w, rhs, mesh, rho);
  double res = inf_norm(F);
  double E = energy(c, w, rhs, mesh, rho);

  SymTridiag J{Vector(w.size()), c * K.off};
  int it = 0;
  for (; res > opts.tol; ++it) {
    if (it >= opts.max_iter)
      throw SolverError("Newton did not converge: residual " + std::to_string(res) + " after " +
                            std::to_string(it) + " iterations",
                        res, it);
    for (Eigen::Index i = 0; i < w.size(); ++i)
      J.diag[i] = c * K.diag[i] + h * smoothing::second(w[i], rho);
    const Vector d = J.solve(-F);
    const double slope = F.dot(d);

    double t = 1.0;
    bool accepted = false;
    for (int b = 0; b <= opts.max_backtracks; ++b, t *= 0.5) {
      Vector wt = w + t * d;
      const double Et = energy(c, wt, rhs, mesh, rho);
      Vector Ft = residual(c, wt, rhs, mesh, rho);
      const double rt = inf_norm(Ft);
      // Near the solution the energy decrease drops below rounding; a strict
      // residual decrease then decides.
      const bool armijo = Et <= E + opts.armijo_c * t * slope;
      const bool flat = rt < res && Et <= E + 1e-14 * (1.0 + std::abs(E));
      if (armijo || flat) {
        w = std::move(wt);
        F = std::move(Ft);
        res = rt;
        E = Et;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw SolverError("Newton line search failed: residual " + std::to_string(res), res, it);
  }
  return {std::move(w), res, it};
}

Vector t_rho_apply(const Vector& v, const ProblemConfig& cfg) {
  return solve_monotone(cfg.sigma, v, Vector(), cfg.mesh, cfg.rho, cfg.newton).w;
}

StepResult step_regularized(const Vector& z_prev, const Vector& load, const ProblemConfig& cfg,
                            const Vector& w_guess) {
  cfg.mesh.check(z_prev);
  cfg.mesh.check(load);
  const double tau = cfg.grid.tau();
  const Vector rhs = load - cfg.mesh.apply_stiffness(z_prev);
  MonotoneSolve s = solve_monotone(cfg.sigma + tau, rhs, w_guess, cfg.mesh, cfg.rho, cfg.newton);
  StepResult out;
  out.z = z_prev + tau * s.w;
  out.w = std::move(s.w);
  out.iterations = s.iterations;
  return out;
}

Trajectory solve_regularized(const TimeSeries& loads, const ProblemConfig& cfg) {
  check_series(loads, cfg, "solve_regularized");
  check_zero_initial(loads);
  const int nt = cfg.grid.steps();
  Trajectory traj;
  traj.z = zero_series(cfg.mesh, cfg.grid);
  traj.w = zero_series(cfg.mesh, cfg.grid);
  traj.iterations.assign(nt + 1, 0);
  for (int k = 1; k <= nt; ++k) {
    StepResult s = step_regularized(traj.z[k - 1], loads[k], cfg, traj.w[k - 1]);
    traj.z[k] = std::move(s.z);
    traj.w[k] = std::move(s.w);
    traj.iterations[k] = s.iterations;
  }
  return traj;
}

namespace {

double shrink(double v, double kappa) {
  if (v > kappa) return v - kappa;
  if (v < -kappa) return v + kappa;
  return 0.0;
}

// Solves the step problem exactly once the active set and signs are known:
// w_i = 0 off the active set, f_i = sign(w_i) on it. Returns false if the
// result is inconsistent with the guessed active set.
bool polish(const SymTridiag& A, const Vector& r, double h, const Vector& y, double tol_active,
            Vector& w_out, Vector& f_out) {
  const Eigen::Index n = y.size();
  std::vector<int> sign(n, 0);
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(y[i]) > tol_active) sign[i] = y[i] > 0 ? 1 : -1;

  SymTridiag B{Vector(n), Vector(std::max<Eigen::Index>(n - 1, 0))};
  Vector rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    B.diag[i] = sign[i] ? A.diag[i] : 1.0;
    rhs[i] = sign[i] ? r[i] - h * sign[i] : 0.0;
    if (i + 1 < n) B.off[i] = (sign[i] && sign[i + 1]) ? A.off[i] : 0.0;
  }
  Vector w = B.solve(rhs);
  Vector Aw = A.apply(w);
  Vector f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sign[i]) {
      if (w[i] * sign[i] <= 0.0) return false;
      f[i] = sign[i];
    } else {
      w[i] = 0.0;
      f[i] = (r[i] - Aw[i]) / h;
      if (std::abs(f[i]) > 1.0 + 1e-12) return false;
      f[i] = std::clamp(f[i], -1.0, 1.0);
    }
  }
  w_out = std::move(w);
  f_out = std::move(f);
  return true;
}

}  // namespace

StepResult step_nonsmooth(const Vector& z_prev, const Vector& load, const ProblemConfig& cfg,
                          AdmmState* warm) {
  const Mesh& mesh = cfg.mesh;
  mesh.check(z_prev);
  mesh.check(load);
  const AdmmOptions& o = cfg.admm;
  const double tau = cfg.grid.tau();
  const double h = mesh.lumped();
  const Eigen::Index n = mesh.nodes();

  // min ½wᵀAw − wᵀr + h‖w‖₁ with A = (σ+τ)K, r = load − K z_prev
  const SymTridiag A{(cfg.sigma + tau) * mesh.stiffness().diag,
                     (cfg.sigma + tau) * mesh.stiffness().off};
  const Vector r = load - mesh.apply_stiffness(z_prev);
  const double beta = o.beta_scale * cfg.sigma / h;
  const TridiagFactor factor(SymTridiag{A.diag.array() + beta, A.off});

  Vector y = (warm && warm->y.size() == n) ? warm->y : Vector::Zero(n);
  Vector u = (warm && warm->u.size() == n) ? warm->u : Vector::Zero(n);
  Vector w(n);
  const double kappa = h / beta;

  int it = 0;
  double primal = 0.0, dual = 0.0;
  for (;; ++it) {
    if (it >= o.max_iter)
      throw SolverError("ADMM did not converge: primal " + std::to_string(primal) + ", dual " +
                            std::to_string(dual),
                        std::max(primal, dual), it);
    w = r + beta * (y - u);
    factor.solve_in_place(w);
    const Vector w_hat = o.relaxation * w + (1.0 - o.relaxation) * y;
    Vector y_new(n);
    for (Eigen::Index i = 0; i < n; ++i) y_new[i] = shrink(w_hat[i] + u[i], kappa);
    u += w_hat - y_new;
    primal = inf_norm(w - y_new);
    dual = beta * inf_norm(y_new - y);
    y = std::move(y_new);
    if (std::max(primal, dual) <= o.tol) {
      ++it;
      break;
    }
  }
  if (warm) *warm = {y, u};

  // β·u ∈ h·∂|y| holds exactly after every shrinkage step.
  Vector f = (beta / h) * u;
  for (Eigen::Index i = 0; i < n; ++i) f[i] = std::clamp(f[i], -1.0, 1.0);
  Vector w_out = y;
  if (o.polish) {
    Vector wp, fp;
    if (polish(A, r, h, y, o.tol_active, wp, fp)) {
      w_out = std::move(wp);
      f = std::move(fp);
    }
  }

  StepResult out;
  out.z = z_prev + tau * w_out;
  out.w = std::move(w_out);
  out.dual = std::move(f);
  out.iterations = it;
  return out;
}

Trajectory solve_nonsmooth(const TimeSeries& loads, const ProblemConfig& cfg) {
  check_series(loads, cfg, "solve_nonsmooth");
  check_zero_initial(loads);
  const int nt = cfg.grid.steps();
  Trajectory traj;
  traj.z = zero_series(cfg.mesh, cfg.grid);
  traj.w = zero_series(cfg.mesh, cfg.grid);
  traj.dual = zero_series(cfg.mesh, cfg.grid);
  traj.iterations.assign(nt + 1, 0);
  AdmmState warm;
  for (int k = 1; k <= nt; ++k) {
    StepResult s = step_nonsmooth(traj.z[k - 1], loads[k], cfg, &warm);
    traj.z[k] = std::move(s.z);
    traj.w[k] = std::move(s.w);
    (*traj.dual)[k] = std::move(s.dual);
    traj.iterations[k] = s.iterations;
  }
  return traj;
}

InclusionReport residual_inclusion(const Trajectory& traj, const TimeSeries& loads,
                                   const ProblemConfig& cfg) {
  if (!traj.dual) throw UsageError("residual_inclusion: trajectory carries no dual field");
  check_series(loads, cfg, "residual_inclusion loads");
  check_series(traj.z, cfg, "residual_inclusion z");
  check_series(traj.w, cfg, "residual_inclusion w");
  check_series(*traj.dual, cfg, "residual_inclusion dual");
  const Mesh& mesh = cfg.mesh;
  const double h = mesh.lumped();
  const double tol_active = cfg.admm.tol_active;

  InclusionReport rep;
  for (int k = 1; k <= cfg.grid.steps(); ++k) {
    const Vector& w = traj.w[k];
    const Vector& f = (*traj.dual)[k];
    InclusionResidual r;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      r.dual_range = std::max(r.dual_range, std::abs(f[i]) - 1.0);
      if (std::abs(w[i]) > tol_active)
        r.sign_consistency = std::max(r.sign_consistency, std::abs(f[i] - (w[i] > 0 ? 1.0 : -1.0)));
    }
    const Vector balance =
        cfg.sigma * mesh.apply_stiffness(w) + h * f + mesh.apply_stiffness(traj.z[k]) - loads[k];
    r.force_balance = inf_norm(balance);
    rep.worst.dual_range = std::max(rep.worst.dual_range, r.dual_range);
    rep.worst.sign_consistency = std::max(rep.worst.sign_consistency, r.sign_consistency);
    rep.worst.force_balance = std::max(rep.worst.force_balance, r.force_balance);
    rep.steps.push_back(r);
  }
  return rep;
}

}  // namespace viscoflow
