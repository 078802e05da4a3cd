#include "viscoflow/viscoflow.h"

#include <iostream>
#include <memory>
#include <new>
#include <string>

#include "viscoflow/config.hpp"
#include "viscoflow/errors.hpp"
#include "viscoflow/experiments.hpp"
#include "viscoflow/kkt.hpp"
#include "viscoflow/optimizer.hpp"
#include "viscoflow/smoothing.hpp"

using namespace viscoflow;

struct vf_problem {
  ProblemConfig cfg;
};
struct vf_trajectory {
  Trajectory traj;
};
struct vf_cost {
  CostConfig cost;
};
struct vf_config {
  ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

vf_status fail(vf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Maps exceptions escaping the C++ core to status codes.
template <class F>
vf_status guard(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const SolverError& e) {
    return fail(VF_ERROR_SOLVER, e.what());
  } catch (const ConfigError& e) {
    return fail(VF_ERROR_CONFIG, e.what());
  } catch (const UsageError& e) {
    return fail(VF_ERROR_USAGE, e.what());
  } catch (const IoError& e) {
    return fail(VF_ERROR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(VF_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(VF_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(VF_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VF_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(VF_ERROR_INTERNAL, "unknown error");
  }
}

std::size_t series_len(const ProblemConfig& p) {
  return static_cast<std::size_t>(p.grid.steps() + 1) * p.mesh.nodes();
}

TimeSeries read_series(const ProblemConfig& p, const double* data, std::size_t len) {
  if (!data) throw std::invalid_argument("null series pointer");
  if (len != series_len(p))
    throw std::invalid_argument("series length " + std::to_string(len) + " does not match " +
                                std::to_string(series_len(p)));
  const int n = p.mesh.nodes();
  TimeSeries s(p.grid.steps() + 1);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = Eigen::Map<const Vector>(data + k * n, n);
  return s;
}

void write_series(const TimeSeries& s, double* out) {
  std::size_t off = 0;
  for (const auto& v : s) {
    Eigen::Map<Vector>(out + off, v.size()) = v;
    off += v.size();
  }
}

std::size_t traj_len(const Trajectory& t) { return t.z.size() * t.z.front().size(); }

}  // namespace

extern "C" {

const char* vf_last_error(void) { return g_last_error.c_str(); }

const char* vf_version(void) { return "0.1.0"; }

vf_status vf_smooth_abs(double v, double rho, double* value, double* deriv, double* second) {
  return guard([&] {
    const SmoothingParam p(rho);
    if (value) *value = smoothing::value(v, p);
    if (deriv) *deriv = smoothing::deriv(v, p);
    if (second) *second = smoothing::second(v, p);
    return VF_OK;
  });
}

vf_status vf_problem_create(double sigma, double T, int n_el, int n_t, double rho,
                            vf_problem** out) {
  return guard([&] {
    if (!out) throw std::invalid_argument("null output handle");
    *out = new vf_problem{ProblemConfig(sigma, Mesh(n_el), TimeGrid(T, n_t), SmoothingParam(rho))};
    return VF_OK;
  });
}

void vf_problem_destroy(vf_problem* p) { delete p; }

vf_status vf_problem_set_rho(vf_problem* p, double rho) {
  return guard([&] {
    if (!p) throw std::invalid_argument("null problem");
    p->cfg = p->cfg.with_rho(rho);
    return VF_OK;
  });
}

int vf_problem_nodes(const vf_problem* p) { return p ? p->cfg.mesh.nodes() : -1; }
int vf_problem_steps(const vf_problem* p) { return p ? p->cfg.grid.steps() : -1; }

vf_status vf_solve_regularized(const vf_problem* p, const double* g, size_t len,
                               vf_trajectory** out) {
  return guard([&] {
    if (!p || !out) throw std::invalid_argument("null argument");
    const TimeSeries loads = to_loads(read_series(p->cfg, g, len), p->cfg.mesh);
    *out = new vf_trajectory{solve_regularized(loads, p->cfg)};
    return VF_OK;
  });
}

vf_status vf_solve_nonsmooth(const vf_problem* p, const double* g, size_t len,
                             vf_trajectory** out) {
  return guard([&] {
    if (!p || !out) throw std::invalid_argument("null argument");
    const TimeSeries loads = to_loads(read_series(p->cfg, g, len), p->cfg.mesh);
    *out = new vf_trajectory{solve_nonsmooth(loads, p->cfg)};
    return VF_OK;
  });
}

void vf_trajectory_destroy(vf_trajectory* t) { delete t; }

vf_status vf_trajectory_state(const vf_trajectory* t, double* z, double* w, size_t len) {
  return guard([&] {
    if (!t) throw std::invalid_argument("null trajectory");
    if (len != traj_len(t->traj)) throw std::invalid_argument("buffer length mismatch");
    if (z) write_series(t->traj.z, z);
    if (w) write_series(t->traj.w, w);
    return VF_OK;
  });
}

vf_status vf_trajectory_dual(const vf_trajectory* t, double* dual, size_t len) {
  return guard([&] {
    if (!t || !dual) throw std::invalid_argument("null argument");
    if (!t->traj.dual) throw UsageError("trajectory has no dual field");
    if (len != traj_len(t->traj)) throw std::invalid_argument("buffer length mismatch");
    write_series(*t->traj.dual, dual);
    return VF_OK;
  });
}

vf_status vf_inclusion_residual(const vf_problem* p, const vf_trajectory* t, const double* g,
                                size_t len, vf_inclusion* out) {
  return guard([&] {
    if (!p || !t || !out) throw std::invalid_argument("null argument");
    const TimeSeries loads = to_loads(read_series(p->cfg, g, len), p->cfg.mesh);
    const InclusionReport r = residual_inclusion(t->traj, loads, p->cfg);
    *out = {r.worst.dual_range, r.worst.sign_consistency, r.worst.force_balance};
    return VF_OK;
  });
}

vf_status vf_cost_create(const vf_problem* p, const double* z_d, size_t len, const double* z_T,
                         double alpha1, double alpha2, vf_cost** out) {
  return guard([&] {
    if (!p || !out) throw std::invalid_argument("null argument");
    CostConfig c;
    c.z_d = read_series(p->cfg, z_d, len);
    c.z_T = z_T ? Vector(Eigen::Map<const Vector>(z_T, p->cfg.mesh.nodes())) : c.z_d.back();
    c.alpha1 = alpha1;
    c.alpha2 = alpha2;
    c.validate(p->cfg);
    *out = new vf_cost{std::move(c)};
    return VF_OK;
  });
}

void vf_cost_destroy(vf_cost* c) { delete c; }

vf_status vf_reduced_gradient(const vf_problem* p, const vf_cost* c, const double* g, size_t len,
                              double* objective, double* gradient) {
  return guard([&] {
    if (!p || !c) throw std::invalid_argument("null argument");
    const TimeSeries gs = read_series(p->cfg, g, len);
    const ReducedEvaluation ev = gradient ? reduced_gradient(gs, c->cost, p->cfg)
                                          : reduced_objective(gs, c->cost, p->cfg);
    if (objective) *objective = ev.objective;
    if (gradient) write_series(ev.gradient, gradient);
    return VF_OK;
  });
}

vf_status vf_minimize_smoothed(const vf_problem* p, const vf_cost* c, double* g, size_t len,
                               int max_outer, double opt_tol, double* objective, int* iterations,
                               int* converged) {
  return guard([&] {
    if (!p || !c) throw std::invalid_argument("null argument");
    OptimizeOptions o;
    o.max_outer = max_outer;
    o.opt_tol = opt_tol;
    const MinimizeResult r =
        minimize_smoothed(p->cfg.rho, read_series(p->cfg, g, len), c->cost, p->cfg, o);
    write_series(r.g, g);
    if (objective) *objective = r.report.objective.back();
    if (iterations) *iterations = r.report.iterations;
    if (converged) *converged = r.report.converged ? 1 : 0;
    return VF_OK;
  });
}

vf_status vf_check_kkt(const vf_problem* p, const vf_cost* c, const double* g, size_t len,
                       double eps, vf_kkt_report* out) {
  return guard([&] {
    if (!p || !c || !out) throw std::invalid_argument("null argument");
    const TimeSeries gs = read_series(p->cfg, g, len);
    const ReducedEvaluation ev = reduced_gradient(gs, c->cost, p->cfg);
    const KktReport k = check_nonsmooth_kkt(ev.state, gs, ev.adjoint, c->cost, p->cfg, eps);
    *out = vf_kkt_report{k.r_state,    k.r_adjoint, k.r_gradient, k.r_comp, k.comp_bound,
                         k.sign_u_xi, k.sign_q_xi, k.cone_c,     {}};
    for (int i = 0; i < regime_count; ++i) out->regime_count[i] = k.regimes.stats[i].count;
    return VF_OK;
  });
}

vf_status vf_config_load(const char* path, vf_config** out) {
  return guard([&] {
    if (!path || !out) throw std::invalid_argument("null argument");
    *out = new vf_config{parse_config(path)};
    return VF_OK;
  });
}

vf_status vf_config_parse(const char* text, vf_config** out) {
  return guard([&] {
    if (!text || !out) throw std::invalid_argument("null argument");
    *out = new vf_config{parse_config_string(text)};
    return VF_OK;
  });
}

void vf_config_destroy(vf_config* c) { delete c; }

vf_status vf_run_command(const vf_config* c, const char* command, int assert_thresholds,
                         const char* out_dir, int* exit_code) {
  return guard([&] {
    if (!c || !command || !exit_code) throw std::invalid_argument("null argument");
    CommandOptions o;
    o.assert_thresholds = assert_thresholds != 0;
    if (out_dir) o.out_dir = out_dir;
    *exit_code = run_command(command, c->cfg, o, std::cout);
    std::cout.flush();
    return VF_OK;
  });
}

}  // extern "C"
