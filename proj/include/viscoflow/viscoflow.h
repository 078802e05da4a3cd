/* C interface to the viscoflow library.
 *
 * Objects are opaque handles created by *_create / *_load functions and freed
 * by the matching *_destroy. Every function returns a vf_status; on failure
 * vf_last_error() describes the problem (per thread, valid until the next
 * call on that thread). Fields are arrays of interior nodal values; time
 * series are stored row-major as (n_t + 1) x nodes doubles, row k = t_k.
 */
#ifndef VISCOFLOW_H
#define VISCOFLOW_H

#include <stddef.h>

#if defined(VF_BUILDING_LIBRARY)
#define VF_API __attribute__((visibility("default")))
#else
#define VF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vf_status {
  VF_OK = 0,
  VF_ERROR_INVALID_ARGUMENT = 1,
  VF_ERROR_SOLVER = 2,
  VF_ERROR_THRESHOLD = 3,
  VF_ERROR_IO = 4,
  VF_ERROR_CONFIG = 5,
  VF_ERROR_USAGE = 6,
  VF_ERROR_INTERNAL = 7
} vf_status;

typedef struct vf_problem vf_problem;
typedef struct vf_trajectory vf_trajectory;
typedef struct vf_cost vf_cost;
typedef struct vf_config vf_config;

VF_API const char* vf_last_error(void);
VF_API const char* vf_version(void);

/* Smoothed absolute value |v|_rho and its first two derivatives. Any output
 * pointer may be NULL. */
VF_API vf_status vf_smooth_abs(double v, double rho, double* value, double* deriv,
                               double* second);

/* Problem on (0,1) x (0,T) with n_el elements and n_t implicit Euler steps. */
VF_API vf_status vf_problem_create(double sigma, double T, int n_el, int n_t, double rho,
                                   vf_problem** out);
VF_API void vf_problem_destroy(vf_problem* p);
VF_API vf_status vf_problem_set_rho(vf_problem* p, double rho);
VF_API int vf_problem_nodes(const vf_problem* p);
VF_API int vf_problem_steps(const vf_problem* p);

/* Forward solves for a nodal control g (time series layout, g at t_0 must be 0). */
VF_API vf_status vf_solve_regularized(const vf_problem* p, const double* g, size_t len,
                                      vf_trajectory** out);
VF_API vf_status vf_solve_nonsmooth(const vf_problem* p, const double* g, size_t len,
                                    vf_trajectory** out);
VF_API void vf_trajectory_destroy(vf_trajectory* t);
/* Copies z and w (each (n_t + 1) x nodes); either pointer may be NULL. */
VF_API vf_status vf_trajectory_state(const vf_trajectory* t, double* z, double* w, size_t len);
/* Copies the dual field; VF_ERROR_USAGE for regularized trajectories. */
VF_API vf_status vf_trajectory_dual(const vf_trajectory* t, double* dual, size_t len);

typedef struct vf_inclusion {
  double dual_range;
  double sign_consistency;
  double force_balance;
} vf_inclusion;

/* Worst inclusion residuals of a non-smooth trajectory driven by g. */
VF_API vf_status vf_inclusion_residual(const vf_problem* p, const vf_trajectory* t,
                                       const double* g, size_t len, vf_inclusion* out);

/* Tracking cost with targets z_d (time series) and z_T (nodes). z_T may be
 * NULL, in which case the last row of z_d is used. */
VF_API vf_status vf_cost_create(const vf_problem* p, const double* z_d, size_t len,
                                const double* z_T, double alpha1, double alpha2, vf_cost** out);
VF_API void vf_cost_destroy(vf_cost* c);

/* Reduced objective and, if gradient is non-NULL, its H1(I,H) gradient. */
VF_API vf_status vf_reduced_gradient(const vf_problem* p, const vf_cost* c, const double* g,
                                     size_t len, double* objective, double* gradient);

/* Gradient descent at the problem's rho from g (overwritten with the result). */
VF_API vf_status vf_minimize_smoothed(const vf_problem* p, const vf_cost* c, double* g,
                                      size_t len, int max_outer, double opt_tol,
                                      double* objective, int* iterations, int* converged);

typedef struct vf_kkt_report {
  double r_state;
  double r_adjoint;
  double r_gradient;
  double r_comp;
  double comp_bound;
  double sign_u_xi;
  double sign_q_xi;
  double cone_c;
  long regime_count[6]; /* stick_interior, stick_upper, stick_lower, slip+, slip-, unclassified */
} vf_kkt_report;

/* Optimality residuals at control g using the regularized state and adjoint. */
VF_API vf_status vf_check_kkt(const vf_problem* p, const vf_cost* c, const double* g, size_t len,
                              double eps, vf_kkt_report* out);

/* Experiment configuration files and the command drivers. */
VF_API vf_status vf_config_load(const char* path, vf_config** out);
VF_API vf_status vf_config_parse(const char* text, vf_config** out);
VF_API void vf_config_destroy(vf_config* c);

/* Runs solve, grad-check, rho-sweep, optimize or check-kkt. Returns VF_OK when
 * the command ran; *exit_code then holds 0, 2 (solver error), 3 (threshold
 * failure with assert_thresholds) or 4 (IO error). out_dir may be NULL. A
 * one-line summary per check goes to stdout. */
VF_API vf_status vf_run_command(const vf_config* c, const char* command, int assert_thresholds,
                                const char* out_dir, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif /* VISCOFLOW_H */
