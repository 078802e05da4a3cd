#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "viscoflow/config.hpp"

namespace viscoflow {

/// Process exit codes of the experiment drivers.
enum ExitCode : int {
  exit_ok = 0,
  exit_config = 1,
  exit_solver = 2,
  exit_threshold = 3,
  exit_io = 4,
};

/// Writing an output artifact failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandOptions {
  bool assert_thresholds = false;
  std::optional<std::string> out_dir;  // overrides output.dir
};

// Analyses behind the commands. They return plain numbers so tests can reuse
// them without touching the file system.

struct SweepEntry {
  double rho = 0.0;
  double err_L2IV = 0.0;    // ‖w_ρ − w‖_{L²(I,V)}
  double err_CIV = 0.0;     // max_k ‖z_ρ,k − z_k‖_V
  double bound_sqrt = 0.0;  // sqrt(4Tρ/σ)
  double slope_local = 0.0; // NaN for the first entry
  double initial_rate_V = 0.0;  // ‖w_1‖_V
};

struct SweepResult {
  std::vector<SweepEntry> entries;  // in rho_list order
  double fitted_slope = 0.0;        // least squares on log err vs log ρ
};

/// Compares S_ρ(g) with the non-smooth oracle for each ρ. Entries run on
/// separate threads when parallel is set; the result does not depend on it.
SweepResult rho_sweep(const TimeSeries& g, const ProblemConfig& cfg,
                      const std::vector<double>& rho_list, bool parallel = true);

struct GradCheckResult {
  std::vector<double> epsilons;
  std::vector<double> worst_rel_error;     // per epsilon, max over directions
  std::vector<double> best_rel_error;      // per direction, min over epsilons
  double max_best_rel_error = 0.0;         // max over directions of best_rel_error
};

/// Central differences of the reduced objective along random directions
/// (vanishing at t = 0, unit H¹ norm) against the H¹ gradient.
GradCheckResult gradient_check(const TimeSeries& g, const CostConfig& cost,
                               const ProblemConfig& cfg, const std::vector<double>& epsilons,
                               int directions, unsigned seed);

/// Slope of the least-squares line through (log x, log y).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Command drivers. Each writes <out>/<command>.csv plus <command>.json and a
// short summary to log, and returns an ExitCode. Solver errors and IO errors
// are mapped to exit codes; other exceptions propagate.
int cmd_solve(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_grad_check(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_rho_sweep(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_optimize(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_check_kkt(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log);

/// Command names as typed on the command line (solve, grad-check, rho-sweep,
/// optimize, check-kkt).
const std::vector<std::string>& command_names();

/// Dispatches by name. Throws UsageError for unknown commands.
int run_command(std::string_view name, const ExperimentConfig& cfg, const CommandOptions& opts,
                std::ostream& log);

}  // namespace viscoflow
