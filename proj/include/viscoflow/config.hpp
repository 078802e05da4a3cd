#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "viscoflow/adjoint.hpp"
#include "viscoflow/optimizer.hpp"

namespace viscoflow {

/// Everything a CLI run needs. Sections and keys of the config file mirror the
/// nested structs one to one, e.g.
///
///   [problem]
///   sigma = 1
///   n_el = 16
///
/// Keys before the first section header are resolved by name (names are
/// unique across sections).
struct ExperimentConfig {
  struct Problem {
    double sigma = 1.0;
    double T = 1.0;
    int n_el = 16;
    int n_t = 16;
    double rho = 1e-2;
  } problem;

  struct Cost {
    std::string target = "sine";   // preset name or CSV path
    double target_scale = 1.0;
    double alpha1 = 1.0;
    double alpha2 = 0.0;
    std::string control = "sine";  // fixed control for solve / rho-sweep / grad-check / check-kkt
    double control_scale = 1.5;
  } cost;

  struct Optimizer {
    int max_outer = 5000;
    double opt_tol = 1e-8;
    double armijo_c = 1e-4;
    double shrink = 0.5;
    std::optional<std::string> prox_center;
    std::optional<double> delta;
    std::vector<double> rho_schedule = default_rho_schedule();
  } optimizer;

  struct Solve {
    std::string solver = "regularized";  // or "nonsmooth"
  } solve;

  struct Sweep {
    std::vector<double> rho_list{1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4};
    double slack = 0.1;
    bool parallel = true;
  } sweep;

  struct GradCheck {
    std::vector<double> epsilons{1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 1e-6, 1e-7, 1e-8};
    int directions = 10;
    unsigned seed = 20240607;
    double rel_tol = 1e-6;
  } grad_check;

  struct Kkt {
    double eps = 0.05;
  } kkt;

  struct Output {
    std::string dir = "out";
  } output;
};

/// Parses and validates. Throws ConfigError listing every violation.
ExperimentConfig parse_config_string(std::string_view text);
/// Throws ConfigError (also for an unreadable file).
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Every key with its effective value, in file order (section.key = value).
std::vector<std::pair<std::string, std::string>> config_key_values(const ExperimentConfig& cfg);

ProblemConfig make_problem(const ExperimentConfig& cfg);
CostConfig make_cost(const ExperimentConfig& cfg, const ProblemConfig& problem);
/// Nodal control g[k] from cost.control and cost.control_scale.
TimeSeries make_control(const ExperimentConfig& cfg, const ProblemConfig& problem);
OptimizeOptions make_optimize_options(const ExperimentConfig& cfg, const ProblemConfig& problem);

}  // namespace viscoflow
