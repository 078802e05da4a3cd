// Command-line front end: viscoflow <command> --config <path> [--assert] [--out <dir>]
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "viscoflow/viscoflow.h"

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of a viscous stick-slip evolution: solvers and experiments"};
  app.set_version_flag("--version", std::string(vf_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool assert_thresholds = false;

  const char* commands[][2] = {
      {"solve", "Forward solve of the state equation for the configured control"},
      {"grad-check", "Compare the adjoint gradient with central finite differences"},
      {"rho-sweep", "Convergence of the smoothed solutions towards the non-smooth one"},
      {"optimize", "Gradient descent with continuation in the smoothing parameter"},
      {"check-kkt", "Optimality-system residuals and stick/slip regimes at the configured control"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", config_path, "Config file (sectioned key = value)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_flag("--assert", assert_thresholds, "Exit with 3 if an acceptance threshold fails");
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  const std::string command = app.get_subcommands().front()->get_name();

  vf_config* cfg = nullptr;
  if (vf_config_load(config_path.c_str(), &cfg) != VF_OK) {
    std::fprintf(stderr, "config error: %s\n", vf_last_error());
    return 1;
  }
  int code = 0;
  const vf_status s = vf_run_command(cfg, command.c_str(), assert_thresholds ? 1 : 0,
                                     out_dir.empty() ? nullptr : out_dir.c_str(), &code);
  vf_config_destroy(cfg);
  if (s != VF_OK) {
    std::fprintf(stderr, "error: %s\n", vf_last_error());
    switch (s) {
      case VF_ERROR_SOLVER: return 2;
      case VF_ERROR_IO: return 4;
      default: return 1;
    }
  }
  return code;
}
