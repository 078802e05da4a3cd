#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "viscoflow/config.hpp"
#include "viscoflow/errors.hpp"
#include "viscoflow/experiments.hpp"

using namespace viscoflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig small(const std::string& extra = "") {
  return parse_config_string(
      "[problem]\nsigma = 1\nT = 1\nn_el = 16\nn_t = 16\nrho = 1e-2\n"
      "[cost]\ntarget = sine\ntarget_scale = 8\nalpha1 = 100\nalpha2 = 1\n" + extra);
}

int run(const std::string& cmd, const ExperimentConfig& cfg, const fs::path& out, bool assert_ = false) {
  CommandOptions o;
  o.assert_thresholds = assert_;
  o.out_dir = out.string();
  std::ostringstream log;
  return run_command(cmd, cfg, o, log);
}

}  // namespace

TEST_CASE("experiments: log-log slope") {
  CHECK(loglog_slope({1, 10, 100}, {2, 20, 200}) == doctest::Approx(1.0));
  CHECK(loglog_slope({1e-2, 1e-4}, {1e-1, 1e-2}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(loglog_slope({1}, {1}), std::invalid_argument);
}

TEST_CASE("experiments: unknown command") {
  TempDir d("vf_exp_unknown");
  CHECK_THROWS_AS(run("frobnicate", small(), d.path), UsageError);
  CHECK(command_names().size() == 5);
}

TEST_CASE("experiments: solve on the zero instance writes zeros") {
  TempDir d("vf_exp_zero");
  const ExperimentConfig cfg = parse_config_string("[cost]\ncontrol = zero\ntarget = zero\n");
  CHECK(run("solve", cfg, d.path, true) == exit_ok);
  CHECK(first_line(d.path / "solve.csv") == "k,t,node,x,z,w");
  std::ifstream f(d.path / "solve.csv");
  std::string line;
  std::getline(f, line);
  int rows = 0;
  while (std::getline(f, line) && line[0] != '#') {
    ++rows;
    CHECK(line.substr(line.size() - 4) == ",0,0");
  }
  CHECK(rows == 17 * 15);
  const std::string text = slurp(d.path / "solve.csv");
  CHECK(text.find("# command=solve") != std::string::npos);
  CHECK(text.find("# problem.sigma=1") != std::string::npos);
}

TEST_CASE("experiments: non-smooth solve carries the dual column") {
  TempDir d("vf_exp_ns");
  const ExperimentConfig cfg = small("control_scale = 3\n[solve]\nsolver = nonsmooth\n");
  CHECK(run("solve", cfg, d.path, true) == exit_ok);
  CHECK(first_line(d.path / "solve.csv") == "k,t,node,x,z,w,dual");
  const auto j = nlohmann::json::parse(slurp(d.path / "solve.json"));
  CHECK(j["inclusion"]["force_balance"].get<double>() <= 1e-8);
}

TEST_CASE("experiments: output is deterministic") {
  TempDir a("vf_exp_det_a"), b("vf_exp_det_b");
  const ExperimentConfig cfg = small();
  for (const char* cmd : {"solve", "check-kkt", "grad-check"}) {
    CHECK(run(cmd, cfg, a.path) == exit_ok);
    CHECK(run(cmd, cfg, b.path) == exit_ok);
  }
  for (const char* f : {"solve.csv", "kkt.csv", "grad_check.csv", "solve.json", "kkt.json"})
    CHECK(slurp(a.path / f) == slurp(b.path / f));
}

TEST_CASE("experiments: grad-check schema and threshold exit") {
  TempDir d("vf_exp_grad");
  CHECK(run("grad-check", small(), d.path, true) == exit_ok);
  CHECK(first_line(d.path / "grad_check.csv") == "epsilon,rel_error");
  CHECK(run("grad-check", small("[grad_check]\nrel_tol = 1e-30\n"), d.path, true) == exit_threshold);
  CHECK(run("grad-check", small("[grad_check]\nrel_tol = 1e-30\n"), d.path, false) == exit_ok);
}

TEST_CASE("experiments: rho-sweep schema and serial/parallel agreement") {
  TempDir a("vf_exp_sweep_a"), b("vf_exp_sweep_b");
  const std::string sweep = "control_scale = 1.5\n[sweep]\nrho_list = 1e-1, 1e-2, 1e-3\n";
  CHECK(run("rho-sweep", small(sweep + "parallel = true\n"), a.path) == exit_ok);
  CHECK(run("rho-sweep", small(sweep + "parallel = false\n"), b.path) == exit_ok);
  CHECK(first_line(a.path / "rho_sweep.csv") == "rho,err_L2IV,err_CIV,bound_sqrt,slope_local");
  const auto ja = nlohmann::json::parse(slurp(a.path / "rho_sweep.json"));
  const auto jb = nlohmann::json::parse(slurp(b.path / "rho_sweep.json"));
  CHECK(ja["entries"] == jb["entries"]);
  CHECK(ja["checks"]["err_L2IV <= bound_sqrt*(1+slack)"].get<bool>());
}

TEST_CASE("experiments: optimize writes the path and the control") {
  TempDir d("vf_exp_opt");
  CHECK(run("optimize", small(), d.path, true) == exit_ok);
  CHECK(first_line(d.path / "optimize_control.csv") == "k,t,node,x,g");
  const auto j = nlohmann::json::parse(slurp(d.path / "optimize.json"));
  CHECK(j["levels"].size() == 10);
  CHECK(j["levels"].back()["r_gradient"].get<double>() <= 1e-7);
}

TEST_CASE("experiments: check-kkt field rows") {
  TempDir d("vf_exp_kkt");
  CHECK(run("check-kkt", small(), d.path, true) == exit_ok);
  const std::string text = slurp(d.path / "kkt.csv");
  CHECK(first_line(d.path / "kkt.csv") == "field,value");
  for (const char* f : {"\nr_state,", "\nr_adjoint,", "\nr_gradient,", "\nr_comp,", "\nsign_u_xi,",
                        "\nsign_q_xi,", "\ncone_c,", "\ncount_unclassified,"})
    CHECK(text.find(f) != std::string::npos);
}

TEST_CASE("experiments: unwritable output maps to exit 4") {
  const fs::path blocker = fs::temp_directory_path() / "vf_exp_blocker";
  { std::ofstream(blocker) << "x"; }
  CHECK(run("solve", small(), blocker / "sub") == exit_io);
  fs::remove(blocker);
}
