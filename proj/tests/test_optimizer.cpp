#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "viscoflow/errors.hpp"
#include "viscoflow/optimizer.hpp"
#include "viscoflow/presets.hpp"

using namespace viscoflow;

namespace {

struct Instance {
  ProblemConfig cfg{1.0, Mesh(16), TimeGrid(1.0, 16), SmoothingParam(1e-2)};
  CostConfig cost;
  Instance(double scale = 8.0, double alpha1 = 100.0) {
    cost.z_d = preset_series("sine", scale, cfg.mesh, cfg.grid);
    cost.z_T = cost.z_d.back();
    cost.alpha1 = alpha1;
    cost.alpha2 = 1.0;
  }
  TimeSeries zero() const { return zero_series(cfg.mesh, cfg.grid); }
};

}  // namespace

TEST_CASE("optimizer: default schedule") {
  const auto s = default_rho_schedule();
  REQUIRE(s.size() == 10);
  CHECK(s[0] == 0.1);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] == s[i - 1] / 2);
}

TEST_CASE("optimizer: option validation") {
  OptimizeOptions o;
  o.rho_schedule = {1e-2, 1e-2};
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = OptimizeOptions{};
  o.rho_schedule.clear();
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = OptimizeOptions{};
  o.armijo_c = 1.5;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o = OptimizeOptions{};
  o.delta = -1.0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
}

TEST_CASE("optimizer: initial control must vanish at t = 0") {
  Instance in;
  TimeSeries g0 = in.zero();
  g0[0][2] = 1.0;
  CHECK_THROWS_AS(minimize_smoothed(in.cfg.rho, g0, in.cost, in.cfg, OptimizeOptions{}),
                  std::invalid_argument);
}

TEST_CASE("optimizer: zero targets are already optimal") {
  Instance in(0.0);
  const MinimizeResult r = minimize_smoothed(in.cfg.rho, in.zero(), in.cost, in.cfg, OptimizeOptions{});
  CHECK(r.report.iterations == 0);
  CHECK(r.report.converged);
  for (const auto& g : r.g) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("optimizer: Armijo decrease along the report") {
  Instance in;
  OptimizeOptions o;
  const MinimizeResult r = minimize_smoothed(in.cfg.rho, in.zero(), in.cost, in.cfg, o);
  CHECK(r.report.converged);
  CHECK(r.report.grad_norm.back() <= o.opt_tol);
  REQUIRE(r.report.objective.size() == static_cast<std::size_t>(r.report.iterations) + 1);
  for (int i = 0; i < r.report.iterations; ++i) {
    const double gn = r.report.grad_norm[i];
    CHECK(r.report.objective[i + 1] <= r.report.objective[i] - o.armijo_c * r.report.step[i] * gn * gn +
                                           objective_rounding(r.report.objective[i]));
  }
  REQUIRE(r.report.kkt.has_value());
  CHECK(r.report.kkt->r_gradient <= 10 * o.opt_tol);
}

TEST_CASE("optimizer: result beats random controls of the same H1 norm") {
  Instance in;
  const MinimizeResult r = minimize_smoothed(in.cfg.rho, in.zero(), in.cost, in.cfg, OptimizeOptions{});
  const double best = r.report.objective.back();
  const double radius = h1_norm(r.g, in.cfg.mesh, in.cfg.grid);
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    TimeSeries g = oracle::random_series(in.cfg.mesh, in.cfg.grid, rng);
    const double n = h1_norm(g, in.cfg.mesh, in.cfg.grid);
    for (auto& v : g) v *= radius / n;
    CHECK(best <= reduced_objective(g, in.cost, in.cfg).objective);
  }
}

TEST_CASE("optimizer: runs are bit-identical") {
  Instance in;
  const MinimizeResult a = minimize_smoothed(in.cfg.rho, in.zero(), in.cost, in.cfg, OptimizeOptions{});
  const MinimizeResult b = minimize_smoothed(in.cfg.rho, in.zero(), in.cost, in.cfg, OptimizeOptions{});
  CHECK(a.report.objective == b.report.objective);
  for (std::size_t k = 0; k < a.g.size(); ++k) CHECK(a.g[k] == b.g[k]);
}

TEST_CASE("optimizer: projection onto the trust ball") {
  Instance in;
  const Mesh& m = in.cfg.mesh;
  const TimeGrid& grid = in.cfg.grid;
  const TimeSeries center = preset_series("pulse", 0.5, m, grid);
  std::mt19937_64 rng(1);
  const TimeSeries g = oracle::random_series(m, grid, rng, 5.0);
  const TimeSeries p = project_ball(g, center, 0.3, m, grid);
  TimeSeries d(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) d[k] = p[k] - center[k];
  CHECK(h1_norm(d, m, grid) == doctest::Approx(0.3));
  const TimeSeries inside = project_ball(center, center, 0.3, m, grid);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(inside[k] == center[k]);

  OptimizeOptions o;
  o.prox_center = center;
  o.delta = 0.5;
  o.max_outer = 200;
  const MinimizeResult r = minimize_smoothed(in.cfg.rho, in.zero(), in.cost, in.cfg, o);
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = r.g[k] - center[k];
  CHECK(h1_norm(d, m, grid) <= 0.5 + 1e-12);
  for (std::size_t i = 1; i < r.report.objective.size(); ++i)
    CHECK(r.report.objective[i] <= r.report.objective[i - 1] + objective_rounding(r.report.objective[i - 1]));
}

TEST_CASE("optimizer: iteration cap is reported, not thrown") {
  Instance in;
  OptimizeOptions o;
  o.max_outer = 2;
  const MinimizeResult r = minimize_smoothed(in.cfg.rho, in.zero(), in.cost, in.cfg, o);
  CHECK(r.report.iterations == 2);
  CHECK_FALSE(r.report.converged);
}

TEST_CASE("optimizer: a one-level schedule is minimize_smoothed") {
  Instance in;
  OptimizeOptions o;
  o.rho_schedule = {1e-2};
  const ContinuationResult c = continuation(in.cost, in.cfg, o);
  const MinimizeResult r = minimize_smoothed(SmoothingParam(1e-2), in.zero(), in.cost, in.cfg, o);
  REQUIRE(c.levels.size() == 1);
  CHECK(c.levels[0].report.objective == r.report.objective);
}

TEST_CASE("optimizer: continuation path on the reference instance") {
  Instance in;
  const OptimizeOptions o;
  const ContinuationResult c = continuation(in.cost, in.cfg, o);
  REQUIRE(c.levels.size() == 10);
  // Level-to-level changes need not shrink monotonically (a regime switch can
  // cause a jump), but they settle once the active sets stop moving.
  std::vector<double> change;
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    CHECK(c.levels[i].report.converged);
    if (i == 0) continue;
    TimeSeries d(c.levels[i].g.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = c.levels[i].g[k] - c.levels[i - 1].g[k];
    change.push_back(h1_norm(d, in.cfg.mesh, in.cfg.grid));
  }
  for (std::size_t i = change.size() - 3; i < change.size(); ++i) CHECK(change[i] < change[i - 1]);
  CHECK(change.back() <= 1e-2 * h1_norm(c.levels.back().g, in.cfg.mesh, in.cfg.grid));
  CHECK(c.nonsmooth_gap_L2V <= c.nonsmooth_bound);
}
