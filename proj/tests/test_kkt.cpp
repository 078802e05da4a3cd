#include <doctest.h>

#include <cmath>

#include "viscoflow/kkt.hpp"
#include "viscoflow/optimizer.hpp"
#include "viscoflow/presets.hpp"

using namespace viscoflow;

namespace {

ProblemConfig problem(double rho = 1e-2) {
  return ProblemConfig(1.0, Mesh(16), TimeGrid(1.0, 16), SmoothingParam(rho));
}

CostConfig tracking(const ProblemConfig& cfg, const char* target, double scale, double alpha1) {
  CostConfig c;
  c.z_d = preset_series(target, scale, cfg.mesh, cfg.grid);
  c.z_T = c.z_d.back();
  c.alpha1 = alpha1;
  c.alpha2 = 1.0;
  return c;
}

}  // namespace

TEST_CASE("kkt: regime names") {
  CHECK(regime_name(Regime::stick_interior) == "stick_interior");
  CHECK(regime_name(Regime::unclassified) == "unclassified");
}

TEST_CASE("kkt: all-zero instance") {
  const ProblemConfig cfg = problem();
  const CostConfig cost = tracking(cfg, "zero", 1.0, 1.0);
  const TimeSeries g = zero_series(cfg.mesh, cfg.grid);
  const ReducedEvaluation ev = reduced_gradient(g, cost, cfg);
  const KktReport r = check_nonsmooth_kkt(ev.state, g, ev.adjoint, cost, cfg);
  CHECK(r.r_state == 0.0);
  CHECK(r.r_adjoint == 0.0);
  CHECK(r.r_gradient == 0.0);
  CHECK(r.r_comp == 0.0);
  CHECK(r.sign_u_xi == 0.0);
  CHECK(r.sign_q_xi == 0.0);
  CHECK(r.cone_c == 0.0);
  CHECK(r.regimes.fraction(Regime::stick_interior) == 1.0);
}

TEST_CASE("kkt: pure stick instance") {
  const ProblemConfig cfg = problem();
  const TimeSeries g = preset_series("pulse", 0.9, cfg.mesh, cfg.grid);
  const Trajectory tr = solve_nonsmooth(to_loads(g, cfg.mesh), cfg);
  const RegimeTable t = classify_regimes(tr, g, cfg);
  CHECK(t.total() == 16 * 15);
  CHECK(t.fraction(Regime::stick_interior) == 1.0);
  CHECK(t.fraction(Regime::unclassified) == 0.0);
}

TEST_CASE("kkt: regime partition and eps validation") {
  const ProblemConfig cfg = problem();
  const TimeSeries g = preset_series("sine", 3.0, cfg.mesh, cfg.grid);
  const Trajectory tr = solve_nonsmooth(to_loads(g, cfg.mesh), cfg);
  const RegimeTable t = classify_regimes(tr, g, cfg, 0.1);
  long sum = 0;
  for (const auto& s : t.stats) sum += s.count;
  CHECK(sum == 16 * 15);
  CHECK(t.total() == sum);
  CHECK(t.fraction(Regime::slip_positive) > 0.0);
  CHECK(t.fraction(Regime::unclassified) == 0.0);
  CHECK_THROWS_AS(classify_regimes(tr, g, cfg, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(classify_regimes(tr, g, cfg, 0.5), std::invalid_argument);
}

TEST_CASE("kkt: cone_c conventions") {
  const ProblemConfig cfg = problem();
  const TimeSeries g = preset_series("sine", 3.0, cfg.mesh, cfg.grid);
  const CostConfig cost = tracking(cfg, "sine", 8.0, 100.0);
  const ReducedEvaluation ev = reduced_gradient(g, cost, cfg);
  RegimeTable t = classify_regimes(ev.state, g, cfg);
  const double c = check_cone_c(ev.state, ev.adjoint, t);
  CHECK(c >= 0.0);
  CHECK(c <= 1.0);

  AdjointTriple zero = ev.adjoint;
  for (auto& x : zero.xi) x.setZero();
  CHECK(check_cone_c(ev.state, zero, t) == 0.0);

  for (auto& row : t.labels)
    for (auto& l : row) l = Regime::slip_positive;
  CHECK(check_cone_c(ev.state, ev.adjoint, t) == 0.0);
}

TEST_CASE("kkt: sign identities hold at every smoothing level") {
  for (double rho : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const ProblemConfig cfg = problem(rho);
    const CostConfig cost = tracking(cfg, "sine", 8.0, 100.0);
    const TimeSeries g = preset_series("sine", 3.0, cfg.mesh, cfg.grid);
    const ReducedEvaluation ev = reduced_gradient(g, cost, cfg);
    const KktReport r = check_nonsmooth_kkt(ev.state, g, ev.adjoint, cost, cfg);
    CHECK(r.sign_u_xi <= 1e-10);
    CHECK(r.sign_q_xi <= 1e-10);
    CHECK(r.r_adjoint <= 1e-10);
    // A smoothed state misses the sign condition by at most max ρr(1−r)² = 4ρ/27.
    CHECK(r.r_state <= 4.0 * rho / 27.0 + 1e-10);
    CHECK(r.r_gradient > 0.0);
  }
}

TEST_CASE("kkt: continuation drives the residuals down") {
  const ProblemConfig cfg = problem();
  const CostConfig cost = tracking(cfg, "sine", 8.0, 100.0);
  const ContinuationResult c = continuation(cost, cfg, OptimizeOptions{});
  const KktReport& last = *c.levels.back().report.kkt;
  CHECK(last.r_gradient <= 1e-7);
  CHECK(last.sign_u_xi <= 1e-8);
  CHECK(last.regimes.fraction(Regime::unclassified) <= 0.01);
  CHECK(last.cone_c <= 0.05);
  for (std::size_t i = 1; i < c.levels.size(); ++i) {
    CHECK(c.levels[i].report.kkt->r_comp < c.levels[i - 1].report.kkt->r_comp);
    CHECK(c.levels[i].report.kkt->cone_c < c.levels[i - 1].report.kkt->cone_c);
  }
  CHECK(last.r_comp <= 10.0 * last.comp_bound);
}

TEST_CASE("kkt: grid mismatch") {
  const ProblemConfig cfg = problem();
  const ProblemConfig other(1.0, Mesh(8), TimeGrid(1.0, 16), SmoothingParam(1e-2));
  const CostConfig cost = tracking(cfg, "sine", 1.0, 1.0);
  const TimeSeries g = zero_series(cfg.mesh, cfg.grid);
  const ReducedEvaluation ev = reduced_gradient(g, cost, cfg);
  CHECK_THROWS_AS(check_nonsmooth_kkt(ev.state, zero_series(other.mesh, other.grid), ev.adjoint, cost, cfg),
                  std::invalid_argument);
}
