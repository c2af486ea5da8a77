#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "sdflow/evolve.hpp"

using sdflow::CurveState;
using sdflow::DiagnosticsRecord;
using sdflow::DiagnosticsSeries;
using sdflow::RunConfig;
using sdflow::Vec2;

TEST_CASE("short ellipse run conserves area and shrinks perimeter",
          "[evolve]") {
  const CurveState ell = sdflow::make_ellipse(2.0, 1.0, 32);
  RunConfig cfg;
  cfg.tau = 1e-4;
  cfg.steps = 50;
  cfg.snapshot_every = 10;
  const auto result = sdflow::evolve(ell, cfg);

  REQUIRE_FALSE(result.aborted);
  REQUIRE(result.series.records.size() == 51);
  REQUIRE(result.snapshots.size() == 6);
  REQUIRE(result.snapshots.front().step == 0);
  REQUIRE(result.snapshots.back().step == 50);
  REQUIRE(result.warnings.empty());

  const auto rep = sdflow::check_invariants(result.series, 1e-9, 1e-12);
  REQUIRE(rep.ok());

  const auto& first = result.series.records.front();
  const auto& last = result.series.records.back();
  REQUIRE(first.newton_iters == 0);
  REQUIRE(last.perimeter < first.perimeter);
  REQUIRE(last.psi >= 1.0);
  for (std::size_t i = 1; i < result.series.records.size(); ++i) {
    const auto& r = result.series.records[i];
    REQUIRE(r.newton_iters >= 1);
    // The default Jacobian freezes the unweighted gamma/A coefficients, so
    // Newton contracts linearly and needs a few extra sweeps.
    REQUIRE(r.newton_iters <= 8);
    REQUIRE(r.time == Catch::Approx(static_cast<double>(r.step) * cfg.tau));
  }

  // The exact-derivative Jacobian converges quadratically: same run, fewer
  // iterations per step.
  RunConfig twcfg = cfg;
  twcfg.newton.jacobian_variant = sdflow::JacobianVariant::time_weighted;
  const auto tw = sdflow::evolve(ell, twcfg);
  REQUIRE_FALSE(tw.aborted);
  for (std::size_t i = 2; i < tw.series.records.size(); ++i)
    REQUIRE(tw.series.records[i].newton_iters <= 6);
}

TEST_CASE("regular polygons are discrete equilibria", "[evolve]") {
  const CurveState poly = sdflow::make_ellipse(1.0, 1.0, 32);
  RunConfig cfg;
  cfg.tau = 1e-4;
  cfg.steps = 20;
  const auto result = sdflow::evolve(poly, cfg);
  REQUIRE_FALSE(result.aborted);

  double moved = 0.0;
  for (std::size_t v = 0; v < poly.size(); ++v)
    moved = std::max(moved, (result.final.nodes[v] - poly.nodes[v]).norm());
  REQUIRE(moved < 1e-8);
  // p stays near the circumradius curvature, q near zero.
  for (std::size_t v = 0; v < poly.size(); ++v) {
    REQUIRE(std::abs(result.p[v] - 1.0) < 0.01);
    REQUIRE(std::abs(result.q[v]) < 1e-8);
  }
}

TEST_CASE("redistribute_arclength fixes regular polygons and equalizes others",
          "[evolve]") {
  // A regular polygon resamples to itself (node 0 anchored).
  const CurveState regular = sdflow::make_ellipse(1.0, 1.0, 24);
  const CurveState same = sdflow::redistribute_arclength(regular);
  for (std::size_t v = 0; v < 24; ++v) {
    REQUIRE((same.nodes[v] - regular.nodes[v]).norm() < 1e-12);
  }

  // Jittered circle samples: ratio improves, perimeter cannot grow, the
  // area change matches an independent shoelace difference.
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> jit(-0.3, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec2> pts(40);
    for (std::size_t j = 0; j < 40; ++j) {
      const double th = 2.0 * M_PI * (static_cast<double>(j) + jit(rng)) / 40.0;
      pts[j] = {std::cos(th), std::sin(th)};
    }
    const CurveState before(std::move(pts));
    const CurveState after = sdflow::redistribute_arclength(before);

    REQUIRE(after.nodes[0].x == before.nodes[0].x);
    REQUIRE(after.nodes[0].y == before.nodes[0].y);
    REQUIRE(sdflow::mesh_ratio(after) < sdflow::mesh_ratio(before));
    REQUIRE(sdflow::mesh_ratio(after) < 1.05);
    REQUIRE(sdflow::perimeter(after) <= sdflow::perimeter(before) + 1e-14);

    const double change =
        sdflow::polygon_area(after) - sdflow::polygon_area(before);
    const double oracle_change =
        oracles::shoelace(after.nodes) - oracles::shoelace(before.nodes);
    REQUIRE(std::abs(change - oracle_change) < 1e-14);
  }
}

TEST_CASE("evolve logs redistribution events", "[evolve]") {
  const CurveState ell = sdflow::make_ellipse(2.0, 1.0, 48);
  RunConfig cfg;
  cfg.tau = 1e-4;
  cfg.steps = 100;
  cfg.redistribution = sdflow::Redistribution::arclength;
  cfg.redistribute_every = 25;
  const auto result = sdflow::evolve(ell, cfg);

  REQUIRE_FALSE(result.aborted);
  REQUIRE(result.redistribution_events.size() == 3);
  REQUIRE(result.redistribution_events[0].step == 25);
  REQUIRE(result.redistribution_events[1].step == 50);
  REQUIRE(result.redistribution_events[2].step == 75);
  // The first event rebalances an angle-uniform mesh onto arclength and cuts
  // corners worth a fraction of a percent of the area; later events are far
  // smaller. New nodes sit on the old polygon, so perimeter cannot grow.
  const double area0 = sdflow::polygon_area(ell);
  for (const auto& ev : result.redistribution_events) {
    REQUIRE(std::abs(ev.area_change) < 0.005 * area0);
    REQUIRE(ev.perimeter_change <= 1e-14);
  }
  // Redistribution keeps the mesh ratio under control.
  REQUIRE(result.series.records.back().psi < 1.2);
}

TEST_CASE("explicit snapshot steps are honored", "[evolve]") {
  const CurveState ell = sdflow::make_ellipse(2.0, 1.0, 16);
  RunConfig cfg;
  cfg.tau = 1e-4;
  cfg.steps = 15;
  cfg.snapshot_steps = {7, 13};
  const auto result = sdflow::evolve(ell, cfg);
  REQUIRE(result.snapshots.size() == 2);
  REQUIRE(result.snapshots[0].step == 7);
  REQUIRE(result.snapshots[1].step == 13);
  REQUIRE(result.snapshots[0].time == Catch::Approx(7e-4));
}

TEST_CASE("check_invariants flags synthetic violations", "[evolve]") {
  DiagnosticsSeries series;
  for (int i = 0; i <= 4; ++i) {
    DiagnosticsRecord r;
    r.step = i;
    r.area = 1.0;
    r.perimeter = 10.0;
    series.records.push_back(r);
  }
  series.records[2].area = 1.0 + 5e-7;
  series.records[3].perimeter = 10.0 + 1e-8;

  const auto rep = sdflow::check_invariants(series, 1e-9, 1e-12);
  REQUIRE_FALSE(rep.ok());
  REQUIRE(rep.area_violations == std::vector<long>{2});
  REQUIRE(rep.perimeter_violations == std::vector<long>{3});
  REQUIRE(rep.max_area_drift == Catch::Approx(5e-7));
  REQUIRE(rep.max_perimeter_increase == Catch::Approx(1e-8));

  const auto clean = sdflow::check_invariants(series, 1e-6, 1e-8);
  REQUIRE(clean.ok());
}

TEST_CASE("diagnostics CSV round trips exactly", "[evolve]") {
  const CurveState ell = sdflow::make_ellipse(2.0, 1.0, 16);
  RunConfig cfg;
  cfg.tau = 1e-4;
  cfg.steps = 5;
  const auto result = sdflow::evolve(ell, cfg);

  const auto path = std::filesystem::path("tmp_diag_roundtrip.csv");
  sdflow::write_diagnostics_csv(path.string(), result.series);
  const auto back = sdflow::read_diagnostics_csv(path.string());
  std::filesystem::remove(path);

  REQUIRE(back.records.size() == result.series.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    const auto& a = result.series.records[i];
    const auto& b = back.records[i];
    REQUIRE(b.step == a.step);
    REQUIRE(b.time == a.time);
    REQUIRE(b.perimeter == a.perimeter);
    REQUIRE(b.area == a.area);
    REQUIRE(b.psi == a.psi);
    REQUIRE(b.newton_iters == a.newton_iters);
    REQUIRE(b.area_drift_rel == a.area_drift_rel);
    REQUIRE(b.perimeter_delta == a.perimeter_delta);
  }
}

TEST_CASE("evolve aborts cleanly when no retry budget remains", "[evolve]") {
  const CurveState ell = sdflow::make_ellipse(2.0, 1.0, 16);
  RunConfig cfg;
  cfg.tau = 0.5;
  cfg.steps = 3;
  cfg.max_retry_depth = 0;
  cfg.newton.max_iter = 2;
  const auto result = sdflow::evolve(ell, cfg);
  REQUIRE(result.aborted);
  REQUIRE_FALSE(result.abort_reason.empty());
  REQUIRE(result.series.records.size() >= 1);
  REQUIRE(result.series.records.front().step == 0);
}

TEST_CASE("tau-halving retries rescue a hard step", "[evolve]") {
  // tau = 0.15 sits past the Newton basin on this mesh (the iteration
  // diverges outright), while tau = 0.075 converges comfortably.
  const CurveState ell = sdflow::make_ellipse(2.0, 1.0, 16);
  RunConfig strict;
  strict.tau = 0.15;
  strict.steps = 1;
  strict.max_retry_depth = 0;

  RunConfig relaxed = strict;
  relaxed.max_retry_depth = 4;

  const auto hard = sdflow::evolve(ell, strict);
  REQUIRE(hard.aborted);
  const auto rescued = sdflow::evolve(ell, relaxed);
  REQUIRE_FALSE(rescued.aborted);
  REQUIRE(rescued.series.records.size() == 2);
  // Substep iterations accumulate in the step record.
  REQUIRE(rescued.series.records[1].newton_iters > 10);
}

TEST_CASE("evolve validates its configuration", "[evolve]") {
  const CurveState ell = sdflow::make_ellipse(2.0, 1.0, 16);
  RunConfig cfg;
  cfg.tau = 0.0;
  REQUIRE_THROWS_AS(sdflow::evolve(ell, cfg), sdflow::invalid_parameter_error);

  RunConfig redis;
  redis.redistribution = sdflow::Redistribution::arclength;
  redis.redistribute_every = 0;
  REQUIRE_THROWS_AS(sdflow::evolve(ell, redis),
                    sdflow::invalid_parameter_error);
}
