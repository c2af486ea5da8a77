#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sdflow/geometry.hpp"
#include "sdflow/timequad.hpp"

using sdflow::CurveState;
using sdflow::Mat2;
using sdflow::PathIntegrals;
using sdflow::TimeWeight;
using sdflow::Vec2;

namespace {

double sampled_min_norm(Vec2 a, Vec2 b) {
  double lo = a.norm();
  for (int i = 1; i <= 1000; ++i) {
    const double s = i / 1000.0;
    lo = std::min(lo, (a + s * b).norm());
  }
  return lo;
}

// All eleven scalar kernels via adaptive Simpson, multiplied by tau.
struct OraclePath {
  double inv1[2];
  Vec2 vec3[2];
  Mat2 mat3[2];
  Vec2 unit_tangent;
};

OraclePath oracle_path(Vec2 a, Vec2 b, double tau) {
  auto g = [&](double s) { return a + s * b; };
  auto r = [&](double s) { return g(s).norm(); };
  auto integ = [&](const std::function<double(double)>& f) {
    return tau * oracles::integrate(f, 0.0, 1.0, 1e-13);
  };
  OraclePath o{};
  for (int w = 0; w < 2; ++w) {
    auto wt = [w](double s) { return w ? s : 1.0; };
    o.inv1[w] = integ([&](double s) { return wt(s) / r(s); });
    o.vec3[w].x = integ([&](double s) {
      const double rs = r(s);
      return wt(s) * g(s).x / (rs * rs * rs);
    });
    o.vec3[w].y = integ([&](double s) {
      const double rs = r(s);
      return wt(s) * g(s).y / (rs * rs * rs);
    });
    o.mat3[w].a00 = integ([&](double s) {
      const double rs = r(s);
      return wt(s) * g(s).x * g(s).x / (rs * rs * rs);
    });
    o.mat3[w].a01 = integ([&](double s) {
      const double rs = r(s);
      return wt(s) * g(s).x * g(s).y / (rs * rs * rs);
    });
    o.mat3[w].a10 = o.mat3[w].a01;
    o.mat3[w].a11 = integ([&](double s) {
      const double rs = r(s);
      return wt(s) * g(s).y * g(s).y / (rs * rs * rs);
    });
  }
  o.unit_tangent.x = integ([&](double s) { return g(s).x / r(s); });
  o.unit_tangent.y = integ([&](double s) { return g(s).y / r(s); });
  return o;
}

void require_block(std::vector<std::pair<double, double>> pairs, double rel) {
  double scale = 1e-12;
  for (const auto& [lib, ref] : pairs) scale = std::max(scale, std::abs(ref));
  for (const auto& [lib, ref] : pairs) {
    INFO("lib=" << lib << " ref=" << ref << " scale=" << scale);
    REQUIRE(std::abs(lib - ref) <= rel * scale);
  }
}

}  // namespace

TEST_CASE("static edges reduce to elementary values", "[timequad]") {
  const Vec2 e{2.0, 0.0};
  const auto pi = sdflow::path_integrals(e, e, 1.0);
  REQUIRE(pi.inv1[0] == 0.5);
  REQUIRE(pi.inv1[1] == 0.25);
  REQUIRE(std::abs(pi.vec3[0].x - 0.25) < 1e-16);
  REQUIRE(pi.vec3[0].y == 0.0);
  REQUIRE(std::abs(pi.mat3[0].a00 - 0.5) < 1e-16);
  REQUIRE(pi.mat3[0].a01 == 0.0);
  REQUIRE(pi.mat3[0].a11 == 0.0);
  REQUIRE(std::abs(pi.unit_tangent.x - 1.0) < 1e-16);

  // rho_bar of a static edge is tau/|e| for any tau.
  REQUIRE(sdflow::inv_norm_time_integral({3.0, 4.0}, {3.0, 4.0}, 2.0) ==
          2.0 / 5.0);
  const Vec2 ut = sdflow::unit_tangent_time_integral({3.0, 4.0}, {3.0, 4.0}, 2.0);
  REQUIRE(std::abs(ut.x - 1.2) < 1e-15);
  REQUIRE(std::abs(ut.y - 1.6) < 1e-15);
}

TEST_CASE("named closed-form values", "[timequad]") {
  //(1,0) -> (1,1): int_0^1 ds/sqrt(1+s^2) = asinh(1).
  const double rho = sdflow::inv_norm_time_integral({1, 0}, {1, 1}, 1.0);
  REQUIRE(std::abs(rho - 0.88137358701954302523) < 1e-14);

  // Same path, linear weight: int_0^1 s ds/sqrt(1+s^2) = sqrt(2) - 1.
  const double aw = sdflow::time_weighted_inv_norm({1, 0}, {1, 1}, 1.0);
  REQUIRE(std::abs(aw - 0.4142135623730950488) < 1e-14);

  // (1,0) -> (0,1): both components of the unit-tangent integral equal
  // int_0^1 (1-s)/sqrt((1-s)^2+s^2) ds.
  const Vec2 ut = sdflow::unit_tangent_time_integral({1, 0}, {0, 1}, 1.0);
  REQUIRE(std::abs(ut.x - 0.62322524014023051339) < 1e-14);
  REQUIRE(std::abs(ut.y - 0.62322524014023051339) < 1e-14);
  const double rho_x = sdflow::inv_norm_time_integral({1, 0}, {0, 1}, 1.0);
  REQUIRE(std::abs(rho_x - 1.2464504802804610268) < 1e-14);
}

TEST_CASE("poly_time_averages equals the exact linear-in-time integral",
          "[timequad]") {
  const auto avg = sdflow::poly_time_averages({1, 0}, {0, 1}, 0.5);
  REQUIRE(std::abs(avg.tau_bar.x - 0.25) < 1e-16);
  REQUIRE(std::abs(avg.tau_bar.y - 0.25) < 1e-16);
  REQUIRE(std::abs(avg.nu_bar.x + 0.25) < 1e-16);
  REQUIRE(std::abs(avg.nu_bar.y - 0.25) < 1e-16);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 a = oracles::random_vec(rng, -2.0, 2.0);
    const Vec2 b = oracles::random_vec(rng, -2.0, 2.0);
    const double tau = 0.37;
    const auto got = sdflow::poly_time_averages(a, b, tau);
    auto comp = [&](auto pick) {
      return tau * oracles::integrate(
                       [&](double s) { return pick(a + s * (b - a)); }, 0.0,
                       1.0, 1e-13);
    };
    REQUIRE(std::abs(got.tau_bar.x - comp([](Vec2 v) { return v.x; })) < 1e-13);
    REQUIRE(std::abs(got.tau_bar.y - comp([](Vec2 v) { return v.y; })) < 1e-13);
    REQUIRE(std::abs(got.nu_bar.x - comp([](Vec2 v) { return -v.y; })) < 1e-13);
    REQUIRE(std::abs(got.nu_bar.y - comp([](Vec2 v) { return v.x; })) < 1e-13);
  }
}

TEST_CASE("closed forms match adaptive Simpson over 1000 random paths",
          "[timequad]") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::uniform_real_distribution<double> logtau(-4.0, 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  int accepted = 0;
  int attempts = 0;
  while (accepted < 1000 && attempts < 40000) {
    ++attempts;
    Vec2 e_old{coord(rng), coord(rng)};
    Vec2 e_new{coord(rng), coord(rng)};
    const double regime = unit(rng);
    if (regime < 0.25) {
      // Small motion: exercises the Gauss fallback region.
      e_new = e_old + 0.02 * Vec2{coord(rng), coord(rng)};
    } else if (regime < 0.35) {
      // Nearly static.
      e_new = e_old + 1e-8 * Vec2{coord(rng), coord(rng)};
    }
    const Vec2 b = e_new - e_old;
    const double scale =
        std::max({e_old.norm(), b.norm(), e_new.norm()});
    if (!(sampled_min_norm(e_old, b) > 0.05 * scale)) continue;
    if (scale < 0.3) continue;
    ++accepted;

    const double tau = std::pow(10.0, logtau(rng));
    const auto lib = sdflow::path_integrals(e_old, e_new, tau);
    const auto ref = oracle_path(e_old, b, tau);

    require_block({{lib.inv1[0], ref.inv1[0]}, {lib.inv1[1], ref.inv1[1]}},
                  1e-11);
    for (int w = 0; w < 2; ++w) {
      require_block({{lib.vec3[w].x, ref.vec3[w].x},
                     {lib.vec3[w].y, ref.vec3[w].y}},
                    1e-11);
      require_block({{lib.mat3[w].a00, ref.mat3[w].a00},
                     {lib.mat3[w].a01, ref.mat3[w].a01},
                     {lib.mat3[w].a10, ref.mat3[w].a10},
                     {lib.mat3[w].a11, ref.mat3[w].a11}},
                    1e-11);
    }
    require_block({{lib.unit_tangent.x, ref.unit_tangent.x},
                   {lib.unit_tangent.y, ref.unit_tangent.y}},
                  1e-11);
  }
  REQUIRE(accepted == 1000);
}

TEST_CASE("kernels scale correctly in space and time", "[timequad]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 a = oracles::random_vec(rng, -2.0, 2.0);
    const Vec2 b = oracles::random_vec(rng, -2.0, 2.0);
    if (sampled_min_norm(a, b - a) < 0.1) continue;

    const auto base = sdflow::path_integrals(a, b, 1.0);

    // tau enters linearly and powers of two commute exactly.
    const auto twice = sdflow::path_integrals(a, b, 2.0);
    REQUIRE(0.5 * twice.inv1[0] == base.inv1[0]);
    REQUIRE(0.5 * twice.unit_tangent.x == base.unit_tangent.x);
    REQUIRE(0.5 * twice.mat3[1].a01 == base.mat3[1].a01);

    // Spatial homogeneity: |g|^-1 kernels scale as 1/lambda, |g|^-3 g as
    // 1/lambda^2, |g|^-3 gg^T as 1/lambda, g/|g| not at all.
    for (const double lam : {1e-3, 512.0}) {
      const auto scaled = sdflow::path_integrals(lam * a, lam * b, 1.0);
      REQUIRE(std::abs(scaled.inv1[0] * lam - base.inv1[0]) <
              1e-12 * std::abs(base.inv1[0]));
      REQUIRE(std::abs(scaled.vec3[0].x * lam * lam - base.vec3[0].x) <
              1e-12 * std::max(std::abs(base.vec3[0].x), std::abs(base.vec3[0].y)));
      REQUIRE(std::abs(scaled.mat3[0].a00 * lam - base.mat3[0].a00) <
              1e-12 * std::abs(base.mat3[0].a00 + base.mat3[0].a11));
      REQUIRE(std::abs(scaled.unit_tangent.y - base.unit_tangent.y) <
              1e-12 * base.unit_tangent.norm());
    }
  }
}

TEST_CASE("reversing the path leaves unweighted kernels invariant",
          "[timequad]") {
  std::mt19937_64 rng(13);
  int done = 0;
  while (done < 100) {
    const Vec2 a = oracles::random_vec(rng, -2.0, 2.0);
    const Vec2 b = oracles::random_vec(rng, -2.0, 2.0);
    if (sampled_min_norm(a, b - a) < 0.1) continue;
    ++done;
    const auto fwd = sdflow::path_integrals(a, b, 1.0);
    const auto rev = sdflow::path_integrals(b, a, 1.0);
    require_block({{rev.inv1[0], fwd.inv1[0]}}, 1e-12);
    // Linear weight under s -> 1-s: weighted + reverse-weighted = plain.
    require_block({{rev.inv1[1] + fwd.inv1[1], fwd.inv1[0]}}, 1e-12);
    require_block({{rev.vec3[0].x, fwd.vec3[0].x},
                   {rev.vec3[0].y, fwd.vec3[0].y}},
                  1e-12);
    require_block({{rev.mat3[0].a00, fwd.mat3[0].a00},
                   {rev.mat3[0].a01, fwd.mat3[0].a01},
                   {rev.mat3[0].a11, fwd.mat3[0].a11}},
                  1e-12);
    require_block({{rev.unit_tangent.x, fwd.unit_tangent.x},
                   {rev.unit_tangent.y, fwd.unit_tangent.y}},
                  1e-12);
  }
}

TEST_CASE("collapsing paths are rejected", "[timequad]") {
  REQUIRE_THROWS_AS(sdflow::path_integrals({1, 0}, {-1, 0}, 1.0),
                    sdflow::edge_collapse_error);
  REQUIRE_THROWS_AS(sdflow::path_integrals({1, 0}, {-1, 1e-15}, 1.0),
                    sdflow::edge_collapse_error);
  // A near miss that is clearly above the threshold still works.
  REQUIRE_NOTHROW(sdflow::path_integrals({1, 0}, {-1, 1e-6}, 1.0));
}

TEST_CASE("edge_time_data satisfies structural invariants", "[timequad]") {
  std::mt19937_64 rng(29);
  int done = 0;
  while (done < 100) {
    const Vec2 a = oracles::random_vec(rng, -2.0, 2.0);
    const Vec2 b = oracles::random_vec(rng, -2.0, 2.0);
    if (sampled_min_norm(a, b - a) < 0.1) continue;
    ++done;
    for (const auto w : {TimeWeight::none, TimeWeight::linear}) {
      const auto data = sdflow::edge_time_data(a, b, 0.25, w);
      REQUIRE(data.rho_bar > 0.0);
      REQUIRE(data.a_weight > 0.0);
      REQUIRE(data.a_weight < data.rho_bar);
      REQUIRE(data.A_mat.a01 == data.A_mat.a10);
      REQUIRE(data.A_mat.a00 >= 0.0);
      REQUIRE(data.A_mat.a11 >= 0.0);
      const double det =
          data.A_mat.a00 * data.A_mat.a11 - data.A_mat.a01 * data.A_mat.a10;
      REQUIRE(det >= -1e-15 * data.A_mat.max_abs() * data.A_mat.max_abs());
      // nu_bar is tau_bar rotated by +90 degrees.
      REQUIRE(data.nu_bar.x == -data.tau_bar.y);
      REQUIRE(data.nu_bar.y == data.tau_bar.x);
      REQUIRE(std::abs(data.nu_bar.dot(data.tau_bar)) <
              1e-15 * data.tau_bar.squared_norm());
    }
    const auto plain = sdflow::edge_time_data(a, b, 0.25, TimeWeight::none);
    const auto weighted = sdflow::edge_time_data(a, b, 0.25, TimeWeight::linear);
    REQUIRE(plain.a_weight == weighted.a_weight);
    REQUIRE(plain.gamma.x ==
            sdflow::inv_cube_vector_integral(a, b, 0.25, TimeWeight::none).x);
    REQUIRE(weighted.gamma.x ==
            sdflow::inv_cube_vector_integral(a, b, 0.25, TimeWeight::linear).x);
  }
}

TEST_CASE("node jump integrals telescope to zero", "[timequad]") {
  // Static square: theta_j = tau * (tangent_j - tangent_{j-1}).
  const CurveState sq{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  const auto frames = sdflow::edge_frames(sq);
  const double tau = 0.125;
  const auto jumps = sdflow::node_jump_integrals(sq, sq, tau);
  REQUIRE(jumps.theta.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    const Vec2 expect =
        tau * (frames[j].tangent - frames[(j + 3) % 4].tangent);
    REQUIRE(std::abs(jumps.theta[j].x - expect.x) < 1e-15);
    REQUIRE(std::abs(jumps.theta[j].y - expect.y) < 1e-15);
  }

  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> bump(-0.02, 0.02);
  for (int trial = 0; trial < 200; ++trial) {
    CurveState before = sdflow::make_ellipse(1.5, 0.8, 24);
    CurveState after = before;
    for (auto& node : before.nodes) node += {bump(rng), bump(rng)};
    for (auto& node : after.nodes) node += {bump(rng), bump(rng)};
    const auto theta = sdflow::node_jump_integrals(before, after, 1e-3);
    Vec2 sum{};
    double mag = 0.0;
    for (const Vec2& t : theta.theta) {
      sum += t;
      mag = std::max(mag, t.norm());
    }
    REQUIRE(sum.norm() <= 1e-12 * std::max(mag, 1e-30));
  }
}

TEST_CASE("node jump integrals diagnose collapsing elements", "[timequad]") {
  CurveState before = sdflow::make_ellipse(1.0, 1.0, 8);
  CurveState after = before;
  // Swap two adjacent nodes so element 2 reverses through zero.
  std::swap(after.nodes[2], after.nodes[3]);
  try {
    sdflow::node_jump_integrals(before, after, 1.0);
    FAIL("expected a collapse");
  } catch (const sdflow::edge_collapse_error& err) {
    REQUIRE(err.element_index >= 0);
  }

  CurveState other = sdflow::make_ellipse(1.0, 1.0, 10);
  REQUIRE_THROWS_AS(sdflow::node_jump_integrals(before, other, 1.0),
                    sdflow::invalid_curve_error);
}
