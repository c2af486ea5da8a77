#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sdflow/errors.hpp"
#include "sdflow/geometry.hpp"
#include "sdflow/quadrature.hpp"
#include "sdflow/vec2.hpp"

namespace sdflow {

// Time integrals over one step of functions of the linear-in-time edge
// vector g(s) = e_old + s*(e_new - e_old), s in [0,1], dt = tau*ds.
//
// Closed forms: decompose along b = e_new - e_old. With bhat = b/|b|,
// nhat = bhat^perp, u(s) = e_old.bhat + s|b| and d = e_old.nhat we have
// |g| = sqrt(u^2 + d^2), and every kernel reduces to moments of 1/r and
// 1/r^3 in u with asinh/algebraic antiderivatives. Each moment below is
// arranged to avoid cancellation (conjugate forms, log1p, sign splits).
// When |b| is small against min_s |g| the u-substitution loses digits, so
// a 32-point Gauss rule takes over; there the integrand's complex
// singularities sit at distance >= min|g|/|b| >= 4 from [0,1] and the rule
// is exact to double precision.

enum class TimeWeight { none, linear };

struct PolyAverages {
    Vec2 nu_bar;
    Vec2 tau_bar;
};

// nu_bar = int (d_xi X_h)^perp dt, tau_bar = int d_xi X_h dt; the integrand
// is linear in t, so the midpoint value is exact.
inline PolyAverages poly_time_averages(Vec2 e_old, Vec2 e_new, double tau) {
    const Vec2 mid = (e_old + e_new) * 0.5;
    return {tau * mid.perp(), tau * mid};
}

// All kernels over one element and one step, indexed by the time weight
// w(s) = 1 (index 0) or w(s) = s (index 1):
//   inv1[w]  = tau*int w(s) |g|^-1 ds
//   vec3[w]  = tau*int w(s) |g|^-3 g ds
//   mat3[w]  = tau*int w(s) |g|^-3 g g^T ds
//   unit_tangent = tau*int g/|g| ds
struct PathIntegrals {
    double inv1[2] = {0.0, 0.0};
    Vec2 vec3[2];
    Mat2 mat3[2];
    Vec2 unit_tangent;
};

namespace detail {

inline constexpr double kCollapseRel = 1e-12;
inline constexpr double kGaussFallbackRatio = 0.25;

// Minimum of |e_old + s b| over s in [0,1].
inline double min_path_norm(Vec2 a, Vec2 b) {
    const double bn2 = b.squared_norm();
    if (bn2 == 0.0) return a.norm();
    const double s_star = -a.dot(b) / bn2;
    if (s_star > 0.0 && s_star < 1.0) return std::abs(a.cross(b)) / std::sqrt(bn2);
    return std::min(a.norm(), (a + b).norm());
}

struct PathMoments {
    // M_k = int u^k / r du, N_k = int u^k / r^3 du over [u0, u1].
    double m0, m1, n0, n1, n2, n3;
    double u0, bn, d;
};

inline double stable_k0(double u0, double u1, double r0, double r1, double d,
                        double bn) {
    if (u0 + u1 < 0.0) {
        std::swap(u0, u1);
        std::swap(r0, r1);
        u0 = -u0;
        u1 = -u1;
    }
    const double dr = bn * (u0 + u1) / (r0 + r1);
    const double splus0 = (u0 >= 0.0) ? (u0 + r0) : d * d / (r0 - u0);
    return std::log1p((bn + dr) / splus0);
}

inline PathMoments path_moments(Vec2 a, Vec2 b) {
    PathMoments pm{};
    const double bn = b.norm();
    const Vec2 bhat = b / bn;
    const double u0 = a.dot(bhat);
    const double u1 = u0 + bn;
    const double d = bhat.cross(a);  // a.nhat with nhat = bhat^perp
    const double r0 = std::hypot(u0, d);
    const double r1 = std::hypot(u1, d);

    pm.u0 = u0;
    pm.bn = bn;
    pm.d = d;
    pm.m0 = stable_k0(u0, u1, r0, r1, d, bn);
    pm.m1 = bn * (u0 + u1) / (r0 + r1);
    if (u0 >= 0.0 || u1 <= 0.0) {
        pm.n0 = bn * (u0 + u1) / ((u1 * r0 + u0 * r1) * r0 * r1);
    } else {
        pm.n0 = (u1 / r1 - u0 / r0) / (d * d);
    }
    pm.n1 = bn * (u0 + u1) / ((r0 + r1) * r0 * r1);
    pm.n2 = pm.m0 - d * d * pm.n0;
    pm.n3 = bn * (u0 + u1) * (u0 * u0 * u1 * u1 + d * d * (u0 * u0 + u1 * u1)) /
            ((r0 + r1) * (r0 * r1 + d * d) * r0 * r1);
    return pm;
}

inline PathIntegrals path_integrals_static(Vec2 a, double tau) {
    const double r = a.norm();
    const double r3 = r * r * r;
    PathIntegrals out;
    out.inv1[0] = tau / r;
    out.inv1[1] = 0.5 * tau / r;
    out.vec3[0] = (tau / r3) * a;
    out.vec3[1] = (0.5 * tau / r3) * a;
    out.mat3[0] = (tau / r3) * Mat2::outer(a, a);
    out.mat3[1] = (0.5 * tau / r3) * Mat2::outer(a, a);
    out.unit_tangent = (tau / r) * a;
    return out;
}

inline PathIntegrals path_integrals_gauss(Vec2 a, Vec2 b, double tau) {
    PathIntegrals out;
    for (std::size_t i = 0; i < Gauss32::nodes.size(); ++i) {
        const double s = Gauss32::nodes[i];
        const double w = Gauss32::weights[i];
        const Vec2 g = a + s * b;
        const double r = g.norm();
        const double inv = 1.0 / r;
        const double inv3 = inv * inv * inv;
        const Mat2 gg = Mat2::outer(g, g);
        out.inv1[0] += w * inv;
        out.inv1[1] += w * s * inv;
        out.vec3[0] += (w * inv3) * g;
        out.vec3[1] += (w * s * inv3) * g;
        out.mat3[0] += (w * inv3) * gg;
        out.mat3[1] += (w * s * inv3) * gg;
        out.unit_tangent += (w * inv) * g;
    }
    out.inv1[0] *= tau;
    out.inv1[1] *= tau;
    out.vec3[0] *= tau;
    out.vec3[1] *= tau;
    out.mat3[0] = out.mat3[0] * tau;
    out.mat3[1] = out.mat3[1] * tau;
    out.unit_tangent *= tau;
    return out;
}

}  // namespace detail

inline PathIntegrals path_integrals(Vec2 e_old, Vec2 e_new, double tau) {
    const Vec2 a = e_old;
    const Vec2 b = e_new - e_old;
    const double scale = std::max({a.norm(), b.norm(), (a + b).norm()});
    const double rmin = detail::min_path_norm(a, b);
    if (!(rmin > detail::kCollapseRel * scale))
        throw edge_collapse_error("edge vector path collapses (min |g| = " +
                                  std::to_string(rmin) + ")");
    const double bn = b.norm();
    if (bn <= detail::kGaussFallbackRatio * rmin) {
        if (bn == 0.0) return detail::path_integrals_static(a, tau);
        return detail::path_integrals_gauss(a, b, tau);
    }

    const auto pm = detail::path_moments(a, b);
    const Vec2 bhat = b / bn;
    const Vec2 nhat = bhat.perp();
    const double d = pm.d;
    const double u0 = pm.u0;
    const double inv_bn = 1.0 / bn;
    const double inv_bn2 = inv_bn * inv_bn;

    const Mat2 B = Mat2::outer(bhat, bhat);
    const Mat2 C = Mat2::outer(bhat, nhat) + Mat2::outer(nhat, bhat);
    const Mat2 D = Mat2::outer(nhat, nhat);

    PathIntegrals out;
    out.inv1[0] = tau * pm.m0 * inv_bn;
    out.inv1[1] = tau * (pm.m1 - u0 * pm.m0) * inv_bn2;
    out.vec3[0] = tau * inv_bn * (pm.n1 * bhat + d * pm.n0 * nhat);
    out.vec3[1] = tau * inv_bn2 *
                  ((pm.n2 - u0 * pm.n1) * bhat + d * (pm.n1 - u0 * pm.n0) * nhat);
    out.mat3[0] = tau * inv_bn * (pm.n2 * B + (d * pm.n1) * C + (d * d * pm.n0) * D);
    out.mat3[1] = tau * inv_bn2 *
                  ((pm.n3 - u0 * pm.n2) * B + (d * (pm.n2 - u0 * pm.n1)) * C +
                   (d * d * (pm.n1 - u0 * pm.n0)) * D);
    out.unit_tangent = tau * inv_bn * (pm.m1 * bhat + d * pm.m0 * nhat);
    return out;
}

// rho_bar (weight none) or the a-coefficient (weight linear, the extra
// (t - t_{n-1})/tau factor).
inline double inv_norm_time_integral(Vec2 e_old, Vec2 e_new, double tau,
                                     TimeWeight w = TimeWeight::none) {
    return path_integrals(e_old, e_new, tau).inv1[w == TimeWeight::linear];
}

inline double time_weighted_inv_norm(Vec2 e_old, Vec2 e_new, double tau) {
    return inv_norm_time_integral(e_old, e_new, tau, TimeWeight::linear);
}

// gamma-type vector integral tau*int w(s)|g|^-3 g ds.
inline Vec2 inv_cube_vector_integral(Vec2 e_old, Vec2 e_new, double tau,
                                     TimeWeight w = TimeWeight::none) {
    return path_integrals(e_old, e_new, tau).vec3[w == TimeWeight::linear];
}

// A-type matrix integral tau*int w(s)|g|^-3 g g^T ds.
inline Mat2 inv_cube_matrix_integral(Vec2 e_old, Vec2 e_new, double tau,
                                     TimeWeight w = TimeWeight::none) {
    return path_integrals(e_old, e_new, tau).mat3[w == TimeWeight::linear];
}

inline Vec2 unit_tangent_time_integral(Vec2 e_old, Vec2 e_new, double tau) {
    return path_integrals(e_old, e_new, tau).unit_tangent;
}

// Per-element time-averaged data feeding one Newton iteration. gamma and
// A_mat follow the requested weight variant; a_weight always carries the
// linear time weight.
struct EdgeTimeData {
    Vec2 nu_bar;
    Vec2 tau_bar;
    double rho_bar = 0.0;
    Vec2 gamma;
    double a_weight = 0.0;
    Mat2 A_mat;
};

inline EdgeTimeData edge_time_data(Vec2 e_old, Vec2 e_new, double tau,
                                   TimeWeight newton_weight = TimeWeight::none) {
    const auto pi = path_integrals(e_old, e_new, tau);
    const auto avg = poly_time_averages(e_old, e_new, tau);
    const int w = newton_weight == TimeWeight::linear;
    EdgeTimeData out;
    out.nu_bar = avg.nu_bar;
    out.tau_bar = avg.tau_bar;
    out.rho_bar = pi.inv1[0];
    out.gamma = pi.vec3[w];
    out.a_weight = pi.inv1[1];
    out.A_mat = pi.mat3[w];
    return out;
}

struct NodeJumpData {
    std::vector<Vec2> theta;
};

// theta_j = int [tau_h]_j dt: unit-tangent time integral of the element
// right of node j minus the element left of it.
inline NodeJumpData node_jump_integrals(const CurveState& curve_old,
                                        const CurveState& curve_new, double tau) {
    detail::validate_curve(curve_old);
    detail::validate_curve(curve_new);
    const std::size_t m = curve_old.size();
    if (curve_new.size() != m)
        throw invalid_curve_error("curves must share node count");
    if (curve_old.partition != curve_new.partition)
        throw invalid_curve_error("curves must share the reference partition");

    std::vector<Vec2> u(m);
    for (std::size_t e = 0; e < m; ++e) {
        const double w = curve_old.width(e);
        const Vec2 e_old = (curve_old.nodes[(e + 1) % m] - curve_old.nodes[e]) / w;
        const Vec2 e_new = (curve_new.nodes[(e + 1) % m] - curve_new.nodes[e]) / w;
        try {
            u[e] = unit_tangent_time_integral(e_old, e_new, tau);
        } catch (const edge_collapse_error& err) {
            throw edge_collapse_error(
                "element " + std::to_string(e) + ": " + err.what(),
                static_cast<long>(e));
        }
    }
    NodeJumpData out;
    out.theta.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        out.theta[j] = u[j] - u[(j + m - 1) % m];
    return out;
}

}  // namespace sdflow
