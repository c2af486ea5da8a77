#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "sdflow/errors.hpp"
#include "sdflow/geometry.hpp"
#include "sdflow/quadrature.hpp"
#include "sdflow/timequad.hpp"

namespace sdflow {

// Nonlinear residual and Newton system for one time step. Unknowns are the
// new positions X (2M scalars), the normal curvature component p (M) and
// the tangential component q (M).

struct StepUnknowns {
    std::vector<Vec2> positions;
    std::vector<double> p;
    std::vector<double> q;

    static StepUnknowns from_curve(const CurveState& c) {
        StepUnknowns u;
        u.positions = c.nodes;
        u.p.assign(c.size(), 0.0);
        u.q.assign(c.size(), 0.0);
        return u;
    }
};

enum class JacobianVariant { as_written, time_weighted };

// Scalar dof layout: [x_0, y_0, ..., x_{M-1}, y_{M-1}, p_0..p_{M-1},
// q_0..q_{M-1}]. Rows: the phi-tested normal-velocity equation first,
// then the tangential one, then the two components of the vector-tested
// curvature equation interleaved per node.
struct DofMap {
    std::size_t m = 0;

    explicit DofMap(std::size_t m_) : m(m_) {}
    std::size_t size() const { return 4 * m; }

    std::size_t x(std::size_t v) const { return 2 * v; }
    std::size_t y(std::size_t v) const { return 2 * v + 1; }
    std::size_t coord(std::size_t v, int alpha) const { return 2 * v + alpha; }
    std::size_t p(std::size_t v) const { return 2 * m + v; }
    std::size_t q(std::size_t v) const { return 3 * m + v; }

    std::size_t row_a(std::size_t i) const { return i; }
    std::size_t row_b(std::size_t i) const { return m + i; }
    std::size_t row_c(std::size_t i, int alpha) const {
        return 2 * m + 2 * i + alpha;
    }
};

struct SparseSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
};

// Exact two-point Gauss on the unit interval (degree <= 3 integrands).
template <class F>
double element_integral_deg2(F&& f) {
    return integrate_unit<Gauss2>(std::forward<F>(f));
}

namespace detail {

// Unit-interval pairings of the two local hat functions:
// int hat_i hat_j ds with hats (1-s) and s.
inline constexpr double kMassDiag = 1.0 / 3.0;
inline constexpr double kMassOff = 1.0 / 6.0;

struct ElementData {
    PathIntegrals pi;
    PolyAverages avg;
};

struct AssemblyData {
    std::vector<ElementData> elems;
    std::vector<Vec2> theta;
};

inline void check_step_inputs(const CurveState& prev, const StepUnknowns& guess,
                              double tau) {
    validate_curve(prev);
    const std::size_t m = prev.size();
    if (guess.positions.size() != m || guess.p.size() != m || guess.q.size() != m)
        throw invalid_parameter_error("unknowns do not match curve size");
    if (!(tau > 0.0)) throw invalid_parameter_error("tau must be positive");
    for (std::size_t v = 0; v < m; ++v) {
        if (!guess.positions[v].finite() || !std::isfinite(guess.p[v]) ||
            !std::isfinite(guess.q[v]))
            throw invalid_parameter_error("non-finite unknown at node " +
                                          std::to_string(v));
    }
}

inline AssemblyData gather_element_data(const CurveState& prev,
                                        const StepUnknowns& guess, double tau) {
    const std::size_t m = prev.size();
    AssemblyData data;
    data.elems.resize(m);
    std::vector<Vec2> u(m);
    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t r = (e + 1) % m;
        const double w = prev.width(e);
        const Vec2 g_old = (prev.nodes[r] - prev.nodes[e]) / w;
        const Vec2 g_new = (guess.positions[r] - guess.positions[e]) / w;
        try {
            data.elems[e].pi = path_integrals(g_old, g_new, tau);
        } catch (const edge_collapse_error& err) {
            throw edge_collapse_error(
                "element " + std::to_string(e) + ": " + err.what(),
                static_cast<long>(e));
        }
        data.elems[e].avg = poly_time_averages(g_old, g_new, tau);
        u[e] = data.elems[e].pi.unit_tangent;
    }
    data.theta.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        data.theta[j] = u[j] - u[(j + m - 1) % m];
    return data;
}

inline Eigen::VectorXd residual_from_data(const CurveState& prev,
                                          const StepUnknowns& guess, double tau,
                                          const AssemblyData& data) {
    const std::size_t m = prev.size();
    const DofMap dof(m);
    Eigen::VectorXd res = Eigen::VectorXd::Zero(dof.size());

    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t l = e;
        const std::size_t r = (e + 1) % m;
        const double w = prev.width(e);
        const auto& el = data.elems[e];
        const Vec2 nu = el.avg.nu_bar;
        const Vec2 ta = el.avg.tau_bar;
        const double rho = el.pi.inv1[0];

        const Vec2 v_l = (guess.positions[l] - prev.nodes[l]) / tau;
        const Vec2 v_r = (guess.positions[r] - prev.nodes[r]) / tau;
        const Vec2 mv_l = w * (kMassDiag * v_l + kMassOff * v_r);
        const Vec2 mv_r = w * (kMassOff * v_l + kMassDiag * v_r);

        res[dof.row_a(l)] += nu.dot(mv_l);
        res[dof.row_a(r)] += nu.dot(mv_r);
        res[dof.row_b(l)] += ta.dot(mv_l);
        res[dof.row_b(r)] += ta.dot(mv_r);

        const double dp = (guess.p[r] - guess.p[l]) / w;
        res[dof.row_a(l)] += rho * dp;
        res[dof.row_a(r)] -= rho * dp;

        const double mp_l = w * (kMassDiag * guess.p[l] + kMassOff * guess.p[r]);
        const double mp_r = w * (kMassOff * guess.p[l] + kMassDiag * guess.p[r]);
        const double mq_l = w * (kMassDiag * guess.q[l] + kMassOff * guess.q[r]);
        const double mq_r = w * (kMassOff * guess.q[l] + kMassDiag * guess.q[r]);
        for (int alpha = 0; alpha < 2; ++alpha) {
            const double nu_a = alpha == 0 ? nu.x : nu.y;
            const double ta_a = alpha == 0 ? ta.x : ta.y;
            res[dof.row_c(l, alpha)] += nu_a * mp_l + ta_a * mq_l;
            res[dof.row_c(r, alpha)] += nu_a * mp_r + ta_a * mq_r;
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        res[dof.row_c(j, 0)] -= data.theta[j].x;
        res[dof.row_c(j, 1)] -= data.theta[j].y;
    }
    return res;
}

}  // namespace detail

inline Eigen::VectorXd assemble_residual(const CurveState& prev,
                                         const StepUnknowns& guess, double tau) {
    detail::check_step_inputs(prev, guess, tau);
    const auto data = detail::gather_element_data(prev, guess, tau);
    return detail::residual_from_data(prev, guess, tau, data);
}

inline SparseSystem assemble_jacobian(const CurveState& prev,
                                      const StepUnknowns& guess, double tau,
                                      JacobianVariant variant) {
    detail::check_step_inputs(prev, guess, tau);
    const std::size_t m = prev.size();
    const DofMap dof(m);
    const auto data = detail::gather_element_data(prev, guess, tau);
    const int wsel = variant == JacobianVariant::time_weighted;

    using T = Eigen::Triplet<double>;
    std::vector<T> trips;
    trips.reserve(64 * m);
    auto put = [&trips](std::size_t row, std::size_t col, double v) {
        trips.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
    };
    // Adds c . (X_delta at node vr - X_delta at node vl) to the given row.
    auto put_pair = [&](std::size_t row, std::size_t vl, std::size_t vr, Vec2 c) {
        put(row, dof.x(vr), c.x);
        put(row, dof.y(vr), c.y);
        put(row, dof.x(vl), -c.x);
        put(row, dof.y(vl), -c.y);
    };

    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t l = e;
        const std::size_t r = (e + 1) % m;
        const double w = prev.width(e);
        const auto& el = data.elems[e];
        const Vec2 nu = el.avg.nu_bar;
        const Vec2 ta = el.avg.tau_bar;
        const double rho = el.pi.inv1[0];
        const Vec2 gamma = el.pi.vec3[wsel];

        const Vec2 v_l = (guess.positions[l] - prev.nodes[l]) / tau;
        const Vec2 v_r = (guess.positions[r] - prev.nodes[r]) / tau;
        const Vec2 mv_l = w * (detail::kMassDiag * v_l + detail::kMassOff * v_r);
        const Vec2 mv_r = w * (detail::kMassOff * v_l + detail::kMassDiag * v_r);

        const std::size_t ra_l = dof.row_a(l), ra_r = dof.row_a(r);
        const std::size_t rb_l = dof.row_b(l), rb_r = dof.row_b(r);

        // (X_delta/tau) . (phi nu_bar) and . (phi tau_bar): hat-pair mass.
        const double md = w * detail::kMassDiag / tau;
        const double mo = w * detail::kMassOff / tau;
        for (int alpha = 0; alpha < 2; ++alpha) {
            const double nu_a = alpha == 0 ? nu.x : nu.y;
            const double ta_a = alpha == 0 ? ta.x : ta.y;
            put(ra_l, dof.coord(l, alpha), md * nu_a);
            put(ra_l, dof.coord(r, alpha), mo * nu_a);
            put(ra_r, dof.coord(l, alpha), mo * nu_a);
            put(ra_r, dof.coord(r, alpha), md * nu_a);
            put(rb_l, dof.coord(l, alpha), md * ta_a);
            put(rb_l, dof.coord(r, alpha), mo * ta_a);
            put(rb_r, dof.coord(l, alpha), mo * ta_a);
            put(rb_r, dof.coord(r, alpha), md * ta_a);
        }

        // v_bar . ((tau/2) phi (d_xi X_delta)^perp) rows: c.u^perp = (-c^perp).u
        const Vec2 c_l = (0.5 * tau / w) * mv_l;
        const Vec2 c_r = (0.5 * tau / w) * mv_r;
        put_pair(ra_l, l, r, Vec2{c_l.y, -c_l.x});
        put_pair(ra_r, l, r, Vec2{c_r.y, -c_r.x});
        // v_bar . ((tau/2) phi d_xi X_delta) rows (tangential block).
        put_pair(rb_l, l, r, c_l);
        put_pair(rb_r, l, r, c_r);

        // -d_xi p_delta d_xi phi rho_bar.
        const double st = rho / w;
        put(ra_l, dof.p(r), st);
        put(ra_l, dof.p(l), -st);
        put(ra_r, dof.p(r), -st);
        put(ra_r, dof.p(l), st);

        // +d_xi p_{l-1} d_xi phi (gamma . d_xi X_delta).
        const double dp = (guess.p[r] - guess.p[l]);
        const Vec2 g_l = (-dp / (w * w)) * gamma;
        const Vec2 g_r = (dp / (w * w)) * gamma;
        put_pair(ra_l, l, r, g_l);
        put_pair(ra_r, l, r, g_r);

        // Curvature rows: p_delta nu_bar . psi and q_delta tau_bar . psi mass,
        // plus the (tau/2) p (d_xi X_delta)^perp . psi and q counterparts.
        const double mp_l = w * (detail::kMassDiag * guess.p[l] +
                                 detail::kMassOff * guess.p[r]);
        const double mp_r = w * (detail::kMassOff * guess.p[l] +
                                 detail::kMassDiag * guess.p[r]);
        const double mq_l = w * (detail::kMassDiag * guess.q[l] +
                                 detail::kMassOff * guess.q[r]);
        const double mq_r = w * (detail::kMassOff * guess.q[l] +
                                 detail::kMassDiag * guess.q[r]);
        for (int alpha = 0; alpha < 2; ++alpha) {
            const double nu_a = alpha == 0 ? nu.x : nu.y;
            const double ta_a = alpha == 0 ? ta.x : ta.y;
            const std::size_t rc_l = dof.row_c(l, alpha);
            const std::size_t rc_r = dof.row_c(r, alpha);
            put(rc_l, dof.p(l), w * detail::kMassDiag * nu_a);
            put(rc_l, dof.p(r), w * detail::kMassOff * nu_a);
            put(rc_r, dof.p(l), w * detail::kMassOff * nu_a);
            put(rc_r, dof.p(r), w * detail::kMassDiag * nu_a);
            put(rc_l, dof.q(l), w * detail::kMassDiag * ta_a);
            put(rc_l, dof.q(r), w * detail::kMassOff * ta_a);
            put(rc_r, dof.q(l), w * detail::kMassOff * ta_a);
            put(rc_r, dof.q(r), w * detail::kMassDiag * ta_a);

            const double kp_l = 0.5 * tau * mp_l / w;
            const double kp_r = 0.5 * tau * mp_r / w;
            const double kq_l = 0.5 * tau * mq_l / w;
            const double kq_r = 0.5 * tau * mq_r / w;
            // e_alpha . u^perp gives (0,-1;1,0) column picks.
            const Vec2 perp_pick = alpha == 0 ? Vec2{0.0, -1.0} : Vec2{1.0, 0.0};
            const Vec2 flat_pick = alpha == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
            put_pair(rc_l, l, r, kp_l * perp_pick + kq_l * flat_pick);
            put_pair(rc_r, l, r, kp_r * perp_pick + kq_r * flat_pick);
        }
    }

    // Node-jump derivative blocks: -psi(xi_j).[(a I - A) d_xi X_delta]_j.
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t er = j;
        const std::size_t el = (j + m - 1) % m;
        const std::size_t jr = (j + 1) % m;
        const std::size_t jl = el;
        const auto& right = data.elems[er];
        const auto& left = data.elems[el];
        const double aw_r = right.pi.inv1[1];
        const double aw_l = left.pi.inv1[1];
        const Mat2 Br = (Mat2::identity() * aw_r - right.pi.mat3[wsel]) *
                        (1.0 / prev.width(er));
        const Mat2 Bl = (Mat2::identity() * aw_l - left.pi.mat3[wsel]) *
                        (1.0 / prev.width(el));
        const Mat2 Bc = Br + Bl;
        for (int alpha = 0; alpha < 2; ++alpha) {
            const std::size_t row = dof.row_c(j, alpha);
            const double br0 = alpha == 0 ? Br.a00 : Br.a10;
            const double br1 = alpha == 0 ? Br.a01 : Br.a11;
            const double bl0 = alpha == 0 ? Bl.a00 : Bl.a10;
            const double bl1 = alpha == 0 ? Bl.a01 : Bl.a11;
            const double bc0 = alpha == 0 ? Bc.a00 : Bc.a10;
            const double bc1 = alpha == 0 ? Bc.a01 : Bc.a11;
            put(row, dof.x(jr), -br0);
            put(row, dof.y(jr), -br1);
            put(row, dof.x(j), bc0);
            put(row, dof.y(j), bc1);
            put(row, dof.x(jl), -bl0);
            put(row, dof.y(jl), -bl1);
        }
    }

    SparseSystem sys;
    sys.matrix.resize(static_cast<int>(dof.size()), static_cast<int>(dof.size()));
    sys.matrix.setFromTriplets(trips.begin(), trips.end());
    sys.rhs = -detail::residual_from_data(prev, guess, tau, data);
    return sys;
}

}  // namespace sdflow
