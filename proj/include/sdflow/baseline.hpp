#pragma once

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "sdflow/errors.hpp"
#include "sdflow/evolve.hpp"
#include "sdflow/geometry.hpp"
#include "sdflow/newton.hpp"

namespace sdflow {

// Semi-implicit comparator: one linear solve per step with all geometric
// coefficients frozen at the previous curve. Unknowns are the new positions
// and a scalar curvature field (3M dofs). Kept deliberately simple; it is
// only here to contrast area drift against the conservative scheme.

struct BaselineConfig {
    double tau = 1e-4;
    long steps = 1;
    long snapshot_every = 0;
    std::vector<long> snapshot_steps;
};

inline CurveState baseline_step(const CurveState& prev, double tau) {
    detail::validate_curve(prev);
    if (!(tau > 0.0)) throw invalid_parameter_error("tau must be positive");
    const std::size_t m = prev.size();
    const auto frames = edge_frames(prev);

    // Dofs: [x_0, y_0, ..., x_{M-1}, y_{M-1}, kappa_0..kappa_{M-1}].
    // Rows: normal-velocity equation per node, then the two components of
    // the curvature identity per node.
    const auto xcol = [](std::size_t v, int a) {
        return static_cast<int>(2 * v) + a;
    };
    const auto kcol = [m](std::size_t v) { return static_cast<int>(2 * m + v); };
    const auto row_v = [](std::size_t i) { return static_cast<int>(i); };
    const auto row_k = [m](std::size_t i, int a) {
        return static_cast<int>(m + 2 * i) + a;
    };

    using T = Eigen::Triplet<double>;
    std::vector<T> trips;
    trips.reserve(32 * m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3 * m);

    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t l = e;
        const std::size_t r = (e + 1) % m;
        const double w = prev.width(e);
        const Vec2 nu = frames[e].edge_vector.perp();
        const double len = frames[e].length;
        const double md = w * detail::kMassDiag / tau;
        const double mo = w * detail::kMassOff / tau;

        for (int a = 0; a < 2; ++a) {
            const double nu_a = a == 0 ? nu.x : nu.y;
            trips.emplace_back(row_v(l), xcol(l, a), md * nu_a);
            trips.emplace_back(row_v(l), xcol(r, a), mo * nu_a);
            trips.emplace_back(row_v(r), xcol(l, a), mo * nu_a);
            trips.emplace_back(row_v(r), xcol(r, a), md * nu_a);
        }
        const double old_l[2] = {prev.nodes[l].x, prev.nodes[l].y};
        const double old_r[2] = {prev.nodes[r].x, prev.nodes[r].y};
        for (int a = 0; a < 2; ++a) {
            const double nu_a = a == 0 ? nu.x : nu.y;
            rhs[row_v(l)] += nu_a * (md * old_l[a] + mo * old_r[a]);
            rhs[row_v(r)] += nu_a * (mo * old_l[a] + md * old_r[a]);
        }

        // -int d_s kappa d_s phi dGamma, per-element constant gradients.
        const double st = 1.0 / len;
        trips.emplace_back(row_v(l), kcol(r), st);
        trips.emplace_back(row_v(l), kcol(l), -st);
        trips.emplace_back(row_v(r), kcol(r), -st);
        trips.emplace_back(row_v(r), kcol(l), st);

        // Curvature identity rows: int kappa nu.psi dGamma
        // + int d_s X^n . d_s psi dGamma = 0.
        for (int a = 0; a < 2; ++a) {
            const double nu_a = a == 0 ? nu.x : nu.y;
            trips.emplace_back(row_k(l, a), kcol(l), w * detail::kMassDiag * nu_a);
            trips.emplace_back(row_k(l, a), kcol(r), w * detail::kMassOff * nu_a);
            trips.emplace_back(row_k(r, a), kcol(l), w * detail::kMassOff * nu_a);
            trips.emplace_back(row_k(r, a), kcol(r), w * detail::kMassDiag * nu_a);

            trips.emplace_back(row_k(l, a), xcol(r, a), -st);
            trips.emplace_back(row_k(l, a), xcol(l, a), st);
            trips.emplace_back(row_k(r, a), xcol(r, a), st);
            trips.emplace_back(row_k(r, a), xcol(l, a), -st);
        }
    }

    Eigen::SparseMatrix<double> mat(static_cast<int>(3 * m),
                                    static_cast<int>(3 * m));
    mat.setFromTriplets(trips.begin(), trips.end());
    SparseSystem sys{std::move(mat), std::move(rhs)};
    const Eigen::VectorXd z = linear_solve(sys);

    std::vector<Vec2> nodes(m);
    for (std::size_t v = 0; v < m; ++v)
        nodes[v] = {z[xcol(v, 0)], z[xcol(v, 1)]};
    return CurveState(std::move(nodes), prev.partition);
}

inline RunResult run_baseline(const CurveState& initial,
                              const BaselineConfig& cfg) {
    detail::validate_curve(initial);
    if (!(cfg.tau > 0.0) || cfg.steps < 1)
        throw invalid_parameter_error("baseline config needs tau > 0, steps >= 1");

    RunResult result;
    CurveState curve = initial;
    const double a0 = polygon_area(curve);

    auto wants_snapshot = [&cfg](long n) {
        if (cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0) return true;
        return std::find(cfg.snapshot_steps.begin(), cfg.snapshot_steps.end(),
                         n) != cfg.snapshot_steps.end();
    };
    auto record = [&](long n, double prev_perimeter) {
        DiagnosticsRecord r;
        r.step = n;
        r.time = static_cast<double>(n) * cfg.tau;
        r.perimeter = perimeter(curve);
        r.area = polygon_area(curve);
        r.psi = mesh_ratio(curve);
        r.newton_iters = 0;
        r.area_drift_rel = std::abs(r.area - a0) / std::abs(a0);
        r.perimeter_delta = n == 0 ? 0.0 : r.perimeter - prev_perimeter;
        result.series.records.push_back(r);
    };

    record(0, 0.0);
    if (wants_snapshot(0)) result.snapshots.push_back({0, 0.0, curve});
    for (long n = 1; n <= cfg.steps; ++n) {
        try {
            curve = baseline_step(curve, cfg.tau);
        } catch (const error& err) {
            result.aborted = true;
            result.abort_reason = "step " + std::to_string(n) + ": " + err.what();
            break;
        }
        record(n, result.series.records.back().perimeter);
        if (wants_snapshot(n))
            result.snapshots.push_back(
                {n, static_cast<double>(n) * cfg.tau, curve});
    }
    result.final = std::move(curve);
    return result;
}

}  // namespace sdflow
