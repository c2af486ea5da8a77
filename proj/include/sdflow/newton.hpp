#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "sdflow/assembly.hpp"
#include "sdflow/errors.hpp"
#include "sdflow/geometry.hpp"

namespace sdflow {

struct NewtonConfig {
    double tol_x = 1e-10;
    double tol_p = 1e-10;
    double tol_q = 1e-10;
    int max_iter = 50;
    JacobianVariant jacobian_variant = JacobianVariant::as_written;
};

struct IterationRecord {
    double dx_inf = 0.0;
    double dp_inf = 0.0;
    double dq_inf = 0.0;
    // Max-norm of the nonlinear residual at the iterate the increment was
    // computed from.
    double residual_inf = 0.0;
};

struct NewtonReport {
    int iterations = 0;
    std::vector<IterationRecord> increments;
    double final_residual_norm = 0.0;
    bool converged = false;
};

class newton_failure_error : public error {
public:
    newton_failure_error(const std::string& msg, NewtonReport rep)
        : error(msg), report(std::move(rep)) {}
    NewtonReport report;
};

namespace detail {

inline double rel_linear_residual(const Eigen::SparseMatrix<double>& a,
                                  const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& b) {
    const double num = (a * x - b).cwiseAbs().maxCoeff();
    const double den =
        std::max({b.cwiseAbs().maxCoeff(),
                  (a.cwiseAbs() * x.cwiseAbs()).maxCoeff(), 1e-300});
    return num / den;
}

}  // namespace detail

inline Eigen::VectorXd linear_solve(const SparseSystem& system) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    Eigen::SparseMatrix<double> a = system.matrix;
    a.makeCompressed();
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        throw singular_system_error("sparse LU factorization failed: " +
                                    lu.lastErrorMessage());
    const Eigen::VectorXd x = lu.solve(system.rhs);
    const double rel = detail::rel_linear_residual(a, x, system.rhs);
    if (!(rel <= 1e-12))
        throw singular_system_error(
            "linear solve residual too large (relative " + std::to_string(rel) +
                ")",
            -1, rel / 2.2e-16);
    return x;
}

// Newton iteration for one time step, warm-started from the previous step's
// solution. Convergence requires all three max-norm increment tests to pass
// in the same iteration.
inline std::pair<StepUnknowns, NewtonReport> solve_time_step(
    const CurveState& prev, const StepUnknowns& warm, double tau,
    const NewtonConfig& cfg) {
    if (!(cfg.tol_x > 0.0) || !(cfg.tol_p > 0.0) || !(cfg.tol_q > 0.0) ||
        cfg.max_iter < 1)
        throw invalid_parameter_error("invalid Newton configuration");

    const std::size_t m = prev.size();
    const DofMap dof(m);
    StepUnknowns it = warm;
    NewtonReport report;

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;

    for (int l = 1; l <= cfg.max_iter; ++l) {
        SparseSystem sys =
            assemble_jacobian(prev, it, tau, cfg.jacobian_variant);
        sys.matrix.makeCompressed();
        if (!analyzed) {
            lu.analyzePattern(sys.matrix);
            analyzed = true;
        }
        lu.factorize(sys.matrix);
        if (lu.info() != Eigen::Success)
            throw singular_system_error("Newton system factorization failed: " +
                                        lu.lastErrorMessage());
        const Eigen::VectorXd delta = lu.solve(sys.rhs);
        const double rel = detail::rel_linear_residual(sys.matrix, delta, sys.rhs);
        if (!(rel <= 1e-12))
            throw singular_system_error(
                "Newton linear solve residual too large (relative " +
                    std::to_string(rel) + ")",
                -1, rel / 2.2e-16);

        IterationRecord rec;
        rec.residual_inf = sys.rhs.cwiseAbs().maxCoeff();
        for (std::size_t v = 0; v < m; ++v) {
            const Vec2 dxv{delta[static_cast<int>(dof.x(v))],
                           delta[static_cast<int>(dof.y(v))]};
            rec.dx_inf = std::max({rec.dx_inf, std::abs(dxv.x), std::abs(dxv.y)});
            rec.dp_inf =
                std::max(rec.dp_inf, std::abs(delta[static_cast<int>(dof.p(v))]));
            rec.dq_inf =
                std::max(rec.dq_inf, std::abs(delta[static_cast<int>(dof.q(v))]));
            it.positions[v] += dxv;
            it.p[v] += delta[static_cast<int>(dof.p(v))];
            it.q[v] += delta[static_cast<int>(dof.q(v))];
        }
        report.increments.push_back(rec);
        report.iterations = l;
        if (rec.dx_inf <= cfg.tol_x && rec.dp_inf <= cfg.tol_p &&
            rec.dq_inf <= cfg.tol_q) {
            report.converged = true;
            break;
        }
    }
    report.final_residual_norm =
        assemble_residual(prev, it, tau).cwiseAbs().maxCoeff();
    if (!report.converged) {
        char inc[32];
        std::snprintf(inc, sizeof(inc), "%.3e",
                      report.increments.back().dx_inf);
        throw newton_failure_error(
            "Newton did not converge in " + std::to_string(cfg.max_iter) +
                " iterations (last increment " + inc + ")",
            report);
    }
    return {std::move(it), report};
}

// Initial (p, q) for the very first step: solve the curvature equation with
// both time levels frozen at `curve`, so that kappa = p nu + q tau holds in
// the discrete weak sense at t = 0.
inline std::pair<std::vector<double>, std::vector<double>> bootstrap_curvature(
    const CurveState& curve) {
    detail::validate_curve(curve);
    const std::size_t m = curve.size();
    const auto frames = edge_frames(curve);

    using T = Eigen::Triplet<double>;
    std::vector<T> trips;
    trips.reserve(16 * m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * m);

    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t l = e;
        const std::size_t r = (e + 1) % m;
        const double w = curve.width(e);
        const Vec2 nu = frames[e].edge_vector.perp();
        const Vec2 ta = frames[e].edge_vector;
        for (int alpha = 0; alpha < 2; ++alpha) {
            const double nu_a = alpha == 0 ? nu.x : nu.y;
            const double ta_a = alpha == 0 ? ta.x : ta.y;
            const int row_l = static_cast<int>(2 * l) + alpha;
            const int row_r = static_cast<int>(2 * r) + alpha;
            trips.emplace_back(row_l, static_cast<int>(l), w * detail::kMassDiag * nu_a);
            trips.emplace_back(row_l, static_cast<int>(r), w * detail::kMassOff * nu_a);
            trips.emplace_back(row_r, static_cast<int>(l), w * detail::kMassOff * nu_a);
            trips.emplace_back(row_r, static_cast<int>(r), w * detail::kMassDiag * nu_a);
            trips.emplace_back(row_l, static_cast<int>(m + l), w * detail::kMassDiag * ta_a);
            trips.emplace_back(row_l, static_cast<int>(m + r), w * detail::kMassOff * ta_a);
            trips.emplace_back(row_r, static_cast<int>(m + l), w * detail::kMassOff * ta_a);
            trips.emplace_back(row_r, static_cast<int>(m + r), w * detail::kMassDiag * ta_a);
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        const Vec2 jump =
            frames[j].tangent - frames[(j + m - 1) % m].tangent;
        rhs[static_cast<int>(2 * j)] = jump.x;
        rhs[static_cast<int>(2 * j + 1)] = jump.y;
    }

    Eigen::SparseMatrix<double> mat(static_cast<int>(2 * m),
                                    static_cast<int>(2 * m));
    mat.setFromTriplets(trips.begin(), trips.end());
    SparseSystem sys{std::move(mat), std::move(rhs)};
    const Eigen::VectorXd z = linear_solve(sys);

    std::vector<double> p(m), q(m);
    for (std::size_t v = 0; v < m; ++v) {
        p[v] = z[static_cast<int>(v)];
        q[v] = z[static_cast<int>(m + v)];
    }
    return {std::move(p), std::move(q)};
}

}  // namespace sdflow
