#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "sdflow/errors.hpp"
#include "sdflow/geometry.hpp"
#include "sdflow/newton.hpp"

namespace sdflow {

enum class Redistribution { off, arclength };

struct RunConfig {
    double tau = 1e-4;
    long steps = 1;
    NewtonConfig newton;
    long snapshot_every = 0;             // 0 disables periodic snapshots
    std::vector<long> snapshot_steps;    // explicit extra snapshot steps
    Redistribution redistribution = Redistribution::off;
    long redistribute_every = 0;
    int max_retry_depth = 3;             // tau-halving retries per step
};

struct DiagnosticsRecord {
    long step = 0;
    double time = 0.0;
    double perimeter = 0.0;
    double area = 0.0;
    double psi = 0.0;
    int newton_iters = 0;
    double area_drift_rel = 0.0;
    double perimeter_delta = 0.0;
};

struct DiagnosticsSeries {
    std::vector<DiagnosticsRecord> records;
};

struct Snapshot {
    long step = 0;
    double time = 0.0;
    CurveState curve;
};

struct RedistributionEvent {
    long step = 0;
    double area_change = 0.0;
    double perimeter_change = 0.0;
};

struct RunResult {
    CurveState final;
    std::vector<double> p;
    std::vector<double> q;
    DiagnosticsSeries series;
    std::vector<Snapshot> snapshots;
    std::vector<std::string> warnings;
    std::vector<RedistributionEvent> redistribution_events;
    bool aborted = false;
    std::string abort_reason;
};

struct InvariantReport {
    std::vector<long> area_violations;
    std::vector<long> perimeter_violations;
    double max_area_drift = 0.0;
    double max_perimeter_increase = 0.0;
    bool ok() const {
        return area_violations.empty() && perimeter_violations.empty();
    }
};

// Resamples M nodes at equal arclength along the existing polygon, node 0
// anchored at the old node 0. New nodes lie on old segments, so edges that
// span an old vertex cut the corner; the enclosed area (and, at corners,
// the perimeter) changes by a small amount the caller should log.
inline CurveState redistribute_arclength(const CurveState& curve) {
    detail::validate_curve(curve);
    const std::size_t m = curve.size();
    std::vector<double> cum(m + 1, 0.0);
    for (std::size_t e = 0; e < m; ++e)
        cum[e + 1] =
            cum[e] + (curve.nodes[(e + 1) % m] - curve.nodes[e]).norm();
    const double total = cum[m];

    std::vector<Vec2> nodes(m);
    nodes[0] = curve.nodes[0];
    std::size_t seg = 0;
    for (std::size_t i = 1; i < m; ++i) {
        const double target = total * static_cast<double>(i) /
                              static_cast<double>(m);
        while (seg + 1 < m && cum[seg + 1] < target) ++seg;
        const Vec2 a = curve.nodes[seg];
        const Vec2 b = curve.nodes[(seg + 1) % m];
        const double len = cum[seg + 1] - cum[seg];
        const double frac = (target - cum[seg]) / len;
        nodes[i] = a + frac * (b - a);
    }
    return CurveState(std::move(nodes), curve.partition);
}

inline InvariantReport check_invariants(const DiagnosticsSeries& series,
                                        double area_tol, double perim_tol) {
    if (series.records.empty())
        throw invalid_parameter_error("empty diagnostics series");
    InvariantReport rep;
    const double a0 = series.records.front().area;
    const double l0 = series.records.front().perimeter;
    for (std::size_t i = 0; i < series.records.size(); ++i) {
        const auto& r = series.records[i];
        const double drift = std::abs(r.area - a0) / std::abs(a0);
        rep.max_area_drift = std::max(rep.max_area_drift, drift);
        if (drift > area_tol) rep.area_violations.push_back(r.step);
        if (i > 0) {
            const double dl = r.perimeter - series.records[i - 1].perimeter;
            rep.max_perimeter_increase = std::max(rep.max_perimeter_increase, dl);
            if (dl > perim_tol * l0) rep.perimeter_violations.push_back(r.step);
        }
    }
    return rep;
}

namespace detail {

struct StepOutcome {
    CurveState curve;
    std::vector<double> p, q;
    int newton_iterations = 0;
};

inline StepOutcome attempt_step(const CurveState& prev,
                                const std::vector<double>& p,
                                const std::vector<double>& q, double tau,
                                const NewtonConfig& ncfg, int depth,
                                int max_depth) {
    StepUnknowns warm;
    warm.positions = prev.nodes;
    warm.p = p;
    warm.q = q;
    try {
        auto [sol, report] = solve_time_step(prev, warm, tau, ncfg);
        StepOutcome out;
        out.curve = CurveState(std::move(sol.positions), prev.partition);
        out.p = std::move(sol.p);
        out.q = std::move(sol.q);
        out.newton_iterations = report.iterations;
        return out;
    } catch (const error&) {
        if (depth >= max_depth) throw;
        StepOutcome first =
            attempt_step(prev, p, q, 0.5 * tau, ncfg, depth + 1, max_depth);
        StepOutcome second = attempt_step(first.curve, first.p, first.q,
                                          0.5 * tau, ncfg, depth + 1, max_depth);
        second.newton_iterations += first.newton_iterations;
        return second;
    }
}

}  // namespace detail

inline RunResult evolve(const CurveState& initial, const RunConfig& cfg) {
    detail::validate_curve(initial);
    if (!(cfg.tau > 0.0) || cfg.steps < 1)
        throw invalid_parameter_error("run config needs tau > 0 and steps >= 1");
    if (cfg.redistribution == Redistribution::arclength &&
        cfg.redistribute_every < 1)
        throw invalid_parameter_error("redistribution interval must be >= 1");

    RunResult result;
    CurveState curve = initial;
    auto [p, q] = bootstrap_curvature(curve);

    const double a0 = polygon_area(curve);
    const double l0 = perimeter(curve);

    auto wants_snapshot = [&cfg](long n) {
        if (cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0) return true;
        return std::find(cfg.snapshot_steps.begin(), cfg.snapshot_steps.end(),
                         n) != cfg.snapshot_steps.end();
    };
    auto record = [&](long n, int iters, double prev_perimeter) {
        DiagnosticsRecord r;
        r.step = n;
        r.time = static_cast<double>(n) * cfg.tau;
        r.perimeter = perimeter(curve);
        r.area = polygon_area(curve);
        r.psi = mesh_ratio(curve);
        r.newton_iters = iters;
        r.area_drift_rel = std::abs(r.area - a0) / std::abs(a0);
        r.perimeter_delta = n == 0 ? 0.0 : r.perimeter - prev_perimeter;
        result.series.records.push_back(r);
        return r;
    };

    record(0, 0, 0.0);
    if (wants_snapshot(0)) result.snapshots.push_back({0, 0.0, curve});

    for (long n = 1; n <= cfg.steps; ++n) {
        detail::StepOutcome out;
        try {
            out = detail::attempt_step(curve, p, q, cfg.tau, cfg.newton, 0,
                                       cfg.max_retry_depth);
        } catch (const error& err) {
            result.aborted = true;
            result.abort_reason =
                "step " + std::to_string(n) + ": " + err.what();
            break;
        }
        curve = std::move(out.curve);
        p = std::move(out.p);
        q = std::move(out.q);

        const double prev_l = result.series.records.back().perimeter;
        const auto rec = record(n, out.newton_iterations, prev_l);

        if (rec.area <= 0.0)
            result.warnings.push_back("step " + std::to_string(n) +
                                      ": non-positive signed area (possible "
                                      "self-intersection)");
        if (rec.area_drift_rel > 1e-9)
            result.warnings.push_back("step " + std::to_string(n) +
                                      ": area drift " +
                                      std::to_string(rec.area_drift_rel));
        if (rec.perimeter_delta > 1e-12 * l0)
            result.warnings.push_back("step " + std::to_string(n) +
                                      ": perimeter increased by " +
                                      std::to_string(rec.perimeter_delta));

        if (wants_snapshot(n))
            result.snapshots.push_back({n, static_cast<double>(n) * cfg.tau, curve});

        if (cfg.redistribution == Redistribution::arclength && n < cfg.steps &&
            n % cfg.redistribute_every == 0) {
            const double a_before = rec.area;
            const double l_before = rec.perimeter;
            curve = redistribute_arclength(curve);
            RedistributionEvent ev;
            ev.step = n;
            ev.area_change = polygon_area(curve) - a_before;
            ev.perimeter_change = perimeter(curve) - l_before;
            result.redistribution_events.push_back(ev);
            auto pq = bootstrap_curvature(curve);
            p = std::move(pq.first);
            q = std::move(pq.second);
        }
    }

    result.final = std::move(curve);
    result.p = std::move(p);
    result.q = std::move(q);
    return result;
}

inline void write_diagnostics_csv(const std::string& path,
                                  const DiagnosticsSeries& series) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << "step,time,perimeter,area,psi,newton_iters,area_drift_rel,"
           "perimeter_delta\n";
    char buf[256];
    for (const auto& r : series.records) {
        std::snprintf(buf, sizeof(buf),
                      "%ld,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", r.step,
                      r.time, r.perimeter, r.area, r.psi, r.newton_iters,
                      r.area_drift_rel, r.perimeter_delta);
        out << buf;
    }
    if (!out) throw io_error("write failed for " + path);
}

inline DiagnosticsSeries read_diagnostics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty diagnostics file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line !=
        "step,time,perimeter,area,psi,newton_iters,area_drift_rel,"
        "perimeter_delta")
        throw io_error("unexpected diagnostics header in " + path);
    DiagnosticsSeries series;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        DiagnosticsRecord r;
        if (std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%lf,%d,%lf,%lf", &r.step,
                        &r.time, &r.perimeter, &r.area, &r.psi, &r.newton_iters,
                        &r.area_drift_rel, &r.perimeter_delta) != 8)
            throw io_error(path + ":" + std::to_string(row) + ": bad record");
        series.records.push_back(r);
    }
    return series;
}

}  // namespace sdflow
