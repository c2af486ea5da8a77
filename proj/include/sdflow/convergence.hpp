#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <string>
#include <vector>

#include "sdflow/errors.hpp"
#include "sdflow/evolve.hpp"
#include "sdflow/geometry.hpp"

namespace sdflow {

// Dyadic refinement study: level l uses M_l = M_0 2^l nodes and
// tau_l = tau_0 / 4^l. Each requested time is snapped to the nearest
// coarse-grid time k*tau_0 (then exactly representable on every level), and
// the error of level l is the max over its nodes of the Euclidean distance
// to the level-(l+1) solution at the shared parameter nodes (coarse node j
// is fine node 2j). One extra run beyond the last table row serves as the
// reference.

struct ConvergenceStudy {
    std::vector<std::size_t> mesh;   // per table row
    std::vector<double> tau;
    std::vector<double> times;       // snapped comparison times
    // errors[t][row], orders[t][row] (order undefined on row 0 -> NaN)
    std::vector<std::vector<double>> errors;
    std::vector<std::vector<double>> orders;
    bool aborted = false;
    std::string abort_reason;
};

inline ConvergenceStudy run_convergence_study(
    const std::function<CurveState(std::size_t)>& make_initial,
    std::size_t base_mesh, double base_tau, int rows,
    const std::vector<double>& times, const NewtonConfig& newton) {
    if (rows < 1 || base_mesh < 3 || !(base_tau > 0.0) || times.empty())
        throw invalid_parameter_error("bad convergence study parameters");

    ConvergenceStudy study;
    std::vector<long> ks(times.size());
    for (std::size_t t = 0; t < times.size(); ++t) {
        ks[t] = std::llround(times[t] / base_tau);
        if (ks[t] < 1)
            throw invalid_parameter_error("comparison time below one step");
        study.times.push_back(static_cast<double>(ks[t]) * base_tau);
    }
    const long k_max = *std::max_element(ks.begin(), ks.end());

    struct LevelRun {
        std::vector<CurveState> at_times;
        bool aborted = false;
        std::string reason;
    };
    const int n_levels = rows + 1;
    auto run_level = [&](int level) -> LevelRun {
        const std::size_t m = base_mesh << level;
        const double tau = base_tau / std::pow(4.0, level);
        const long scale = 1L << (2 * level);
        RunConfig cfg;
        cfg.tau = tau;
        cfg.steps = k_max * scale;
        cfg.newton = newton;
        for (long k : ks) cfg.snapshot_steps.push_back(k * scale);
        const RunResult res = evolve(make_initial(m), cfg);
        LevelRun out;
        if (res.aborted) {
            out.aborted = true;
            out.reason = "level " + std::to_string(level) + ": " + res.abort_reason;
            return out;
        }
        for (long k : ks) {
            const long want = k * scale;
            for (const auto& snap : res.snapshots)
                if (snap.step == want) {
                    out.at_times.push_back(snap.curve);
                    break;
                }
        }
        return out;
    };

    std::vector<std::future<LevelRun>> futs;
    futs.reserve(n_levels);
    for (int level = 0; level < n_levels; ++level)
        futs.push_back(std::async(std::launch::async, run_level, level));
    std::vector<LevelRun> levels;
    levels.reserve(n_levels);
    for (auto& f : futs) levels.push_back(f.get());

    for (int row = 0; row < rows; ++row) {
        if (levels[row].aborted || levels[row + 1].aborted) {
            study.aborted = true;
            study.abort_reason =
                levels[row].aborted ? levels[row].reason : levels[row + 1].reason;
            break;
        }
        study.mesh.push_back(base_mesh << row);
        study.tau.push_back(base_tau / std::pow(4.0, row));
    }
    study.errors.assign(times.size(), {});
    study.orders.assign(times.size(), {});
    for (std::size_t t = 0; t < times.size(); ++t) {
        for (std::size_t row = 0; row < study.mesh.size(); ++row) {
            const auto& coarse = levels[row].at_times[t];
            const auto& fine = levels[row + 1].at_times[t];
            double err = 0.0;
            for (std::size_t j = 0; j < coarse.size(); ++j)
                err = std::max(err,
                               (coarse.nodes[j] - fine.nodes[2 * j]).norm());
            study.errors[t].push_back(err);
            study.orders[t].push_back(
                row == 0 ? std::nan("")
                         : std::log2(study.errors[t][row - 1] /
                                     study.errors[t][row]));
        }
    }
    return study;
}

inline void write_convergence_csv(const std::string& path,
                                  const ConvergenceStudy& study) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << "time,mesh,tau,error,order\n";
    char buf[160];
    for (std::size_t t = 0; t < study.times.size(); ++t) {
        for (std::size_t row = 0; row < study.mesh.size(); ++row) {
            std::snprintf(buf, sizeof(buf), "%.17g,%zu,%.17g,%.17g,%.17g\n",
                          study.times[t], study.mesh[row], study.tau[row],
                          study.errors[t][row], study.orders[t][row]);
            out << buf;
        }
    }
    if (!out) throw io_error("write failed for " + path);
}

}  // namespace sdflow
