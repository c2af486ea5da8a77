#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdflow/baseline.hpp"
#include "sdflow/convergence.hpp"
#include "sdflow/errors.hpp"
#include "sdflow/evolve.hpp"
#include "sdflow/geometry.hpp"
#include "sdflow/svg.hpp"

namespace sdflow {

struct ExperimentSpec {
    std::string name = "run";
    std::string init = "ellipse:2,1";
    std::size_t mesh = 32;
    double dt = 1e-4;
    double t_end = 2.0;
    double newton_tol = 1e-10;
    std::string jacobian = "as-written";
    std::string scheme = "proposed";
    std::string redistribute = "off";
    std::string out_dir = "out";
    long svg_every = 0;
    unsigned long seed = 0;
    // converge subcommand
    int levels = 4;
    std::size_t base_mesh = 8;
    double base_dt = 0.04;
    std::vector<double> times = {0.2, 0.5, 2.0};
};

namespace detail {

struct CommonOpts {
    CLI::Option* init = nullptr;
    CLI::Option* mesh = nullptr;
    CLI::Option* dt = nullptr;
    CLI::Option* t_end = nullptr;
};

inline CommonOpts add_common_flags(CLI::App* cmd, ExperimentSpec& spec) {
    CommonOpts opts;
    opts.init = cmd->add_option(
        "--init", spec.init,
        "initial shape: ellipse:a,b | flower:amp,freq | file:path "
        "(ellipse-arc / flower-arc sample at equal arclength instead of "
        "equal parameter angle)");
    opts.mesh = cmd->add_option("--mesh", spec.mesh, "number of nodes M")
                    ->check(CLI::Range(std::size_t{3}, std::size_t{100000}));
    opts.dt = cmd->add_option("--dt", spec.dt, "time step")
                  ->check(CLI::PositiveNumber);
    opts.t_end = cmd->add_option("--t-end", spec.t_end, "end time")
                     ->check(CLI::PositiveNumber);
    cmd->add_option("--newton-tol", spec.newton_tol, "Newton tolerances")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--jacobian", spec.jacobian, "Jacobian variant")
        ->check(CLI::IsMember({"as-written", "time-weighted"}));
    cmd->add_option("--scheme", spec.scheme, "time stepping scheme")
        ->check(CLI::IsMember({"proposed", "baseline"}));
    cmd->add_option("--redistribute", spec.redistribute,
                    "mesh redistribution: off | arclength:k");
    cmd->add_option("--out", spec.out_dir, "output directory");
    cmd->add_option("--svg-every", spec.svg_every,
                    "snapshot every k steps (0 = off)");
    cmd->add_option("--seed", spec.seed,
                    "seed recorded for randomized harnesses");
    return opts;
}

// Registers the four subcommands on `app`, binding into `spec`. The flower
// subcommand swaps in its own defaults for options the user did not set.
inline void build_app(CLI::App& app, ExperimentSpec& spec) {
    app.description(
        "Structure-preserving surface diffusion flow of closed planar curves");
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run",
                                   "evolve one curve and record diagnostics");
    add_common_flags(run, spec);
    run->callback([&spec] { spec.name = "run"; });

    auto* conv =
        app.add_subcommand("converge", "dyadic mesh/time refinement error table");
    add_common_flags(conv, spec);
    conv->add_option("--levels", spec.levels, "number of table rows")
        ->check(CLI::Range(1, 8));
    conv->add_option("--base-mesh", spec.base_mesh, "coarsest node count")
        ->check(CLI::Range(std::size_t{3}, std::size_t{4096}));
    conv->add_option("--base-dt", spec.base_dt, "coarsest time step")
        ->check(CLI::PositiveNumber);
    conv->add_option("--times", spec.times, "comparison times");
    conv->callback([&spec] { spec.name = "converge"; });

    auto* cmp = app.add_subcommand(
        "compare", "proposed vs semi-implicit baseline on one grid");
    add_common_flags(cmp, spec);
    cmp->callback([&spec] { spec.name = "compare"; });

    auto* flower = app.add_subcommand(
        "flower", "flower-shape evolution with fixed snapshot times");
    const CommonOpts fopts = add_common_flags(flower, spec);
    flower->callback([&spec, fopts] {
        spec.name = "flower";
        if (fopts.init->count() == 0) spec.init = "flower-arc:0.65,7";
        if (fopts.mesh->count() == 0) spec.mesh = 210;
        if (fopts.dt->count() == 0) spec.dt = 1e-6;
        if (fopts.t_end->count() == 0) spec.t_end = 0.01;
    });
}

}  // namespace detail

inline ExperimentSpec parse_cli(const std::vector<std::string>& args) {
    ExperimentSpec spec;
    CLI::App app;
    detail::build_app(app, spec);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    return spec;
}

inline CurveState make_initial(const ExperimentSpec& spec) {
    const auto colon = spec.init.find(':');
    const std::string kind = spec.init.substr(0, colon);
    const std::string rest =
        colon == std::string::npos ? "" : spec.init.substr(colon + 1);
    if (kind == "ellipse" || kind == "ellipse-arc") {
        double a = 2.0, b = 1.0;
        if (!rest.empty() &&
            std::sscanf(rest.c_str(), "%lf,%lf", &a, &b) != 2)
            throw invalid_parameter_error("bad ellipse spec '" + spec.init + "'");
        return kind == "ellipse" ? make_ellipse(a, b, spec.mesh)
                                 : make_ellipse_arclength(a, b, spec.mesh);
    }
    if (kind == "flower" || kind == "flower-arc") {
        double amp = 0.65;
        int freq = 7;
        if (!rest.empty() &&
            std::sscanf(rest.c_str(), "%lf,%d", &amp, &freq) != 2)
            throw invalid_parameter_error("bad flower spec '" + spec.init + "'");
        return kind == "flower" ? make_flower(amp, freq, spec.mesh)
                                : make_flower_arclength(amp, freq, spec.mesh);
    }
    if (kind == "file") {
        if (rest.empty())
            throw invalid_parameter_error("file: requires a path");
        return read_curve_csv(rest);
    }
    throw invalid_parameter_error("unknown initial shape '" + spec.init + "'");
}

namespace detail {

inline NewtonConfig newton_from_spec(const ExperimentSpec& spec) {
    NewtonConfig cfg;
    cfg.tol_x = cfg.tol_p = cfg.tol_q = spec.newton_tol;
    cfg.jacobian_variant = spec.jacobian == "time-weighted"
                               ? JacobianVariant::time_weighted
                               : JacobianVariant::as_written;
    return cfg;
}

inline void apply_redistribute_flag(const ExperimentSpec& spec, RunConfig& cfg) {
    if (spec.redistribute == "off") return;
    const std::string prefix = "arclength:";
    if (spec.redistribute.rfind(prefix, 0) == 0) {
        cfg.redistribution = Redistribution::arclength;
        cfg.redistribute_every = std::stol(spec.redistribute.substr(prefix.size()));
        if (cfg.redistribute_every < 1)
            throw invalid_parameter_error("redistribution interval must be >= 1");
        return;
    }
    throw invalid_parameter_error("bad --redistribute value '" +
                                  spec.redistribute + "'");
}

inline void write_snapshots(const std::filesystem::path& dir,
                            const std::vector<Snapshot>& snapshots,
                            const std::string& title_prefix) {
    char name[64];
    for (const auto& snap : snapshots) {
        std::snprintf(name, sizeof(name), "curve_%ld.csv", snap.step);
        write_curve_csv((dir / name).string(), snap.curve);
        std::snprintf(name, sizeof(name), "curve_%ld.svg", snap.step);
        SvgStyle style;
        char title[96];
        std::snprintf(title, sizeof(title), "%s t = %g", title_prefix.c_str(),
                      snap.time);
        style.title = title;
        emit_svg((dir / name).string(), snap.curve, style);
    }
}

inline nlohmann::json invariant_json(const DiagnosticsSeries& series) {
    const auto rep = check_invariants(series, 1e-9, 1e-12);
    return {{"max_area_drift_rel", rep.max_area_drift},
            {"max_perimeter_increase", rep.max_perimeter_increase},
            {"area_violations", rep.area_violations.size()},
            {"perimeter_violations", rep.perimeter_violations.size()},
            {"ok", rep.ok()}};
}

inline nlohmann::json run_result_json(const ExperimentSpec& spec,
                                      const RunResult& res, double seconds) {
    const auto& records = res.series.records;
    nlohmann::json j;
    j["command"] = spec.name;
    j["scheme"] = spec.scheme;
    j["init"] = spec.init;
    j["mesh"] = spec.mesh;
    j["dt"] = spec.dt;
    j["t_end"] = spec.t_end;
    j["steps"] = records.empty() ? 0 : records.back().step;
    j["newton_tol"] = spec.newton_tol;
    j["jacobian"] = spec.jacobian;
    j["redistribute"] = spec.redistribute;
    j["seed"] = spec.seed;
    j["aborted"] = res.aborted;
    if (res.aborted) j["abort_reason"] = res.abort_reason;
    j["invariants"] = invariant_json(res.series);
    if (!records.empty()) {
        const auto& last = records.back();
        j["final"] = {{"time", last.time},
                      {"perimeter", last.perimeter},
                      {"area", last.area},
                      {"psi", last.psi},
                      {"isoperimetric_ratio",
                       last.perimeter * last.perimeter /
                           (4.0 * std::numbers::pi * last.area)}};
    }
    if (!res.redistribution_events.empty()) {
        nlohmann::json evs = nlohmann::json::array();
        for (const auto& ev : res.redistribution_events)
            evs.push_back({{"step", ev.step},
                           {"area_change", ev.area_change},
                           {"perimeter_change", ev.perimeter_change}});
        j["redistribution_events"] = evs;
    }
    j["warnings"] = res.warnings.size();
    j["wall_seconds"] = seconds;
    return j;
}

inline void write_json(const std::filesystem::path& path,
                       const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

struct Timer {
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
            .count();
    }
};

inline RunResult execute_run(const ExperimentSpec& spec,
                             const std::vector<long>& extra_snapshots) {
    const CurveState initial = make_initial(spec);
    const long steps = std::llround(spec.t_end / spec.dt);
    if (steps < 1)
        throw invalid_parameter_error("t_end shorter than one step");
    if (spec.scheme == "baseline") {
        BaselineConfig cfg;
        cfg.tau = spec.dt;
        cfg.steps = steps;
        cfg.snapshot_every = spec.svg_every;
        cfg.snapshot_steps = extra_snapshots;
        return run_baseline(initial, cfg);
    }
    RunConfig cfg;
    cfg.tau = spec.dt;
    cfg.steps = steps;
    cfg.newton = newton_from_spec(spec);
    cfg.snapshot_every = spec.svg_every;
    cfg.snapshot_steps = extra_snapshots;
    apply_redistribute_flag(spec, cfg);
    return evolve(initial, cfg);
}

}  // namespace detail

inline int run_single(const ExperimentSpec& spec,
                      std::vector<long> extra_snapshots = {}) {
    namespace fs = std::filesystem;
    detail::Timer timer;
    const fs::path dir(spec.out_dir);
    fs::create_directories(dir);

    const RunResult res = detail::execute_run(spec, extra_snapshots);

    write_diagnostics_csv((dir / "diagnostics.csv").string(), res.series);
    detail::write_snapshots(dir, res.snapshots, spec.scheme);
    detail::write_json(dir / "summary.json",
                       detail::run_result_json(spec, res, timer.seconds()));
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    if (res.aborted) {
        std::cerr << "run aborted: " << res.abort_reason << "\n";
        return 1;
    }
    const auto& last = res.series.records.back();
    std::cout << "completed " << last.step << " steps to t = " << last.time
              << ": perimeter " << last.perimeter << ", area " << last.area
              << ", psi " << last.psi << "\n";
    return 0;
}

inline int run_flower(const ExperimentSpec& spec) {
    static constexpr double kSnapshotTimes[] = {0.0,   1e-4, 1e-3,
                                                5e-3,  6e-3, 1e-2};
    std::vector<long> snaps;
    for (double t : kSnapshotTimes)
        if (t <= spec.t_end + 0.5 * spec.dt)
            snaps.push_back(std::llround(t / spec.dt));
    return run_single(spec, snaps);
}

inline int run_compare(const ExperimentSpec& spec) {
    namespace fs = std::filesystem;
    detail::Timer timer;
    const fs::path dir(spec.out_dir);
    fs::create_directories(dir / "proposed");
    fs::create_directories(dir / "baseline");

    ExperimentSpec prop = spec;
    prop.scheme = "proposed";
    const RunResult res_p = detail::execute_run(prop, {});
    ExperimentSpec base = spec;
    base.scheme = "baseline";
    const RunResult res_b = detail::execute_run(base, {});

    write_diagnostics_csv((dir / "proposed" / "diagnostics.csv").string(),
                          res_p.series);
    write_diagnostics_csv((dir / "baseline" / "diagnostics.csv").string(),
                          res_b.series);

    std::ofstream cmp(dir / "comparison.csv");
    if (!cmp) throw io_error("cannot open comparison.csv for writing");
    cmp << "scheme,step,time,perimeter,area,psi,area_drift_rel\n";
    char buf[256];
    for (const char* scheme : {"proposed", "baseline"}) {
        const auto& series =
            scheme == std::string("proposed") ? res_p.series : res_b.series;
        for (const auto& r : series.records) {
            std::snprintf(buf, sizeof(buf), "%s,%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          scheme, r.step, r.time, r.perimeter, r.area, r.psi,
                          r.area_drift_rel);
            cmp << buf;
        }
    }

    const double drift_p = check_invariants(res_p.series, 1e9, 1e9).max_area_drift;
    const double drift_b = check_invariants(res_b.series, 1e9, 1e9).max_area_drift;
    nlohmann::json j;
    j["command"] = "compare";
    j["init"] = spec.init;
    j["mesh"] = spec.mesh;
    j["dt"] = spec.dt;
    j["t_end"] = spec.t_end;
    j["newton_tol"] = spec.newton_tol;
    j["jacobian"] = spec.jacobian;
    j["proposed"] = detail::invariant_json(res_p.series);
    j["baseline"] = detail::invariant_json(res_b.series);
    j["proposed_area_drift"] = drift_p;
    j["baseline_area_drift"] = drift_b;
    j["drift_ratio"] = drift_b / std::max(drift_p, 1e-300);
    j["proposed_final_psi"] = res_p.series.records.back().psi;
    j["aborted"] = res_p.aborted || res_b.aborted;
    j["wall_seconds"] = timer.seconds();
    detail::write_json(dir / "summary.json", j);

    std::cout << "area drift: proposed " << drift_p << ", baseline " << drift_b
              << ", ratio " << j["drift_ratio"].get<double>() << "\n";
    return (res_p.aborted || res_b.aborted) ? 1 : 0;
}

inline int run_convergence(const ExperimentSpec& spec) {
    namespace fs = std::filesystem;
    detail::Timer timer;
    const fs::path dir(spec.out_dir);
    fs::create_directories(dir);

    double a = 2.0, b = 1.0;
    bool arc = false;
    {
        const auto colon = spec.init.find(':');
        const std::string kind = spec.init.substr(0, colon);
        arc = kind == "ellipse-arc";
        if (kind != "ellipse" && !arc)
            throw invalid_parameter_error(
                "converge supports ellipse initial data only");
        if (colon != std::string::npos &&
            std::sscanf(spec.init.c_str() + colon + 1, "%lf,%lf", &a, &b) != 2)
            throw invalid_parameter_error("bad ellipse spec '" + spec.init + "'");
    }
    auto make = [a, b, arc](std::size_t m) {
        return arc ? make_ellipse_arclength(a, b, m) : make_ellipse(a, b, m);
    };

    const ConvergenceStudy study = run_convergence_study(
        make, spec.base_mesh, spec.base_dt, spec.levels, spec.times,
        detail::newton_from_spec(spec));
    write_convergence_csv((dir / "convergence.csv").string(), study);

    nlohmann::json j;
    j["command"] = "converge";
    j["init"] = spec.init;
    j["base_mesh"] = spec.base_mesh;
    j["base_dt"] = spec.base_dt;
    j["levels"] = spec.levels;
    j["newton_tol"] = spec.newton_tol;
    j["jacobian"] = spec.jacobian;
    j["times"] = study.times;
    j["errors"] = study.errors;
    nlohmann::json orders = nlohmann::json::array();
    for (const auto& col : study.orders) {
        nlohmann::json c = nlohmann::json::array();
        for (double o : col)
            c.push_back(std::isnan(o) ? nlohmann::json() : nlohmann::json(o));
        orders.push_back(c);
    }
    j["orders"] = orders;
    j["aborted"] = study.aborted;
    if (study.aborted) j["abort_reason"] = study.abort_reason;
    j["wall_seconds"] = timer.seconds();
    detail::write_json(dir / "summary.json", j);

    for (std::size_t t = 0; t < study.times.size(); ++t) {
        std::printf("t = %-6g\n", study.times[t]);
        for (std::size_t row = 0; row < study.mesh.size(); ++row) {
            if (row == 0)
                std::printf("  M=%4zu tau=%-10.6g e=%.4e order=-\n",
                            study.mesh[row], study.tau[row],
                            study.errors[t][row]);
            else
                std::printf("  M=%4zu tau=%-10.6g e=%.4e order=%.3f\n",
                            study.mesh[row], study.tau[row],
                            study.errors[t][row], study.orders[t][row]);
        }
    }
    if (study.aborted) {
        std::cerr << "study aborted: " << study.abort_reason << "\n";
        return 1;
    }
    return 0;
}

inline int run_experiment(const ExperimentSpec& spec) {
    if (spec.name == "converge") return run_convergence(spec);
    if (spec.name == "compare") return run_compare(spec);
    if (spec.name == "flower") return run_flower(spec);
    return run_single(spec);
}

inline int cli_main(int argc, char** argv) {
    ExperimentSpec spec;
    CLI::App app;
    detail::build_app(app, spec);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return run_experiment(spec);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace sdflow
