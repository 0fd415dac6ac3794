#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "diagnostics.hpp"
#include "parallel.hpp"
#include "reduced_euler.hpp"

namespace coho_euler {

struct RunOptions {
    SolverConfig solver;
    int snapshot_every = 0;      // steps between snapshots; 0 keeps only the first and last
    int diagnostics_every = 1;   // steps between recorded series rows
    bool stop_on_pressure_failure = true;
    int workers = 1;
};

struct Snapshot {
    double t = 0.0;
    double c = 0.0;
    CoeffMatrix v;
    std::vector<double> p;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    RunReport report;
    ReducedState final_state;

    bool failed() const { return report.summary.failure.has_value(); }
};

inline long long step_count(const SolverConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InputError("solver.dt must be positive");
    if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end)) throw InputError("solver.t_end must be positive");
    return static_cast<long long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
}

/// Runs the reduced system from `initial` to t_end. Every step is monitored;
/// rows and snapshots are kept at the configured cadence. A numerical failure
/// ends the run with a partial trajectory and a failure record.
inline Trajectory integrate(const ReducedDynamics& dyn, const ReducedState& initial, const RunOptions& opt) {
    const long long steps = step_count(opt.solver);
    WorkerPool pool(opt.workers);
    Trajectory out;
    out.report.context = report_context(dyn);
    out.report.coefficients = dyn.coefficients();
    out.report.has_taylor = taylor_applicable(dyn);
    ConservationTracker tracker(out.report.context);
    const auto speed0 = speed_sq_profile(initial, dyn);

    ReducedState s = initial;
    auto snapshot = [&](const PressureField& p) { out.snapshots.push_back({s.t, s.c, s.v, p.p}); };

    auto observe = [&](long long k) {
        const auto p = pressure_field(s, dyn, dyn.dcdt(s));
        const auto d = evaluate_step(s, dyn, p.periodicity_residual, &speed0);
        tracker.observe(d);
        const bool broken = opt.stop_on_pressure_failure && p.periodicity_residual > kPressurePeriodicityTolerance;
        const bool last = k == steps || broken;
        if (k == 0 || last || (opt.diagnostics_every > 0 && k % opt.diagnostics_every == 0))
            out.report.series.push_back(d);
        if (k == 0 || last || (opt.snapshot_every > 0 && k % opt.snapshot_every == 0)) snapshot(p);
        if (broken)
            throw NumericalFailure("pressure_periodicity",
                                   "pressure is not periodic (relative residual " +
                                       format_double(p.periodicity_residual) + "); dc/dt is inconsistent",
                                   s.t);
    };

    try {
        observe(0);
        for (long long k = 1; k <= steps; ++k) {
            SolverConfig cfg = opt.solver;
            const double t_next = k == steps ? opt.solver.t_end : static_cast<double>(k) * opt.solver.dt;
            cfg.dt = t_next - s.t;
            dyn.check_cfl(s, cfg);
            s = step_rk4(s, dyn, cfg.dt, &pool);
            s.t = t_next;
            observe(k);
        }
    } catch (const NumericalFailure& e) {
        tracker.fail({e.kind(), e.what(), e.time(), e.stage()});
        if (out.snapshots.empty() || out.snapshots.back().t != s.t) {
            // Keep the last good state for post-mortem.
            const auto p = pressure_field(s, dyn, dyn.dcdt(s));
            snapshot(p);
        }
    }
    out.report.summary = tracker.summary();
    out.final_state = s;
    return out;
}

inline Trajectory integrate(const Problem& problem, const Grid& grid, const ReducedState& initial,
                            const RunOptions& opt) {
    ReducedDynamics dyn(problem, grid);
    return integrate(dyn, initial, opt);
}

} // namespace coho_euler
