#pragma once

// Run orchestration and deterministic artifact writing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "catalog.hpp"
#include "config.hpp"
#include "diagnostics.hpp"
#include "initial_data.hpp"
#include "integrate.hpp"

namespace coho_euler {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3, kExitParse = 4 };

/// Output directory cannot be created or written.
class OutputError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw OutputError("write failed for " + path.string());
}

inline std::string csv_row(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += format_double(xs[i]);
    }
    s += '\n';
    return s;
}

inline std::string diagnostics_csv(const RunReport& report) {
    std::string s = "t,E,c,max_speed,c1_monitor,div_residual,p_periodicity";
    if (report.has_taylor) {
        for (int i = 1; i <= report.coefficients; ++i) s += ",alpha_" + std::to_string(i);
        for (int i = 1; i <= report.coefficients; ++i) s += ",beta_" + std::to_string(i);
    }
    s += '\n';
    for (const auto& d : report.series) {
        std::vector<double> row{d.t, d.energy, d.c, d.max_speed, d.c1.total, d.div_residual, d.p_periodicity};
        if (report.has_taylor && d.taylor) {
            row.insert(row.end(), d.taylor->alpha.begin(), d.taylor->alpha.end());
            row.insert(row.end(), d.taylor->beta.begin(), d.taylor->beta.end());
        }
        s += csv_row(row);
    }
    return s;
}

inline std::string snapshot_csv(const Snapshot& snap, const Grid& grid, int n0) {
    std::string s = "r";
    for (int i = 1; i <= n0; ++i) s += ",v_" + std::to_string(i);
    s += ",p\n";
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> row{grid.r[j]};
        for (int i = 0; i < n0; ++i) row.push_back(snap.v(static_cast<Eigen::Index>(j), i));
        row.push_back(j < snap.p.size() ? snap.p[j] : 0.0);
        s += csv_row(row);
    }
    return s;
}

inline Json summary_json(const RunConfig& cfg, const RunReport& report) {
    const auto& s = report.summary;
    const ProblemKind k = report.context.kind;
    Json flags{{"energy_drift", s.energy_drift_flag(k)},
               {"speed_drift", s.speed_drift_flag(k)},
               {"c_bound_violation", s.c_bound_flag()},
               {"envelope_violation", s.envelope_flag()},
               {"divergence", s.divergence_flag()},
               {"pressure_periodicity", s.pressure_flag()},
               {"c1_growth", s.c1_growth_flag()},
               {"parity_misfit_growth", s.parity_flag()},
               {"numerical_failure", s.failure.has_value()}};
    Json j{{"name", cfg.name},
           {"problem_kind", kind_name(k)},
           {"config_hash", cfg.config_hash()},
           {"steps_observed", s.steps},
           {"energy_initial", s.energy_initial},
           {"energy_drift_max", s.energy_drift_max},
           {"speed_drift_max", s.speed_drift_max},
           {"speed_sq_drift_max", s.speed_sq_drift_max},
           {"abs_c_max", s.abs_c_max},
           {"envelope_ratio_max", s.envelope_ratio_max},
           {"envelope_margin", kEnvelopeFactor - s.envelope_ratio_max},
           {"c1_initial", s.c1_initial},
           {"c1_max", s.c1_max},
           {"c1_ratio_max", s.c1_ratio_max},
           {"c1_speed_max", s.c1_speed_max},
           {"c1_gradient_max", s.c1_gradient_max},
           {"c1_shape_max", s.c1_shape_max},
           {"div_residual_max", s.div_residual_max},
           {"p_periodicity_max", s.p_periodicity_max},
           {"flags", flags},
           {"passed", !s.any_flag(k)}};
    if (s.has_c_bound) {
        j["c_bound"] = s.c_bound;
        j["c_sq_max"] = s.c_sq_max;
        j["c_bound_margin"] = s.c_bound_margin;
    }
    if (report.has_taylor) {
        j["parity_misfit_initial"] = s.parity_misfit_initial;
        j["parity_misfit_max"] = s.parity_misfit_max;
        j["taylor_growth"] = s.taylor_growth;
    }
    if (s.failure) {
        j["failure"] = Json{{"kind", s.failure->kind},
                            {"message", s.failure->message},
                            {"t", s.failure->t},
                            {"stage", s.failure->stage}};
    } else {
        j["failure"] = nullptr;
    }
    return j;
}

} // namespace detail

/// All structural, metric, profile and parity checks, without integrating.
inline ValidationReport validate_config(const RunConfig& cfg) {
    ValidationReport report;
    report.merge(validate_structure(cfg.algebra), "algebra.");
    if (!report.passed()) return report;
    const auto built = build_run(cfg);
    const auto& split = built.problem.split();
    report.merge(validate_split(split), "split.");
    report.add_flag("connection_supported", split.dim_m0() == 0 || connection_supported(split),
                    "nontrivial isotropy with m0 != m");
    if (cfg.kind == ProblemKind::Homogeneous) {
        report.merge(check_metric_invariance(*built.problem.metric), "metric.");
    } else {
        report.merge(validate_profile(*built.problem.profile), "profile.");
    }
    const OrbitSpace* os = built.problem.profile ? &built.problem.profile->orbit_space : nullptr;
    report.merge(validate_initial_data(cfg.initial, cfg.kind, os, split.dim_m0()), "initial.");
    return report;
}

inline void print_report(std::ostream& os, const ValidationReport& report) {
    for (const auto& c : report.checks) {
        const char* tag = c.informational ? "INFO" : (c.passed ? "PASS" : "FAIL");
        os << tag << "  " << c.name << "  residual=" << format_double(c.residual);
        if (!c.informational) os << "  threshold=" << format_double(c.threshold);
        if (!c.detail.empty()) os << "  (" << c.detail << ")";
        os << '\n';
    }
    os << (report.passed() ? "validation passed" : "validation FAILED") << '\n';
}

struct RunResult {
    int exit_code = kExitOk;
    Trajectory trajectory;
    std::filesystem::path out_dir;
};

/// Validates, integrates and writes diagnostics.csv, snapshots/, manifest.json
/// and summary.json. Artifacts of a failed run are still written.
inline RunResult run_command(const RunConfig& cfg, const std::filesystem::path& out_dir, int workers,
                             std::ostream& log) {
    namespace fs = std::filesystem;
    RunResult result;
    result.out_dir = out_dir;

    const auto report = validate_config(cfg);
    if (!report.passed()) {
        print_report(log, report);
        throw ValidationError("configuration failed validation");
    }

    std::error_code ec;
    fs::create_directories(out_dir / "snapshots", ec);
    if (ec) throw OutputError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    {
        const auto probe = out_dir / ".write_probe";
        std::ofstream t(probe);
        if (!t) throw OutputError("output directory " + out_dir.string() + " is not writable");
        t.close();
        fs::remove(probe, ec);
    }

    const auto built = build_run(cfg);
    ReducedDynamics dyn(built.problem, built.grid);
    const ReducedState initial = sample_initial(cfg.initial, dyn);
    RunOptions opt;
    opt.solver = cfg.solver;
    opt.snapshot_every = cfg.output.snapshot_every;
    opt.diagnostics_every = cfg.output.diagnostics_every;
    opt.workers = workers;
    result.trajectory = integrate(dyn, initial, opt);
    const auto& traj = result.trajectory;

    detail::write_file(out_dir / "diagnostics.csv", detail::diagnostics_csv(traj.report));
    Json snaps = Json::array();
    Json files = Json::array({"diagnostics.csv", "summary.json"});
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshots/snapshot_%05zu.csv", k);
        detail::write_file(out_dir / name,
                           detail::snapshot_csv(traj.snapshots[k], dyn.grid(), dyn.coefficients()));
        snaps.push_back(Json{{"file", name}, {"t", traj.snapshots[k].t}, {"c", traj.snapshots[k].c}});
        files.push_back(name);
    }
    const Json manifest{{"name", cfg.name},
                        {"config_hash", cfg.config_hash()},
                        {"problem_kind", kind_name(cfg.kind)},
                        {"files", files},
                        {"snapshots", snaps}};
    detail::write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    Json summary = detail::summary_json(cfg, traj.report);
    if (cfg.kind == ProblemKind::Circle)
        summary["vertical_functionals"] = Json{{"initial", vertical_functionals(initial, dyn)},
                                               {"final", vertical_functionals(traj.final_state, dyn)}};
    detail::write_file(out_dir / "summary.json", summary.dump(2) + "\n");

    const auto& s = traj.report.summary;
    if (s.failure) {
        log << "numerical failure (" << s.failure->kind << ") at t = " << format_double(s.failure->t) << ": "
            << s.failure->message << '\n';
        result.exit_code = kExitNumerical;
    } else {
        log << "completed " << cfg.name << ": t_end = " << format_double(cfg.solver.t_end)
            << ", energy drift = " << format_double(s.energy_drift_max)
            << ", speed drift = " << format_double(std::max(s.speed_drift_max, s.speed_sq_drift_max)) << '\n';
    }
    return result;
}

inline void list_examples(std::ostream& os) {
    for (const auto& e : example_catalog()) os << e.name << "  " << e.description << '\n';
}

} // namespace coho_euler
