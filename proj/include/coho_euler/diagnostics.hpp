#pragma once

// Conservation, regularity and blow-up monitors evaluated on reduced states.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "homogeneous.hpp"
#include "numerics.hpp"
#include "reduced_euler.hpp"

namespace coho_euler {

inline constexpr double kEnergyDriftTolerance = 1e-6;
inline constexpr double kSpeedDriftTolerance = 1e-8;
inline constexpr double kCBoundSlack = 1e-8;
inline constexpr double kEnvelopeFactor = 1.05;
inline constexpr double kDivergenceTolerance = 1e-8;
inline constexpr double kC1GrowthFactor = 10.0;
inline constexpr double kTaylorGrowthFactor = 10.0;
inline constexpr double kTaylorFloor = 1e-8;
inline constexpr double kParityMisfitTolerance = 1e-4;
inline constexpr int kTaylorWindow = 6;
inline constexpr int kDivergenceProbes = 8;

namespace detail {

inline double vertical_sq(const ReducedState& s, const NodeGeometry& g, std::size_t j) {
    double acc = 0.0;
    const int n = s.coefficients();
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) acc += s.v(j, a) * g.gram(a, b) * s.v(j, b);
    return acc;
}

inline double horizontal(const ReducedState& s, const NodeGeometry& g, ProblemKind kind) {
    return kind == ProblemKind::Circle ? s.c * g.h0 : 0.0;
}

} // namespace detail

/// E = 1/2 int (h^2 + v^T gram v) vol dr. Interval grids add zero samples at
/// singular endpoints, where the orbit volume vanishes.
inline double energy(const ReducedState& s, const ReducedDynamics& dyn) {
    const std::size_t n = s.nodes();
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& g = dyn.node(j);
        const double h = detail::horizontal(s, g, dyn.kind());
        f[j] = (h * h + detail::vertical_sq(s, g, j)) * g.volume;
    }
    switch (dyn.kind()) {
    case ProblemKind::Homogeneous:
        return 0.5 * f[0];
    case ProblemKind::Circle:
        return 0.5 * weighted_sum(dyn.circle_weights(), f);
    case ProblemKind::Interval: {
        const auto& os = dyn.problem().profile->orbit_space;
        std::vector<double> closed;
        if (os.singular(0)) closed.push_back(0.0);
        closed.insert(closed.end(), f.begin(), f.end());
        if (os.singular(1)) closed.push_back(0.0);
        return 0.5 * weighted_sum(simpson_weights(closed.size(), dyn.grid().dr), closed);
    }
    }
    return 0.0;
}

inline double pointwise_speed(const ReducedState& s, const ReducedDynamics& dyn, std::size_t j) {
    if (j >= s.nodes())
        throw InputError("pointwise_speed: index " + std::to_string(j) + " out of range [0, " +
                         std::to_string(s.nodes()) + ")");
    const auto& g = dyn.node(j);
    const double h = detail::horizontal(s, g, dyn.kind());
    return std::sqrt(h * h + detail::vertical_sq(s, g, j));
}

/// Per-component split of the vertical energy, int v_i (gram v)_i vol dr on
/// the circle. Recorded for inspection only.
inline std::vector<double> vertical_functionals(const ReducedState& s, const ReducedDynamics& dyn) {
    const int k = s.coefficients();
    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    if (dyn.kind() != ProblemKind::Circle) return out;
    std::vector<double> f(s.nodes());
    for (int i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < s.nodes(); ++j) {
            const auto& g = dyn.node(j);
            double gv = 0.0;
            for (int b = 0; b < k; ++b) gv += g.gram(i, b) * s.v(static_cast<Eigen::Index>(j), b);
            f[j] = s.v(static_cast<Eigen::Index>(j), i) * gv * g.volume;
        }
        out[static_cast<std::size_t>(i)] = weighted_sum(dyn.circle_weights(), f);
    }
    return out;
}

/// C1 proxy: sup speed + sup |d_r (h, v_i)| + sup |S_r v|_gram, reported with
/// its components so the shape term near collapsed orbits stays visible.
struct C1Monitor {
    double total = 0.0;
    double speed = 0.0;
    double gradient = 0.0;
    double shape = 0.0;
};

inline C1Monitor c1_monitor(const ReducedState& s, const ReducedDynamics& dyn) {
    C1Monitor m;
    const std::size_t n = s.nodes();
    const int k = s.coefficients();
    for (std::size_t j = 0; j < n; ++j) {
        m.speed = std::max(m.speed, pointwise_speed(s, dyn, j));
        const auto& g = dyn.node(j);
        if (k > 0) {
            const Vec sv = g.shape * s.v.row(static_cast<Eigen::Index>(j)).transpose();
            m.shape = std::max(m.shape, std::sqrt(std::max(0.0, sv.dot(g.gram * sv))));
        }
    }
    if (dyn.kind() != ProblemKind::Homogeneous) {
        const double dr = dyn.grid().dr;
        const bool periodic = dyn.kind() == ProblemKind::Circle;
        auto d1 = [&](std::span<const double> f, std::size_t j, std::size_t stride, std::size_t offset) {
            return periodic ? periodic_d1(f, j, dr, stride, offset) : bounded_d1(f, j, dr, stride, offset);
        };
        const std::span<const double> flat(s.v.data(), static_cast<std::size_t>(s.v.size()));
        std::vector<double> h(n);
        for (std::size_t j = 0; j < n; ++j) h[j] = detail::horizontal(s, dyn.node(j), dyn.kind());
        for (std::size_t j = 0; j < n; ++j) {
            m.gradient = std::max(m.gradient, std::abs(d1(h, j, 1, 0)));
            for (int i = 0; i < k; ++i)
                m.gradient = std::max(m.gradient, std::abs(d1(flat, j, static_cast<std::size_t>(k),
                                                               static_cast<std::size_t>(i))));
        }
    }
    m.total = m.speed + m.gradient + m.shape;
    return m;
}

/// max_j |h'(r_j) - H(r_j) h(r_j)| with h' from fourth-order differences of the
/// pointwise h = c h0(r), plus the homogeneous divergence of the vertical part
/// at evenly spaced probe nodes.
inline double divergence_residual(const ReducedState& s, const ReducedDynamics& dyn) {
    double worst = 0.0;
    const std::size_t n = s.nodes();
    if (dyn.kind() == ProblemKind::Circle) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto& g = dyn.node(j);
            worst = std::max(worst, std::abs(s.c) * std::abs(g.h0_prime_fd - g.mean_curvature * g.h0));
        }
    }
    if (s.coefficients() > 0) {
        const std::size_t probes = std::min<std::size_t>(kDivergenceProbes, n);
        for (std::size_t k = 0; k < probes; ++k) {
            const std::size_t j = k * n / probes;
            const auto& g = dyn.node(j);
            const Vec x = s.v.row(static_cast<Eigen::Index>(j)).transpose();
            worst = std::max(worst, std::abs(homogeneous_divergence(g.connection, g.gram, x)));
        }
    }
    return worst;
}

/// Least-squares fit v_i ~ alpha_i + beta_i rho^2 on the nodes nearest the
/// first singular endpoint (rho = distance to it).
struct TaylorFit {
    std::vector<double> alpha;
    std::vector<double> beta;
    double parity_misfit = 0.0; // max fit residual relative to max(1, |v|)
};

inline bool taylor_applicable(const ReducedDynamics& dyn) {
    if (dyn.kind() != ProblemKind::Interval) return false;
    const auto& os = dyn.problem().profile->orbit_space;
    return os.singular(0) || os.singular(1);
}

inline TaylorFit endpoint_taylor_monitor(const ReducedState& s, const ReducedDynamics& dyn) {
    if (!taylor_applicable(dyn))
        throw ValidationError("endpoint_taylor_monitor needs an interval run with a singular endpoint");
    const std::size_t n = s.nodes();
    if (n < static_cast<std::size_t>(kTaylorWindow))
        throw ValidationError("endpoint_taylor_monitor needs at least " + std::to_string(kTaylorWindow) +
                              " interior nodes, got " + std::to_string(n));
    const auto& os = dyn.problem().profile->orbit_space;
    const bool left = os.singular(0);
    Mat A(kTaylorWindow, 2);
    std::vector<std::size_t> idx(kTaylorWindow);
    for (int k = 0; k < kTaylorWindow; ++k) {
        idx[k] = left ? static_cast<std::size_t>(k) : n - 1 - static_cast<std::size_t>(k);
        const double rho = left ? dyn.grid().r[idx[k]] : os.length - dyn.grid().r[idx[k]];
        A(k, 0) = 1.0;
        A(k, 1) = rho * rho;
    }
    const auto qr = A.colPivHouseholderQr();
    TaylorFit fit;
    double misfit = 0.0, scale = 1.0;
    for (int i = 0; i < s.coefficients(); ++i) {
        Vec y(kTaylorWindow);
        for (int k = 0; k < kTaylorWindow; ++k) y[k] = s.v(static_cast<Eigen::Index>(idx[k]), i);
        const Vec coef = qr.solve(y);
        fit.alpha.push_back(coef[0]);
        fit.beta.push_back(coef[1]);
        misfit = std::max(misfit, (A * coef - y).cwiseAbs().maxCoeff());
        scale = std::max(scale, y.cwiseAbs().maxCoeff());
    }
    fit.parity_misfit = misfit / scale;
    return fit;
}

// ---------------------------------------------------------------------------
// Per-step diagnostics and the conservation summary

struct StepDiagnostics {
    double t = 0.0;
    double energy = 0.0;
    double c = 0.0;
    double max_speed = 0.0;
    double max_vertical_sq = 0.0; // max_r v^T gram v
    C1Monitor c1;
    double div_residual = 0.0;
    double p_periodicity = 0.0;
    double speed_drift = 0.0;     // max_j |speed_j - speed_j(0)|
    double speed_sq_drift = 0.0;  // max_j |speed_j^2 - speed_j(0)^2|
    std::optional<TaylorFit> taylor;
};

/// Evaluates every monitor on one state. Pointwise drifts are measured
/// against `initial_speed_sq` when supplied.
inline StepDiagnostics evaluate_step(const ReducedState& s, const ReducedDynamics& dyn, double p_periodicity,
                                     const std::vector<double>* initial_speed_sq = nullptr) {
    StepDiagnostics d;
    d.t = s.t;
    d.c = s.c;
    d.energy = energy(s, dyn);
    d.c1 = c1_monitor(s, dyn);
    d.max_speed = d.c1.speed;
    for (std::size_t j = 0; j < s.nodes(); ++j) {
        const auto& g = dyn.node(j);
        const double vsq = detail::vertical_sq(s, g, j);
        d.max_vertical_sq = std::max(d.max_vertical_sq, vsq);
        if (initial_speed_sq != nullptr) {
            const double h = detail::horizontal(s, g, dyn.kind());
            const double sq = h * h + vsq;
            const double sq0 = (*initial_speed_sq)[j];
            d.speed_sq_drift = std::max(d.speed_sq_drift, std::abs(sq - sq0));
            d.speed_drift = std::max(d.speed_drift, std::abs(std::sqrt(sq) - std::sqrt(sq0)));
        }
    }
    d.div_residual = divergence_residual(s, dyn);
    d.p_periodicity = p_periodicity;
    if (taylor_applicable(dyn)) d.taylor = endpoint_taylor_monitor(s, dyn);
    return d;
}

inline std::vector<double> speed_sq_profile(const ReducedState& s, const ReducedDynamics& dyn) {
    std::vector<double> out(s.nodes());
    for (std::size_t j = 0; j < s.nodes(); ++j) {
        const double sp = pointwise_speed(s, dyn, j);
        out[j] = sp * sp;
    }
    return out;
}

struct FailureRecord {
    std::string kind;
    std::string message;
    double t = 0.0;
    int stage = -1;
};

/// Quantities the summary needs beyond the per-step series.
struct ReportContext {
    ProblemKind kind = ProblemKind::Homogeneous;
    double h0_sq_volume_integral = 0.0; // circle: int h0^2 vol dr
    double max_h0_shape_norm = 0.0;     // circle: max_r h0 |S_r|
};

inline ReportContext report_context(const ReducedDynamics& dyn) {
    ReportContext ctx;
    ctx.kind = dyn.kind();
    if (dyn.kind() == ProblemKind::Circle) {
        std::vector<double> f(dyn.nodes());
        for (std::size_t j = 0; j < dyn.nodes(); ++j) f[j] = dyn.node(j).h0 * dyn.node(j).h0 * dyn.node(j).volume;
        ctx.h0_sq_volume_integral = weighted_sum(dyn.circle_weights(), f);
        ctx.max_h0_shape_norm = dyn.max_h0_shape_norm();
    }
    return ctx;
}

struct ConservationSummary {
    std::size_t steps = 0;
    double energy_initial = 0.0;
    double energy_drift_max = 0.0; // relative
    double speed_drift_max = 0.0;
    double speed_sq_drift_max = 0.0;
    bool has_c_bound = false;
    double c_bound = 0.0;          // 2 E0 / int h0^2 vol dr
    double c_sq_max = 0.0;
    double c_bound_margin = std::numeric_limits<double>::infinity();
    double abs_c_max = 0.0;
    double envelope_ratio_max = 0.0; // max_t M(t) / (M0 exp(2 t K(t)))
    double c1_initial = 0.0;
    double c1_max = 0.0;
    double c1_ratio_max = 0.0;
    double c1_speed_max = 0.0;
    double c1_gradient_max = 0.0;
    double c1_shape_max = 0.0;
    double div_residual_max = 0.0;
    double p_periodicity_max = 0.0;
    double parity_misfit_initial = 0.0;
    double parity_misfit_max = 0.0;
    bool taylor_growth = false;
    std::optional<FailureRecord> failure;

    bool energy_drift_flag(ProblemKind k) const {
        return k == ProblemKind::Circle && energy_drift_max > kEnergyDriftTolerance;
    }
    bool speed_drift_flag(ProblemKind k) const {
        return k != ProblemKind::Circle && std::max(speed_drift_max, speed_sq_drift_max) > kSpeedDriftTolerance;
    }
    bool c_bound_flag() const { return has_c_bound && c_bound_margin < -kCBoundSlack; }
    bool envelope_flag() const { return envelope_ratio_max > kEnvelopeFactor; }
    bool divergence_flag() const { return div_residual_max > kDivergenceTolerance; }
    bool pressure_flag() const { return p_periodicity_max > kPressurePeriodicityTolerance; }
    bool c1_growth_flag() const { return c1_ratio_max >= kC1GrowthFactor; }
    bool parity_flag() const {
        return taylor_growth || parity_misfit_max > kTaylorGrowthFactor * std::max(parity_misfit_initial, kTaylorFloor);
    }

    bool any_flag(ProblemKind k) const {
        return energy_drift_flag(k) || speed_drift_flag(k) || c_bound_flag() || envelope_flag() ||
               divergence_flag() || pressure_flag() || c1_growth_flag() || parity_flag() || failure.has_value();
    }
};

/// Folds per-step diagnostics into the running conservation summary.
class ConservationTracker {
public:
    explicit ConservationTracker(ReportContext ctx) : ctx_(ctx) {}

    void observe(const StepDiagnostics& d) {
        auto& s = summary_;
        if (s.steps == 0) {
            s.energy_initial = d.energy;
            m0_ = d.max_vertical_sq;
            s.c1_initial = d.c1.total;
            if (ctx_.kind == ProblemKind::Circle && ctx_.h0_sq_volume_integral > 0.0) {
                s.has_c_bound = true;
                s.c_bound = 2.0 * d.energy / ctx_.h0_sq_volume_integral;
            }
            if (d.taylor) {
                alpha0_ = d.taylor->alpha;
                beta0_ = d.taylor->beta;
                s.parity_misfit_initial = d.taylor->parity_misfit;
            }
        }
        ++s.steps;
        const double e0 = s.energy_initial;
        s.energy_drift_max =
            std::max(s.energy_drift_max, e0 > 0.0 ? std::abs(d.energy - e0) / e0 : std::abs(d.energy - e0));
        s.speed_drift_max = std::max(s.speed_drift_max, d.speed_drift);
        s.speed_sq_drift_max = std::max(s.speed_sq_drift_max, d.speed_sq_drift);
        s.abs_c_max = std::max(s.abs_c_max, std::abs(d.c));
        if (s.has_c_bound) {
            s.c_sq_max = std::max(s.c_sq_max, d.c * d.c);
            s.c_bound_margin = std::min(s.c_bound_margin, s.c_bound - d.c * d.c);
        }
        const double K = s.abs_c_max * ctx_.max_h0_shape_norm;
        double ratio = 0.0;
        if (m0_ > 0.0)
            ratio = d.max_vertical_sq / (m0_ * std::exp(2.0 * d.t * K));
        else if (d.max_vertical_sq > 0.0)
            ratio = std::numeric_limits<double>::infinity();
        s.envelope_ratio_max = std::max(s.envelope_ratio_max, ratio);
        s.c1_max = std::max(s.c1_max, d.c1.total);
        s.c1_ratio_max = std::max(s.c1_ratio_max, s.c1_initial > 0.0 ? d.c1.total / s.c1_initial
                                                  : (d.c1.total > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
        s.c1_speed_max = std::max(s.c1_speed_max, d.c1.speed);
        s.c1_gradient_max = std::max(s.c1_gradient_max, d.c1.gradient);
        s.c1_shape_max = std::max(s.c1_shape_max, d.c1.shape);
        s.div_residual_max = std::max(s.div_residual_max, d.div_residual);
        s.p_periodicity_max = std::max(s.p_periodicity_max, d.p_periodicity);
        if (d.taylor) {
            s.parity_misfit_max = std::max(s.parity_misfit_max, d.taylor->parity_misfit);
            for (std::size_t i = 0; i < alpha0_.size(); ++i) {
                if (std::abs(d.taylor->alpha[i]) > kTaylorGrowthFactor * std::max(std::abs(alpha0_[i]), kTaylorFloor) ||
                    std::abs(d.taylor->beta[i]) > kTaylorGrowthFactor * std::max(std::abs(beta0_[i]), kTaylorFloor))
                    s.taylor_growth = true;
            }
        }
    }

    void fail(FailureRecord f) { summary_.failure = std::move(f); }

    const ConservationSummary& summary() const { return summary_; }
    const ReportContext& context() const { return ctx_; }

private:
    ReportContext ctx_;
    ConservationSummary summary_;
    double m0_ = 0.0;
    std::vector<double> alpha0_, beta0_;
};

/// Recorded series plus the summary over every observed step.
struct RunReport {
    ReportContext context;
    int coefficients = 0;
    bool has_taylor = false;
    std::vector<StepDiagnostics> series;
    ConservationSummary summary;
};

/// Summary recomputed from a recorded series alone.
inline ConservationSummary conservation_report(const RunReport& report) {
    ConservationTracker tracker(report.context);
    for (const auto& d : report.series) tracker.observe(d);
    if (report.summary.failure) tracker.fail(*report.summary.failure);
    return tracker.summary();
}

} // namespace coho_euler
