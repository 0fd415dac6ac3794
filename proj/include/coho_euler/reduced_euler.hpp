#pragma once

// Reduced Euler dynamics for G-invariant flows:
//   homogeneous  du/dt = -nabla_u u on m0,
//   interval     dv/dt = -nabla^r_v v at each node (h = 0),
//   circle       u = c h0(r) d_r + v, coupled transport-reaction system with
//                the pressure solvability condition closing dc/dt.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "homogeneous.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "profile.hpp"

namespace coho_euler {

enum class ProblemKind { Homogeneous, Interval, Circle };

inline const char* kind_name(ProblemKind k) {
    switch (k) {
    case ProblemKind::Homogeneous: return "homogeneous";
    case ProblemKind::Interval: return "interval";
    case ProblemKind::Circle: return "circle";
    }
    return "unknown";
}

/// Spatial grid. Circle: N uniform points on [0, L). Interval: the unknown
/// nodes of a uniform closed grid, singular endpoints excluded and boundary
/// endpoints included. Homogeneous: a single node at r = 0.
struct Grid {
    std::vector<double> r;
    double dr = 0.0;
    bool periodic = false;

    std::size_t size() const { return r.size(); }
};

inline Grid make_grid(const OrbitSpace& os, int N) {
    Grid g;
    if (os.is_circle()) {
        if (N < 16 || N % 2 != 0) throw InputError("circle grids need N >= 16 and even, got " + std::to_string(N));
        g.periodic = true;
        g.dr = os.length / N;
        for (int j = 0; j < N; ++j) g.r.push_back(os.length * j / N);
        return g;
    }
    if (N < 6) throw InputError("interval grids need at least 6 nodes, got " + std::to_string(N));
    const int singular = (os.singular(0) ? 1 : 0) + (os.singular(1) ? 1 : 0);
    const int intervals = N - 1 + singular;
    g.dr = os.length / intervals;
    const int first = os.singular(0) ? 1 : 0;
    for (int j = 0; j < N; ++j) g.r.push_back(os.length * (first + j) / intervals);
    return g;
}

inline Grid homogeneous_grid() {
    Grid g;
    g.r = {0.0};
    return g;
}

using CoeffMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Reduced velocity: horizontal amplitude c (circle only) and the vertical
/// coefficients v(node, i) on the grid.
struct ReducedState {
    double t = 0.0;
    double c = 0.0;
    CoeffMatrix v;
    std::shared_ptr<const Grid> grid;

    std::size_t nodes() const { return static_cast<std::size_t>(v.rows()); }
    int coefficients() const { return static_cast<int>(v.cols()); }

    bool finite() const { return std::isfinite(t) && std::isfinite(c) && v.allFinite(); }
};

/// Time derivative of a reduced state.
struct StateRate {
    double dc = 0.0;
    CoeffMatrix dv;
};

struct SolverConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    double cfl_guard = 0.5;
};

inline constexpr double kCflFloor = 1e-12;
inline constexpr double kPressurePeriodicityTolerance = 1e-8;

/// Geometry frozen at one node: everything the right-hand side needs.
struct NodeGeometry {
    double r = 0.0;
    Mat gram;        // on m0
    Mat shape;       // S_r on m0
    Mat gram_shape;  // gram * S_r, so q = v^T gram_shape v
    double shape_norm = 0.0; // gram-operator norm of S_r on m0
    double mean_curvature = 0.0;
    double volume = 1.0;
    double h0 = 0.0;
    double h0_prime = 0.0;
    double h0_prime_fd = 0.0; // finite-difference witness for the divergence check
    ConnectionTable connection; // on m0
};

/// Problem description consumed by the integrator.
struct Problem {
    ProblemKind kind = ProblemKind::Homogeneous;
    std::optional<InvariantMetric> metric;  // homogeneous
    std::optional<MetricProfile> profile;   // interval / circle
    double dcdt_offset = 0.0;               // test-only fault injection

    const ReductiveSplit& split() const { return metric ? metric->split : profile->split; }
    int coefficients() const { return split().dim_m0(); }
};

inline Problem homogeneous_problem(InvariantMetric metric) {
    Problem p;
    p.kind = ProblemKind::Homogeneous;
    p.metric = std::move(metric);
    return p;
}

inline Problem profile_problem(MetricProfile profile) {
    Problem p;
    p.kind = profile.orbit_space.is_circle() ? ProblemKind::Circle : ProblemKind::Interval;
    p.profile = std::move(profile);
    return p;
}

namespace detail {

inline ConnectionTable m0_connection(const ReductiveSplit& split, const Mat& gram_m) {
    if (split.dim_m0() == 0) return ConnectionTable{}.restricted(Mat(split.dim_m(), 0));
    return ConnectionTable(split, gram_m).restricted(split.m0_coords);
}

inline double gram_operator_norm(const Mat& gram, const Mat& S) {
    if (S.rows() == 0) return 0.0;
    // S is gram-symmetric, so its gram-operator norm is its spectral radius.
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(gram * S, gram, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace detail

/// Precomputed per-node geometry plus the right-hand sides.
class ReducedDynamics {
public:
    ReducedDynamics(const Problem& problem, Grid grid) : problem_(problem), grid_(std::make_shared<Grid>(std::move(grid))) {
        const auto& split = problem_.split();
        n0_ = split.dim_m0();
        if (n0_ > 0 && !connection_supported(split))
            throw UnsupportedError("invariant connection unsupported: isotropy is nontrivial and m0 != m");
        if (problem_.kind == ProblemKind::Homogeneous) {
            const auto& metric = *problem_.metric;
            NodeGeometry g;
            g.gram = split.m0_coords.transpose() * metric.gram * split.m0_coords;
            g.shape = Mat::Zero(n0_, n0_);
            g.gram_shape = Mat::Zero(n0_, n0_);
            g.volume = orbit_volume(metric.gram);
            g.connection = detail::m0_connection(split, metric.gram);
            nodes_.push_back(std::move(g));
            return;
        }
        const auto& profile = *problem_.profile;
        const bool circle = problem_.kind == ProblemKind::Circle;
        const double mid_volume = circle ? relative_volume(profile, 0.5 * profile.length()) : 0.0;
        for (double r : grid_->r) {
            const auto s = metric_at(profile, r);
            NodeGeometry g;
            g.r = r;
            const Mat S = shape_operator_m(s);
            g.gram = restrict_to_m0(profile, s.gram);
            g.shape = restrict_to_m0(profile, S);
            g.gram_shape = g.gram * g.shape;
            g.shape_norm = detail::gram_operator_norm(g.gram, g.shape);
            g.mean_curvature = S.trace();
            g.volume = std::sqrt(s.gram.determinant());
            if (circle) {
                g.h0 = mid_volume / g.volume;
                g.h0_prime = g.mean_curvature * g.h0;
                const double step = std::min(grid_->dr, 1e-3);
                g.h0_prime_fd = central_d1([&](double x) { return mid_volume / relative_volume(profile, x); }, r, step);
            }
            g.connection = detail::m0_connection(split, s.gram);
            nodes_.push_back(std::move(g));
        }
        if (circle) {
            weights_ = periodic_simpson_weights(grid_->size(), grid_->dr);
            std::vector<double> h0s;
            for (const auto& g : nodes_) h0s.push_back(g.h0);
            h0_integral_ = weighted_sum(weights_, h0s);
        }
    }

    const Problem& problem() const { return problem_; }
    ProblemKind kind() const { return problem_.kind; }
    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    const NodeGeometry& node(std::size_t j) const { return nodes_[j]; }
    std::size_t nodes() const { return nodes_.size(); }
    int coefficients() const { return n0_; }
    const std::vector<double>& circle_weights() const { return weights_; }
    double h0_integral() const { return h0_integral_; }

    double max_h0() const {
        double m = 0.0;
        for (const auto& g : nodes_) m = std::max(m, std::abs(g.h0));
        return m;
    }

    /// max_r h0(r) * ||S_r||, so that max_r ||h S_r|| = |c| * this.
    double max_h0_shape_norm() const {
        double m = 0.0;
        for (const auto& g : nodes_) m = std::max(m, std::abs(g.h0) * g.shape_norm);
        return m;
    }

    ReducedState make_state(double c, CoeffMatrix v, double t = 0.0) const {
        if (v.rows() != static_cast<Eigen::Index>(nodes_.size()) || v.cols() != n0_)
            throw InputError("state shape does not match grid x coefficients");
        ReducedState s;
        s.t = t;
        s.c = problem_.kind == ProblemKind::Circle ? c : 0.0;
        s.v = std::move(v);
        s.grid = grid_;
        return s;
    }

    /// q_j = g_r(S_r v_j, v_j).
    double q_at(const ReducedState& s, std::size_t j) const {
        const auto& g = nodes_[j];
        double q = 0.0;
        for (int a = 0; a < n0_; ++a)
            for (int b = 0; b < n0_; ++b) q += s.v(j, a) * g.gram_shape(a, b) * s.v(j, b);
        return q;
    }

    /// Solvability condition for a periodic pressure: dc/dt = -sum(w q)/sum(w h0).
    double dcdt(const ReducedState& s) const {
        if (problem_.kind != ProblemKind::Circle) return 0.0;
        std::vector<double> q(nodes_.size());
        for (std::size_t j = 0; j < nodes_.size(); ++j) q[j] = q_at(s, j);
        return -weighted_sum(weights_, q) / h0_integral_ + problem_.dcdt_offset;
    }

    void rhs(const ReducedState& s, StateRate& out, WorkerPool* pool = nullptr) const {
        out.dv.resize(s.v.rows(), s.v.cols());
        const bool circle = problem_.kind == ProblemKind::Circle;
        auto body = [&](std::size_t begin, std::size_t end) {
            const std::span<const double> flat(s.v.data(), static_cast<std::size_t>(s.v.size()));
            for (std::size_t j = begin; j < end; ++j) {
                const auto& g = nodes_[j];
                const double h = circle ? s.c * g.h0 : 0.0;
                for (int k = 0; k < n0_; ++k) {
                    double acc = 0.0;
                    for (int a = 0; a < n0_; ++a) {
                        const double va = s.v(j, a);
                        if (va == 0.0) continue;
                        for (int b = 0; b < n0_; ++b) acc += va * s.v(j, b) * g.connection.gamma(a, b, k);
                    }
                    double dv = -acc;
                    if (circle && h != 0.0) {
                        double sv = 0.0;
                        for (int a = 0; a < n0_; ++a) sv += g.shape(k, a) * s.v(j, a);
                        const double dvr = periodic_d1(flat, j, grid_->dr, static_cast<std::size_t>(n0_),
                                                       static_cast<std::size_t>(k));
                        dv += 2.0 * h * sv - h * dvr;
                    }
                    out.dv(j, k) = dv;
                }
            }
        };
        if (pool != nullptr)
            pool->parallel_for(nodes_.size(), body);
        else
            body(0, nodes_.size());
        out.dc = circle ? dcdt(s) : 0.0;
    }

    /// Throws when dt exceeds the transport CFL bound on the circle.
    void check_cfl(const ReducedState& s, const SolverConfig& cfg) const {
        if (problem_.kind != ProblemKind::Circle) return;
        const double hmax = std::abs(s.c) * max_h0();
        const double limit = cfg.cfl_guard * grid_->dr / std::max(hmax, kCflFloor);
        if (cfg.dt > limit)
            throw NumericalFailure("cfl",
                                   "CFL violation at t = " + format_double(s.t) + ": dt = " + format_double(cfg.dt) +
                                       " exceeds " + format_double(limit),
                                   s.t);
    }

private:
    Problem problem_;
    std::shared_ptr<Grid> grid_;
    std::vector<NodeGeometry> nodes_;
    std::vector<double> weights_;
    double h0_integral_ = 0.0;
    int n0_ = 0;
};

// ---------------------------------------------------------------------------
// Single-call operations

inline Vec homogeneous_rhs(const InvariantMetric& metric, const Vec& X) {
    const auto& split = metric.split;
    if (X.size() != split.dim_m0()) throw InputError("homogeneous_rhs: X must have dim m0 entries");
    if (X.size() > 0 && !connection_supported(split))
        throw UnsupportedError("invariant connection unsupported: isotropy is nontrivial and m0 != m");
    return split.m0_coords.transpose() * euler_arnold_rhs(metric, split.m0_coords * X);
}

inline CoeffMatrix interval_rhs(const ReducedState& state, const MetricProfile& profile) {
    if (profile.orbit_space.is_circle()) throw InputError("interval_rhs: profile has a circle orbit space");
    ReducedDynamics dyn(profile_problem(profile), *state.grid);
    StateRate out;
    dyn.rhs(state, out);
    return out.dv;
}

inline StateRate circle_rhs(const ReducedState& state, const MetricProfile& profile, double dcdt_offset = 0.0) {
    if (!profile.orbit_space.is_circle()) throw InputError("circle_rhs: profile has an interval orbit space");
    auto problem = profile_problem(profile);
    problem.dcdt_offset = dcdt_offset;
    ReducedDynamics dyn(problem, *state.grid);
    StateRate out;
    dyn.rhs(state, out);
    return out;
}

/// Pressure on the grid with gauge p(r_0) = 0.
struct PressureField {
    std::vector<double> p;
    double periodicity_residual = 0.0; // circle only: |int p'| / int |p'|
};

/// Solves the horizontal momentum equation for p' and integrates it in r.
/// Does not throw on a broken periodicity watchdog; see pressure_reconstruct.
inline PressureField pressure_field(const ReducedState& s, const ReducedDynamics& dyn, double dcdt) {
    PressureField out;
    if (dyn.kind() == ProblemKind::Homogeneous) {
        out.p.assign(s.nodes(), 0.0);
        return out;
    }
    const bool circle = dyn.kind() == ProblemKind::Circle;
    std::vector<double> dp(s.nodes());
    for (std::size_t j = 0; j < s.nodes(); ++j) {
        const auto& g = dyn.node(j);
        const double q = dyn.q_at(s, j);
        dp[j] = circle ? -dcdt * g.h0 - s.c * s.c * g.h0 * g.h0_prime - q : -q;
    }
    auto F = cumulative_integral(dp, dyn.grid().dr, circle);
    if (circle) {
        std::vector<double> absdp(dp.size());
        for (std::size_t j = 0; j < dp.size(); ++j) absdp[j] = std::abs(dp[j]);
        const double scale = weighted_sum(dyn.circle_weights(), absdp);
        const double loop = F.back();
        out.periodicity_residual = scale > 0.0 ? std::abs(loop) / scale : std::abs(loop);
        F.pop_back();
    }
    out.p = std::move(F);
    return out;
}

inline PressureField pressure_reconstruct(const ReducedState& s, const ReducedDynamics& dyn, double dcdt) {
    auto out = pressure_field(s, dyn, dcdt);
    if (out.periodicity_residual > kPressurePeriodicityTolerance)
        throw NumericalFailure("pressure_periodicity",
                               "pressure is not periodic (relative residual " + format_double(out.periodicity_residual) +
                                   "); dc/dt is inconsistent",
                               s.t);
    return out;
}

inline PressureField pressure_reconstruct(const ReducedState& s, const MetricProfile& profile, double dcdt) {
    ReducedDynamics dyn(profile_problem(profile), *s.grid);
    return pressure_reconstruct(s, dyn, dcdt);
}

// ---------------------------------------------------------------------------
// Time stepping

namespace detail {

inline void axpy_state(ReducedState& out, const ReducedState& base, double a, const StateRate& k) {
    out.c = base.c + a * k.dc;
    out.v = base.v + a * k.dv;
}

inline void check_stage(const ReducedState& s, const StateRate& k, int stage) {
    if (!std::isfinite(k.dc) || !k.dv.allFinite() || !s.finite())
        throw NumericalFailure("non_finite", "non-finite value in RK4 stage " + std::to_string(stage) +
                                                 " at t = " + format_double(s.t), s.t, stage);
}

} // namespace detail

/// Classical four-stage Runge-Kutta over the full (c, v) state.
inline ReducedState step_rk4(const ReducedState& s, const ReducedDynamics& dyn, double dt, WorkerPool* pool = nullptr) {
    StateRate k1, k2, k3, k4;
    ReducedState tmp = s;
    dyn.rhs(s, k1, pool);
    detail::check_stage(s, k1, 1);
    detail::axpy_state(tmp, s, 0.5 * dt, k1);
    dyn.rhs(tmp, k2, pool);
    detail::check_stage(tmp, k2, 2);
    detail::axpy_state(tmp, s, 0.5 * dt, k2);
    dyn.rhs(tmp, k3, pool);
    detail::check_stage(tmp, k3, 3);
    detail::axpy_state(tmp, s, dt, k3);
    dyn.rhs(tmp, k4, pool);
    detail::check_stage(tmp, k4, 4);

    ReducedState out = s;
    out.c = s.c + dt / 6.0 * (k1.dc + 2.0 * k2.dc + 2.0 * k3.dc + k4.dc);
    out.v = s.v + (dt / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    out.t = s.t + dt;
    if (!out.finite())
        throw NumericalFailure("non_finite", "non-finite state after RK4 step at t = " + format_double(s.t), s.t, 5);
    return out;
}

inline ReducedState step_rk4(const ReducedState& s, const ReducedDynamics& dyn, const SolverConfig& cfg,
                             WorkerPool* pool = nullptr) {
    dyn.check_cfl(s, cfg);
    return step_rk4(s, dyn, cfg.dt, pool);
}

} // namespace coho_euler
