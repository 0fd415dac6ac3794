#pragma once

// Cohomogeneity-one metric data g = dr^2 + g_r: orbit spaces, metric profile
// families, shape operator, mean curvature, the divergence-free horizontal
// profile h0, and profile validation.

#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "homogeneous.hpp"
#include "lie_algebra.hpp"
#include "numerics.hpp"
#include "spline.hpp"

namespace coho_euler {

enum class OrbitKind { Interval, Circle };
enum class EndpointKind { Singular, Boundary };

struct OrbitSpace {
    OrbitKind kind = OrbitKind::Circle;
    double length = 1.0;
    std::array<EndpointKind, 2> endpoints{EndpointKind::Singular, EndpointKind::Singular};

    static OrbitSpace circle(double L) { return {OrbitKind::Circle, L, {}}; }
    static OrbitSpace interval(double L, EndpointKind left, EndpointKind right) {
        return {OrbitKind::Interval, L, {left, right}};
    }

    bool is_circle() const { return kind == OrbitKind::Circle; }
    bool singular(int side) const { return kind == OrbitKind::Interval && endpoints[side] == EndpointKind::Singular; }
    double endpoint(int side) const { return side == 0 ? 0.0 : length; }
};

/// Truncated Fourier series a0 + sum_k a_k cos(2 pi k r/L) + b_k sin(2 pi k r/L).
struct FourierSeries {
    double a0 = 0.0;
    std::vector<double> a; // a[k-1] multiplies cos(2 pi k r / L)
    std::vector<double> b;

    /// `order`-th derivative in r.
    double eval(double r, double L, int order = 0) const {
        double s = order == 0 ? a0 : 0.0;
        const std::size_t modes = std::max(a.size(), b.size());
        for (std::size_t k = 1; k <= modes; ++k) {
            const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / L;
            const double ak = k <= a.size() ? a[k - 1] : 0.0;
            const double bk = k <= b.size() ? b[k - 1] : 0.0;
            const double phase = w * r + 0.5 * std::numbers::pi * order;
            s += std::pow(w, order) * (ak * std::cos(phase) + bk * std::sin(phase));
        }
        return s;
    }
};

enum class ProfileFamily { RoundS3T2, WarpedTorus, BergerCircle, Tabulated };

inline const char* family_name(ProfileFamily f) {
    switch (f) {
    case ProfileFamily::RoundS3T2: return "round_s3_t2";
    case ProfileFamily::WarpedTorus: return "warped_torus";
    case ProfileFamily::BergerCircle: return "berger_circle";
    case ProfileFamily::Tabulated: return "tabulated";
    }
    return "unknown";
}

/// Samples of gram(r) and gram'(r) supplied by the user.
struct TabulatedData {
    std::vector<double> r;
    std::vector<Mat> gram;
    std::vector<Mat> gram_prime;
};

namespace detail {

struct TabulatedSplines {
    TabulatedData data;
    int n = 0;
    std::vector<CubicSpline> gram, gram_prime; // upper triangle, row-major

    TabulatedSplines(TabulatedData d, bool periodic) : data(std::move(d)) {
        if (data.r.size() < 4) throw InputError("tabulated profile needs at least four samples");
        if (data.gram.size() != data.r.size() || data.gram_prime.size() != data.r.size())
            throw StructuralError("tabulated profile: sample counts disagree");
        n = static_cast<int>(data.gram.front().rows());
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                std::vector<double> g, gp;
                for (std::size_t s = 0; s < data.r.size(); ++s) {
                    g.push_back(data.gram[s](i, j));
                    gp.push_back(data.gram_prime[s](i, j));
                }
                gram.emplace_back(data.r, g, periodic);
                gram_prime.emplace_back(data.r, gp, periodic);
            }
    }

    std::pair<Mat, Mat> eval(double r) const {
        Mat g(n, n), gp(n, n);
        std::size_t idx = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j, ++idx) {
                g(i, j) = g(j, i) = gram[idx](r);
                gp(i, j) = gp(j, i) = gram_prime[idx](r);
            }
        return {g, gp};
    }
};

} // namespace detail

/// One-parameter family g_r of invariant orbit metrics on m, with its exact
/// r-derivative, over an orbit space.
struct MetricProfile {
    ReductiveSplit split;
    OrbitSpace orbit_space;
    ProfileFamily family = ProfileFamily::RoundS3T2;
    std::vector<FourierSeries> log_diagonal; // Fourier families: ln gram_ii(r)
    std::shared_ptr<const detail::TabulatedSplines> table;

    double length() const { return orbit_space.length; }
};

/// The Frame identifies vertical coefficient slots with the m0 basis; it is
/// r-independent and has trivial monodromy.
struct Frame {
    Mat m0_coords;
    int coefficient_count() const { return static_cast<int>(m0_coords.cols()); }
};

inline Frame frame_of(const MetricProfile& p) { return {p.split.m0_coords}; }

// ---------------------------------------------------------------------------
// Profile construction

/// S^3 with the round metric under the T^2 action: g_r = diag(cos^2 r, sin^2 r)
/// on (0, pi/2), both endpoints singular.
inline MetricProfile round_s3_t2_profile() {
    MetricProfile p;
    p.split = reductive_split(abelian_algebra(2), {});
    p.orbit_space = OrbitSpace::interval(std::numbers::pi / 2.0, EndpointKind::Singular, EndpointKind::Singular);
    p.family = ProfileFamily::RoundS3T2;
    return p;
}

/// Diagonal profile with gram_ii(r) = exp(series_i(r)).
inline MetricProfile fourier_profile(ReductiveSplit split, OrbitSpace orbit, ProfileFamily family,
                                     std::vector<FourierSeries> log_diagonal) {
    if (family != ProfileFamily::WarpedTorus && family != ProfileFamily::BergerCircle)
        throw InputError("fourier_profile: family must be warped_torus or berger_circle");
    if (static_cast<int>(log_diagonal.size()) != split.dim_m())
        throw StructuralError("fourier_profile: need one series per m basis vector (" +
                              std::to_string(split.dim_m()) + ")");
    if (family == ProfileFamily::WarpedTorus && !split.is_abelian())
        throw ValidationError("warped_torus profiles require an abelian algebra");
    if (!(orbit.length > 0.0)) throw InputError("orbit space length must be positive");
    MetricProfile p;
    p.split = std::move(split);
    p.orbit_space = orbit;
    p.family = family;
    p.log_diagonal = std::move(log_diagonal);
    return p;
}

inline MetricProfile tabulated_profile(ReductiveSplit split, OrbitSpace orbit, TabulatedData data) {
    const int n = split.dim_m();
    for (std::size_t s = 0; s < data.gram.size(); ++s)
        if (data.gram[s].rows() != n || data.gram[s].cols() != n || data.gram_prime[s].rows() != n ||
            data.gram_prime[s].cols() != n)
            throw StructuralError("tabulated profile: sample matrices do not match dim m");
    if (!data.r.empty()) {
        if (std::abs(data.r.front()) > 1e-12 || std::abs(data.r.back() - orbit.length) > 1e-12 * orbit.length)
            throw InputError("tabulated profile: samples must span [0, L]");
    }
    MetricProfile p;
    p.split = std::move(split);
    p.orbit_space = orbit;
    p.family = ProfileFamily::Tabulated;
    p.table = std::make_shared<detail::TabulatedSplines>(std::move(data), orbit.is_circle());
    return p;
}

/// Reads r, gram upper triangle (row-major), gram' upper triangle. The first
/// line is a header and is skipped.
inline TabulatedData load_tabulated_csv(const std::string& path, int dim_m) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open tabulated profile " + path);
    const int tri = dim_m * (dim_m + 1) / 2;
    const std::size_t cols = 1 + 2 * static_cast<std::size_t>(tri);
    TabulatedData data;
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file, header row required");
    {
        std::istringstream hs(line);
        std::string first;
        std::getline(hs, first, ',');
        char* end = nullptr;
        std::strtod(first.c_str(), &end);
        if (end != first.c_str()) throw InputError(path + ": header row required");
    }
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> vals;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw InputError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
            }
        }
        if (vals.size() != cols)
            throw InputError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                             " columns, got " + std::to_string(vals.size()));
        Mat g(dim_m, dim_m), gp(dim_m, dim_m);
        std::size_t idx = 1;
        for (int i = 0; i < dim_m; ++i)
            for (int j = i; j < dim_m; ++j, ++idx) g(i, j) = g(j, i) = vals[idx];
        for (int i = 0; i < dim_m; ++i)
            for (int j = i; j < dim_m; ++j, ++idx) gp(i, j) = gp(j, i) = vals[idx];
        data.r.push_back(vals[0]);
        data.gram.push_back(g);
        data.gram_prime.push_back(gp);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Evaluation

struct MetricSample {
    Mat gram;
    Mat gram_prime;
};

namespace detail {

inline MetricSample eval_unchecked(const MetricProfile& p, double r) {
    switch (p.family) {
    case ProfileFamily::RoundS3T2: {
        const double c = std::cos(r), s = std::sin(r);
        Mat g = Mat::Zero(2, 2), gp = Mat::Zero(2, 2);
        g(0, 0) = c * c;
        g(1, 1) = s * s;
        gp(0, 0) = -2.0 * s * c;
        gp(1, 1) = 2.0 * s * c;
        return {g, gp};
    }
    case ProfileFamily::WarpedTorus:
    case ProfileFamily::BergerCircle: {
        const int n = static_cast<int>(p.log_diagonal.size());
        Mat g = Mat::Zero(n, n), gp = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            const double e = std::exp(p.log_diagonal[i].eval(r, p.length()));
            g(i, i) = e;
            gp(i, i) = p.log_diagonal[i].eval(r, p.length(), 1) * e;
        }
        return {g, gp};
    }
    case ProfileFamily::Tabulated: {
        auto [g, gp] = p.table->eval(r);
        return {g, gp};
    }
    }
    throw InputError("unknown profile family");
}

} // namespace detail

/// Reduces r into the orbit-space domain, rejecting singular endpoints.
inline double reduce_coordinate(const OrbitSpace& os, double r) {
    if (!std::isfinite(r)) throw DomainError("r is not finite");
    if (os.is_circle()) {
        double x = std::fmod(r, os.length);
        if (x < 0.0) x += os.length;
        return x;
    }
    if (r < 0.0 || r > os.length)
        throw DomainError("r = " + format_double(r) + " outside [0, " + format_double(os.length) + "]");
    if ((r == 0.0 && os.singular(0)) || (r == os.length && os.singular(1)))
        throw DomainError("r = " + format_double(r) + " is a singular endpoint");
    return r;
}

inline MetricSample metric_at(const MetricProfile& p, double r) {
    return detail::eval_unchecked(p, reduce_coordinate(p.orbit_space, r));
}

/// Shape operator on m: S_r = -1/2 gram^-1 gram'.
inline Mat shape_operator_m(const MetricSample& s) { return -0.5 * s.gram.ldlt().solve(s.gram_prime); }

/// Shape operator restricted to the m0 coefficients.
inline Mat shape_operator(const MetricProfile& p, double r) {
    const Mat S = shape_operator_m(metric_at(p, r));
    const Mat& B = p.split.m0_coords;
    return B.transpose() * S * B;
}

/// Mean curvature: trace of the shape operator on the full orbit tangent space.
inline double mean_curvature(const MetricProfile& p, double r) { return shape_operator_m(metric_at(p, r)).trace(); }

inline double relative_volume(const MetricProfile& p, double r) {
    return std::sqrt(metric_at(p, r).gram.determinant());
}

inline Mat restrict_to_m0(const MetricProfile& p, const Mat& m_matrix) {
    const Mat& B = p.split.m0_coords;
    return B.transpose() * m_matrix * B;
}

inline constexpr double kPeriodicityTolerance = 1e-10;

inline double periodicity_residual(const MetricProfile& p) {
    const auto a = detail::eval_unchecked(p, 0.0);
    const auto b = detail::eval_unchecked(p, p.length());
    return std::max((a.gram - b.gram).cwiseAbs().maxCoeff(), (a.gram_prime - b.gram_prime).cwiseAbs().maxCoeff());
}

/// Divergence-free horizontal amplitude: h0(r) = vol(L/2) / vol(r), the
/// solution of h0' = H h0 with h0(L/2) = 1.
inline double h0_at(const MetricProfile& p, double r) {
    if (!p.orbit_space.is_circle())
        throw UnsupportedError("h0 is only defined on circle orbit spaces (the interval case forces h = 0)");
    return relative_volume(p, 0.5 * p.length()) / relative_volume(p, r);
}

inline std::vector<double> h0_profile(const MetricProfile& p, const std::vector<double>& grid) {
    if (!p.orbit_space.is_circle())
        throw UnsupportedError("h0_profile requires a circle orbit space (the interval case forces h = 0)");
    if (periodicity_residual(p) > kPeriodicityTolerance)
        throw ValidationError("h0_profile: metric profile is not periodic");
    const double mid = relative_volume(p, 0.5 * p.length());
    std::vector<double> out;
    out.reserve(grid.size());
    for (double r : grid) out.push_back(mid / relative_volume(p, r));
    return out;
}

// ---------------------------------------------------------------------------
// Validation

inline constexpr int kProbeCount = 512;
inline constexpr double kCollapseTolerance = 1e-6;
inline constexpr double kTraceIdentityStep = 1e-5;
inline constexpr double kTraceIdentityTolerance = 1e-6;

/// Probe points: uniform on the circle, interior of the interval.
inline std::vector<double> probe_grid(const OrbitSpace& os, int count = kProbeCount) {
    std::vector<double> r;
    for (int k = 0; k < count; ++k)
        r.push_back(os.is_circle() ? os.length * k / count : os.length * (k + 1) / (count + 1));
    return r;
}

/// Limit of the relative volume at an interval endpoint.
inline double endpoint_volume(const MetricProfile& p, int side) {
    const double r = p.orbit_space.endpoint(side);
    const auto s = detail::eval_unchecked(p, r);
    return std::sqrt(std::max(0.0, s.gram.determinant()));
}

/// Max over probes of |trace(S_r) + d/dr ln vol(r)|, the derivative by
/// fourth-order central differences with step 1e-5. `half_factor` evaluates
/// the alternative convention H = -1/2 d/dr ln vol instead.
inline double trace_identity_residual(const MetricProfile& p, int probes = kProbeCount, bool half_factor = false) {
    double worst = 0.0;
    auto lnvol = [&](double x) { return std::log(relative_volume(p, x)); };
    for (double r : probe_grid(p.orbit_space, probes)) {
        const double d = central_d1(lnvol, r, kTraceIdentityStep);
        const double H = half_factor ? -0.5 * d : mean_curvature(p, r);
        worst = std::max(worst, std::abs(half_factor ? mean_curvature(p, r) - H : H + d));
    }
    return worst;
}

inline ValidationReport validate_profile(const MetricProfile& p) {
    ValidationReport report;
    const auto& os = p.orbit_space;

    // SPD on the probe grid, plus every supplied sample away from singular ends.
    std::string bad;
    double bad_r = 0.0;
    bool spd = true;
    for (double r : probe_grid(os)) {
        if (!is_spd(detail::eval_unchecked(p, r).gram)) {
            spd = false;
            bad_r = r;
            break;
        }
    }
    if (spd && p.table) {
        const auto& d = p.table->data;
        for (std::size_t s = 0; s < d.r.size(); ++s) {
            const bool at_singular = (s == 0 && os.singular(0)) || (s + 1 == d.r.size() && os.singular(1));
            if (at_singular) continue;
            if (!is_spd(d.gram[s])) {
                spd = false;
                bad_r = d.r[s];
                break;
            }
        }
    }
    if (!spd) bad = "gram not SPD at r = " + format_double(bad_r);
    report.add_flag("spd", spd, bad);

    if (!p.split.h_basis.empty()) {
        double inv = 0.0;
        for (double r : probe_grid(os, 64)) {
            const auto s = detail::eval_unchecked(p, r);
            for (const auto& x : p.split.h_basis) {
                const Mat A = p.split.ad_on_m(x);
                inv = std::max(inv, (A.transpose() * s.gram + s.gram * A).cwiseAbs().maxCoeff());
            }
        }
        report.add("ad_h_invariance", inv, kMetricInvarianceTolerance);
    }

    if (os.is_circle()) {
        report.add("periodicity", periodicity_residual(p), kPeriodicityTolerance);
    } else {
        for (int side = 0; side < 2; ++side) {
            if (!os.singular(side)) continue;
            const std::string tag = side == 0 ? "left" : "right";
            const double v_end = endpoint_volume(p, side);
            // Monotone decay over the probes nearest the endpoint.
            auto probes = probe_grid(os);
            bool monotone = true;
            double prev = -1.0;
            for (int k = 0; k < 8; ++k) {
                const double r = side == 0 ? probes[k] : probes[probes.size() - 1 - k];
                const double v = relative_volume(p, r);
                if (prev >= 0.0 && !(v > prev)) monotone = false;
                prev = v;
            }
            report.add("volume_collapse_" + tag, v_end, kCollapseTolerance,
                       "endpoint volume " + format_double(v_end) + (monotone ? "" : "; not monotone near endpoint"));
            if (!monotone) report.add_flag("volume_monotone_" + tag, false);

            if (p.family == ProfileFamily::RoundS3T2) {
                // Smooth closing: every entry even in the distance rho to the
                // endpoint, collapsing entries ~ rho^2.
                const double delta = 1e-3;
                const double sign = side == 0 ? 1.0 : -1.0;
                auto at = [&](double rho) { return detail::eval_unchecked(p, os.endpoint(side) + sign * rho); };
                const auto s1 = at(delta), s2 = at(0.5 * delta);
                const auto s0 = detail::eval_unchecked(p, os.endpoint(side));
                double odd = 0.0, slope = 0.0;
                for (int i = 0; i < s1.gram.rows(); ++i) {
                    const double d1 = sign * s1.gram_prime(i, i), d2 = sign * s2.gram_prime(i, i);
                    odd = std::max(odd, std::abs(d1 - 2.0 * d2));
                    if (std::abs(s0.gram(i, i)) < kCollapseTolerance)
                        slope = std::max(slope, std::abs(d1 / (2.0 * delta) - 1.0));
                }
                report.add("endpoint_parity_" + tag, std::max(odd, slope), 1e-5);
            }
        }
    }

    if (spd) {
        const double tr = trace_identity_residual(p, 128);
        if (p.family == ProfileFamily::Tabulated)
            report.add_info("trace_identity", tr, "tabulated derivatives are user supplied");
        else
            report.add("trace_identity", tr, kTraceIdentityTolerance);
        report.add_info("half_factor_convention_residual", trace_identity_residual(p, 128, true),
                        "residual if H were -1/2 d/dr ln vol");
    }
    return report;
}

/// Reconstructed velocity at r: horizontal amplitude h, vertical coefficients
/// and pointwise speed squared.
struct PointVelocity {
    double h = 0.0;
    Vec vertical;
    double speed_sq = 0.0;
};

inline PointVelocity reconstruct_velocity(double c, const Vec& v, const MetricProfile& p, double r) {
    if (v.size() != p.split.dim_m0()) throw InputError("reconstruct_velocity: wrong number of coefficients");
    const auto s = metric_at(p, r);
    PointVelocity out;
    out.h = p.orbit_space.is_circle() ? c * h0_at(p, r) : 0.0;
    out.vertical = v;
    const Mat g0 = restrict_to_m0(p, s.gram);
    out.speed_sq = out.h * out.h + v.dot(g0 * v);
    return out;
}

} // namespace coho_euler
