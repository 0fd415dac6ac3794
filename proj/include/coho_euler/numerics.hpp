#pragma once

// Small numerical kernels shared by every module: fixed-order summation,
// quadrature weights on uniform grids, finite differences, hashing.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace coho_euler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Pairwise summation with a fixed recursion tree, so the result depends only
/// on the ordering of the input and never on how the values were produced.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Composite Simpson weights for `n` uniformly spaced samples with spacing `h`
/// (closed interval, n-1 subintervals). An odd subinterval count closes with
/// the 3/8 rule over the last three subintervals.
inline std::vector<double> simpson_weights(std::size_t n, double h) {
    if (n < 2) throw InputError("simpson_weights: need at least two samples");
    std::vector<double> w(n, 0.0);
    const std::size_t m = n - 1;
    if (m == 1) {
        w[0] = w[1] = 0.5 * h;
        return w;
    }
    std::size_t simpson_end = m;
    if (m % 2 == 1) simpson_end = m - 3;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if (m % 2 == 1) {
        const std::size_t i = simpson_end;
        w[i] += 3.0 * h / 8.0;
        w[i + 1] += 9.0 * h / 8.0;
        w[i + 2] += 9.0 * h / 8.0;
        w[i + 3] += 3.0 * h / 8.0;
    }
    return w;
}

/// Composite Simpson weights on a periodic grid of `n` (even) points.
inline std::vector<double> periodic_simpson_weights(std::size_t n, double h) {
    if (n < 2 || n % 2 != 0) throw InputError("periodic_simpson_weights: n must be even");
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = (j % 2 == 0 ? 2.0 : 4.0) * h / 3.0;
    return w;
}

inline double weighted_sum(std::span<const double> w, std::span<const double> f) {
    std::vector<double> terms(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) terms[i] = w[i] * f[i];
    return pairwise_sum(terms);
}

/// Cumulative integral F(r_j) = int_{r_0}^{r_j} f on a uniform grid.
/// Even nodes accumulate composite Simpson panels; odd nodes add one cubic
/// (four-point) panel to the preceding even node. Periodic grids wrap the
/// stencils; the returned vector then has n+1 entries, the last being the
/// integral over the full period.
inline std::vector<double> cumulative_integral(std::span<const double> f, double h, bool periodic) {
    const std::size_t n = f.size();
    if (n < 4) throw InputError("cumulative_integral: need at least four samples");
    const std::size_t count = periodic ? n + 1 : n;
    auto at = [&](std::ptrdiff_t i) -> double {
        if (periodic) {
            const auto nn = static_cast<std::ptrdiff_t>(n);
            return f[static_cast<std::size_t>(((i % nn) + nn) % nn)];
        }
        return f[static_cast<std::size_t>(i)];
    };
    // Integral over [r_i, r_{i+1}] from the cubic through four neighbours.
    auto panel = [&](std::ptrdiff_t i) -> double {
        const auto last = static_cast<std::ptrdiff_t>(count) - 1;
        if (!periodic && i == 0) return h / 24.0 * (9.0 * at(0) + 19.0 * at(1) - 5.0 * at(2) + at(3));
        if (!periodic && i + 1 == last)
            return h / 24.0 * (at(i - 2) - 5.0 * at(i - 1) + 19.0 * at(i) + 9.0 * at(i + 1));
        return h / 24.0 * (-at(i - 1) + 13.0 * at(i) + 13.0 * at(i + 1) - at(i + 2));
    };
    std::vector<double> F(count, 0.0);
    for (std::size_t j = 1; j < count; ++j) {
        const auto jj = static_cast<std::ptrdiff_t>(j);
        if (j % 2 == 0)
            F[j] = F[j - 2] + h / 3.0 * (at(jj - 2) + 4.0 * at(jj - 1) + at(jj));
        else
            F[j] = F[j - 1] + panel(jj - 1);
    }
    return F;
}

/// Fourth-order central first derivative on a periodic grid.
inline double periodic_d1(std::span<const double> f, std::size_t j, double h, std::size_t stride = 1,
                          std::size_t offset = 0) {
    const std::size_t n = f.size() / stride;
    auto at = [&](std::size_t k) { return f[k * stride + offset]; };
    const std::size_t jp1 = (j + 1) % n, jp2 = (j + 2) % n;
    const std::size_t jm1 = (j + n - 1) % n, jm2 = (j + n - 2) % n;
    return (-at(jp2) + 8.0 * at(jp1) - 8.0 * at(jm1) + at(jm2)) / (12.0 * h);
}

/// Fourth-order first derivative on a bounded grid, one-sided near the ends.
inline double bounded_d1(std::span<const double> f, std::size_t j, double h, std::size_t stride = 1,
                         std::size_t offset = 0) {
    const std::size_t n = f.size() / stride;
    if (n < 5) throw InputError("bounded_d1: need at least five samples");
    auto at = [&](std::size_t k) { return f[k * stride + offset]; };
    if (j == 0) return (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
    if (j == 1) return (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h);
    if (j == n - 2)
        return (3.0 * at(n - 1) + 10.0 * at(n - 2) - 18.0 * at(n - 3) + 6.0 * at(n - 4) - at(n - 5)) / (12.0 * h);
    if (j == n - 1)
        return (25.0 * at(n - 1) - 48.0 * at(n - 2) + 36.0 * at(n - 3) - 16.0 * at(n - 4) + 3.0 * at(n - 5)) /
               (12.0 * h);
    return (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * h);
}

/// Fourth-order central difference of a callable with step `h`.
template <class F>
double central_d1(F&& f, double x, double h) {
    return (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// 64-bit FNV-1a; used for the config hash recorded in run manifests.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Round-trip formatting for CSV output.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Symmetric positive-definite test via Cholesky; also rejects non-finite input.
inline bool is_spd(const Mat& m) {
    if (!m.allFinite() || m.rows() != m.cols() || m.rows() == 0) return false;
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) return false;
    Eigen::LLT<Mat> llt(m);
    return llt.info() == Eigen::Success;
}

} // namespace coho_euler
