#pragma once

// Initial data as coefficient functions of r: constants, polynomials in r, or
// truncated Fourier series over the orbit-space length.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "profile.hpp"
#include "reduced_euler.hpp"

namespace coho_euler {

struct CoefficientFunction {
    enum class Kind { Constant, Polynomial, Fourier };

    Kind kind = Kind::Constant;
    double value = 0.0;
    std::vector<double> poly; // sum_k poly[k] r^k
    FourierSeries fourier;

    static CoefficientFunction constant(double v) {
        CoefficientFunction f;
        f.value = v;
        return f;
    }
    static CoefficientFunction polynomial(std::vector<double> c) {
        CoefficientFunction f;
        f.kind = Kind::Polynomial;
        f.poly = std::move(c);
        return f;
    }
    static CoefficientFunction fourier_series(FourierSeries s) {
        CoefficientFunction f;
        f.kind = Kind::Fourier;
        f.fourier = std::move(s);
        return f;
    }

    /// `order`-th r-derivative; Fourier periods are the orbit-space length L.
    double eval(double r, double L, int order = 0) const {
        switch (kind) {
        case Kind::Constant: return order == 0 ? value : 0.0;
        case Kind::Polynomial: {
            double s = 0.0;
            for (std::size_t k = poly.size(); k-- > static_cast<std::size_t>(order);) {
                double c = poly[k];
                for (int m = 0; m < order; ++m) c *= static_cast<double>(k - static_cast<std::size_t>(m));
                s = s * r + c;
            }
            return s;
        }
        case Kind::Fourier: return fourier.eval(r, L, order);
        }
        return 0.0;
    }
};

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Smooth random Fourier data: mean plus `modes` harmonics with coefficients
/// uniform in [-amplitude, amplitude] / k^2. Stream `index` keeps components
/// independent for a fixed seed.
inline CoefficientFunction random_fourier(std::uint64_t seed, int index, double mean, int modes, double amplitude) {
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1)));
    FourierSeries s;
    s.a0 = mean;
    for (int k = 1; k <= modes; ++k) {
        const double scale = amplitude / static_cast<double>(k * k);
        s.a.push_back(scale * (2.0 * unit_uniform(rng) - 1.0));
        s.b.push_back(scale * (2.0 * unit_uniform(rng) - 1.0));
    }
    return CoefficientFunction::fourier_series(std::move(s));
}

struct InitialData {
    double c = 0.0;
    std::vector<CoefficientFunction> v;
};

inline constexpr double kInitialParityTolerance = 1e-12;

namespace detail {

/// Taylor coefficients of a polynomial about r = x0 in powers of (r - x0).
inline std::vector<double> shifted_polynomial(const std::vector<double>& p, double x0) {
    std::vector<double> out(p.size(), 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
        double binom = 1.0, pw = 1.0;
        for (std::size_t m = 0; m <= k; ++m) {
            // C(k, m) x0^(k-m) contributes to (r - x0)^m.
            pw = std::pow(x0, static_cast<double>(k - m));
            out[m] += p[k] * binom * pw;
            binom = binom * static_cast<double>(k - m) / static_cast<double>(m + 1);
        }
    }
    return out;
}

} // namespace detail

/// Symbolic checks before discretization: smooth closing (even in the distance
/// to singular endpoints) on intervals, periodicity on circles.
inline ValidationReport validate_initial_data(const InitialData& init, ProblemKind kind, const OrbitSpace* os,
                                              int n0) {
    ValidationReport report;
    report.add_flag("coefficient_count", static_cast<int>(init.v.size()) == n0,
                    "expected " + std::to_string(n0) + " coefficient functions, got " + std::to_string(init.v.size()));
    report.add_flag("c_finite", std::isfinite(init.c));
    if (kind == ProblemKind::Homogeneous) {
        bool constant = true;
        for (const auto& f : init.v) constant = constant && f.kind == CoefficientFunction::Kind::Constant;
        report.add_flag("homogeneous_constant", constant, "homogeneous initial data must be constants");
        return report;
    }
    const double L = os->length;
    for (std::size_t i = 0; i < init.v.size(); ++i) {
        const auto& f = init.v[i];
        const std::string tag = "v" + std::to_string(i + 1);
        if (kind == ProblemKind::Circle) {
            double res = 0.0;
            for (int order = 0; order < 4; ++order) {
                const double a = f.eval(0.0, L, order), b = f.eval(L, L, order);
                res = std::max(res, std::abs(a - b) / (1.0 + std::abs(a)));
            }
            report.add(tag + "_periodicity", res, 1e-10);
            continue;
        }
        for (int side = 0; side < 2; ++side) {
            if (!os->singular(side)) continue;
            double odd = 0.0;
            if (f.kind == CoefficientFunction::Kind::Polynomial) {
                const auto t = detail::shifted_polynomial(f.poly, side == 0 ? 0.0 : L);
                double scale = 1.0;
                for (double x : t) scale = std::max(scale, std::abs(x));
                for (std::size_t m = 1; m < t.size(); m += 2) odd = std::max(odd, std::abs(t[m]) / scale);
            } else if (f.kind == CoefficientFunction::Kind::Fourier) {
                for (double b : f.fourier.b) odd = std::max(odd, std::abs(b));
            }
            report.add(tag + (side == 0 ? "_parity_left" : "_parity_right"), odd, kInitialParityTolerance,
                       "odd Taylor coefficients at a singular endpoint");
        }
    }
    return report;
}

/// Samples the initial data on the dynamics grid.
inline ReducedState sample_initial(const InitialData& init, const ReducedDynamics& dyn) {
    const int n0 = dyn.coefficients();
    if (static_cast<int>(init.v.size()) != n0)
        throw InputError("initial data has " + std::to_string(init.v.size()) + " coefficient functions, expected " +
                         std::to_string(n0));
    const double L = dyn.problem().profile ? dyn.problem().profile->length() : 1.0;
    CoeffMatrix v(static_cast<Eigen::Index>(dyn.nodes()), n0);
    for (std::size_t j = 0; j < dyn.nodes(); ++j)
        for (int i = 0; i < n0; ++i) v(static_cast<Eigen::Index>(j), i) = init.v[i].eval(dyn.grid().r[j], L);
    return dyn.make_state(init.c, std::move(v));
}

} // namespace coho_euler
