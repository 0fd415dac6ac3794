#pragma once

// Invariant metrics on a homogeneous orbit G/H and the Levi-Civita connection
// of invariant vector fields, reduced to linear algebra on m.

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "lie_algebra.hpp"
#include "numerics.hpp"

namespace coho_euler {

/// Sign relating the bracket of invariant vector fields to the algebra
/// bracket. +1 makes su(2) with gram = diag(I1,I2,I3) reproduce the classical
/// Euler top I1 w1' = (I2 - I3) w2 w3 forward in time.
inline constexpr double kInvariantBracketSign = 1.0;

inline constexpr double kMetricInvarianceTolerance = 1e-10;

/// A single G-invariant metric on G/H: the Gram matrix of the m basis.
struct InvariantMetric {
    ReductiveSplit split;
    Mat gram;
};

inline ValidationReport check_metric_invariance(const InvariantMetric& metric) {
    const int dm = metric.split.dim_m();
    if (metric.gram.rows() != dm || metric.gram.cols() != dm)
        throw StructuralError("gram is " + std::to_string(metric.gram.rows()) + "x" +
                              std::to_string(metric.gram.cols()) + ", expected " + std::to_string(dm) + "x" +
                              std::to_string(dm));
    if (!metric.gram.allFinite()) throw InputError("gram contains a non-finite entry");
    ValidationReport report;
    report.add_flag("gram_spd", is_spd(metric.gram));
    double residual = 0.0;
    for (const auto& x : metric.split.h_basis) {
        const Mat A = metric.split.ad_on_m(x);
        residual = std::max(residual, (A.transpose() * metric.gram + metric.gram * A).cwiseAbs().maxCoeff());
    }
    report.add("ad_h_invariance", residual, kMetricInvarianceTolerance);
    return report;
}

/// Whether the invariant-field bracket is known for this split: either the
/// isotropy is trivial, or every vector of m extends to an invariant field.
inline bool connection_supported(const ReductiveSplit& split) {
    return split.dim_h() == 0 || split.dim_m0() == split.dim_m();
}

/// Christoffel table of the invariant connection in m-coordinates:
/// nabla_{e_a} e_b = sum_c gamma(a,b,c) e_c.
class ConnectionTable {
public:
    ConnectionTable() = default;

    ConnectionTable(const ReductiveSplit& split, const Mat& gram) : n_(split.dim_m()) {
        if (!connection_supported(split))
            throw UnsupportedError("invariant connection requires trivial isotropy or m0 = m "
                                   "(the invariant-field bracket is unknown otherwise)");
        if (gram.rows() != n_ || gram.cols() != n_) throw StructuralError("gram does not match dim m");
        // Bracket of invariant fields in m-coordinates.
        std::vector<Vec> br(static_cast<std::size_t>(n_) * n_);
        for (int a = 0; a < n_; ++a)
            for (int b = 0; b < n_; ++b)
                br[a * n_ + b] = kInvariantBracketSign *
                                 split.to_m(bracket(split.algebra, split.m_basis[a], split.m_basis[b]));
        auto ip = [&](const Vec& u, int c) { return u.dot(gram.col(c)); };
        Eigen::LDLT<Mat> solver(gram);
        gamma_.assign(static_cast<std::size_t>(n_) * n_ * n_, 0.0);
        for (int a = 0; a < n_; ++a)
            for (int b = 0; b < n_; ++b) {
                // Koszul formula without derivative terms: inner products of
                // invariant fields are constant along the orbit.
                Vec rhs(n_);
                for (int c = 0; c < n_; ++c)
                    rhs[c] = 0.5 * (ip(br[a * n_ + b], c) - ip(br[b * n_ + c], a) + ip(br[c * n_ + a], b));
                Vec sol = solver.solve(rhs);
                for (int c = 0; c < n_; ++c) gamma(a, b, c) = sol[c];
            }
    }

    int dim() const { return n_; }

    double gamma(int a, int b, int c) const { return gamma_[(static_cast<std::size_t>(a) * n_ + b) * n_ + c]; }
    double& gamma(int a, int b, int c) { return gamma_[(static_cast<std::size_t>(a) * n_ + b) * n_ + c]; }

    /// nabla_X Y for coordinate vectors X, Y.
    Vec apply(const Vec& X, const Vec& Y) const {
        Vec out = Vec::Zero(n_);
        for (int a = 0; a < n_; ++a)
            for (int b = 0; b < n_; ++b) {
                const double xy = X[a] * Y[b];
                if (xy == 0.0) continue;
                for (int c = 0; c < n_; ++c) out[c] += xy * gamma(a, b, c);
            }
        return out;
    }

    /// Restriction to a subspace spanned by orthonormal coordinate columns B
    /// that the connection preserves.
    ConnectionTable restricted(const Mat& B) const {
        ConnectionTable t;
        t.n_ = static_cast<int>(B.cols());
        t.gamma_.assign(static_cast<std::size_t>(t.n_) * t.n_ * t.n_, 0.0);
        for (int i = 0; i < t.n_; ++i)
            for (int j = 0; j < t.n_; ++j) {
                Vec v = B.transpose() * apply(B.col(i), B.col(j));
                for (int k = 0; k < t.n_; ++k) t.gamma(i, j, k) = v[k];
            }
        return t;
    }

    const std::vector<double>& raw() const { return gamma_; }

private:
    int n_ = 0;
    std::vector<double> gamma_;
};

inline Vec invariant_connection(const InvariantMetric& metric, const Vec& X, const Vec& Y) {
    const int dm = metric.split.dim_m();
    if (X.size() != dm || Y.size() != dm) throw InputError("invariant_connection: vector length must equal dim m");
    return ConnectionTable(metric.split, metric.gram).apply(X, Y);
}

/// Volume of G/H relative to the reference density of the m basis.
inline double orbit_volume(const Mat& gram) {
    if (!is_spd(gram)) throw InputError("orbit_volume: gram is not symmetric positive definite");
    return std::sqrt(gram.determinant());
}

inline double orbit_volume(const InvariantMetric& metric) { return orbit_volume(metric.gram); }

/// Right-hand side of du/dt = -nabla_u u for an invariant field u = X.
inline Vec euler_arnold_rhs(const InvariantMetric& metric, const Vec& X) {
    return -invariant_connection(metric, X, X);
}

/// Divergence of the invariant field X: sum over a gram-orthonormal frame of
/// <nabla_{E_i} X, E_i>.
inline double homogeneous_divergence(const ConnectionTable& table, const Mat& gram, const Vec& X) {
    const int n = table.dim();
    if (n == 0) return 0.0;
    Mat M(n, n); // M(a,b) = <nabla_{e_a} X, e_b>
    for (int a = 0; a < n; ++a) {
        Vec nabla = table.apply(Vec::Unit(n, a), X);
        for (int b = 0; b < n; ++b) M(a, b) = nabla.dot(gram.col(b));
    }
    const Mat ginv = gram.inverse();
    return (ginv.cwiseProduct(M)).sum();
}

} // namespace coho_euler
