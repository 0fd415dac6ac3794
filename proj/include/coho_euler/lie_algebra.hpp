#pragma once

// Compact Lie algebras given by structure constants and a bi-invariant form,
// together with the reductive split g = h + m and the Ad(H)-fixed subspace m0.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace coho_euler {

/// Finite-dimensional Lie algebra: [e_i, e_j] = sum_k C[i][j][k] e_k, with Q
/// the ad-invariant inner product. Structure constants are stored dense.
struct LieAlgebraSpec {
    int dim = 0;
    std::vector<double> structure; // dim^3 entries, index (i*dim + j)*dim + k
    Mat Q;

    double C(int i, int j, int k) const {
        return structure[(static_cast<std::size_t>(i) * dim + j) * dim + k];
    }
    double& C(int i, int j, int k) {
        return structure[(static_cast<std::size_t>(i) * dim + j) * dim + k];
    }

    static LieAlgebraSpec zero(int dim) {
        LieAlgebraSpec a;
        a.dim = dim;
        a.structure.assign(static_cast<std::size_t>(dim) * dim * dim, 0.0);
        a.Q = Mat::Identity(dim, dim);
        return a;
    }

    /// Sets [e_i, e_j] += value e_k and the antisymmetric partner.
    void set_bracket(int i, int j, int k, double value) {
        C(i, j, k) = value;
        C(j, i, k) = -value;
    }
};

inline LieAlgebraSpec abelian_algebra(int dim) { return LieAlgebraSpec::zero(dim); }

/// su(2) with [e1,e2]=e3 and cyclic, Q = identity.
inline LieAlgebraSpec su2_algebra() {
    auto a = LieAlgebraSpec::zero(3);
    a.set_bracket(0, 1, 2, 1.0);
    a.set_bracket(1, 2, 0, 1.0);
    a.set_bracket(2, 0, 1, 1.0);
    return a;
}

/// su(2) + R, the R factor as the fourth basis vector.
inline LieAlgebraSpec su2_plus_r_algebra() {
    auto a = LieAlgebraSpec::zero(4);
    a.set_bracket(0, 1, 2, 1.0);
    a.set_bracket(1, 2, 0, 1.0);
    a.set_bracket(2, 0, 1, 1.0);
    return a;
}

namespace detail {

inline void check_shapes(const LieAlgebraSpec& alg) {
    if (alg.dim < 1) throw StructuralError("Lie algebra dimension must be at least 1");
    const auto n = static_cast<std::size_t>(alg.dim);
    if (alg.structure.size() != n * n * n)
        throw StructuralError("structure constants have " + std::to_string(alg.structure.size()) +
                              " entries, expected " + std::to_string(n * n * n));
    if (alg.Q.rows() != alg.dim || alg.Q.cols() != alg.dim)
        throw StructuralError("Q is " + std::to_string(alg.Q.rows()) + "x" + std::to_string(alg.Q.cols()) +
                              ", expected " + std::to_string(alg.dim) + "x" + std::to_string(alg.dim));
    for (double c : alg.structure)
        if (!std::isfinite(c)) throw InputError("structure constants contain a non-finite entry");
    if (!alg.Q.allFinite()) throw InputError("Q contains a non-finite entry");
}

inline double q_inner(const LieAlgebraSpec& alg, const Vec& x, const Vec& y) { return x.dot(alg.Q * y); }

} // namespace detail

inline Vec bracket(const LieAlgebraSpec& alg, const Vec& x, const Vec& y) {
    if (x.size() != alg.dim || y.size() != alg.dim)
        throw InputError("bracket: vector length does not match algebra dimension " + std::to_string(alg.dim));
    Vec out = Vec::Zero(alg.dim);
    for (int i = 0; i < alg.dim; ++i) {
        if (x[i] == 0.0) continue;
        for (int j = 0; j < alg.dim; ++j) {
            const double xy = x[i] * y[j];
            if (xy == 0.0) continue;
            for (int k = 0; k < alg.dim; ++k) out[k] += xy * alg.C(i, j, k);
        }
    }
    return out;
}

/// Matrix of ad(x) = [x, .] in the standard basis.
inline Mat ad_matrix(const LieAlgebraSpec& alg, const Vec& x) {
    Mat A(alg.dim, alg.dim);
    for (int b = 0; b < alg.dim; ++b) A.col(b) = bracket(alg, x, Vec::Unit(alg.dim, b));
    return A;
}

inline constexpr double kStructureTolerance = 1e-12;

/// Antisymmetry, Jacobi, Q-positivity and ad-invariance of Q.
inline ValidationReport validate_structure(const LieAlgebraSpec& alg) {
    detail::check_shapes(alg);
    const int n = alg.dim;
    ValidationReport report;

    double anti = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) anti = std::max(anti, std::abs(alg.C(i, j, k) + alg.C(j, i, k)));
    report.add("antisymmetry", anti, kStructureTolerance);

    std::vector<Vec> e;
    for (int i = 0; i < n; ++i) e.push_back(Vec::Unit(n, i));
    double jacobi = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Vec cyc = bracket(alg, bracket(alg, e[i], e[j]), e[k]) +
                          bracket(alg, bracket(alg, e[j], e[k]), e[i]) +
                          bracket(alg, bracket(alg, e[k], e[i]), e[j]);
                jacobi = std::max(jacobi, cyc.cwiseAbs().maxCoeff());
            }
    report.add("jacobi", jacobi, kStructureTolerance);

    const double asym = (alg.Q - alg.Q.transpose()).cwiseAbs().maxCoeff();
    report.add("q_symmetric", asym, kStructureTolerance);
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (alg.Q + alg.Q.transpose()));
    const double min_eig = eig.eigenvalues().minCoeff();
    report.add_flag("q_positive", min_eig > 0.0, "min eigenvalue " + format_double(min_eig));

    double adinv = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const double r = detail::q_inner(alg, bracket(alg, e[i], e[j]), e[k]) +
                                 detail::q_inner(alg, e[j], bracket(alg, e[i], e[k]));
                adinv = std::max(adinv, std::abs(r));
            }
    report.add("ad_invariance", adinv, kStructureTolerance);
    return report;
}

/// g = h + m with m the Q-orthogonal complement, and m0 the joint kernel of
/// proj_m o ad(x) on m for x in h (Ad(H)-fixed vectors for connected H).
///
/// `m_basis` is Q-orthonormal. `m0_coords` holds the m0 basis as columns of
/// coordinates with respect to `m_basis`; those columns are orthonormal.
struct ReductiveSplit {
    LieAlgebraSpec algebra;
    std::vector<Vec> h_basis;
    std::vector<Vec> m_basis;
    Mat m0_coords;

    int dim_h() const { return static_cast<int>(h_basis.size()); }
    int dim_m() const { return static_cast<int>(m_basis.size()); }
    int dim_m0() const { return static_cast<int>(m0_coords.cols()); }

    /// m0 basis vectors expressed in g.
    std::vector<Vec> m0_basis() const {
        std::vector<Vec> out;
        for (int c = 0; c < dim_m0(); ++c) out.push_back(from_m(m0_coords.col(c)));
        return out;
    }

    /// g-vector from m-coordinates.
    Vec from_m(const Vec& coords) const {
        Vec x = Vec::Zero(algebra.dim);
        for (int a = 0; a < dim_m(); ++a) x += coords[a] * m_basis[a];
        return x;
    }

    /// Q-orthogonal projection of a g-vector onto m, in m-coordinates.
    Vec to_m(const Vec& x) const {
        Vec c(dim_m());
        for (int a = 0; a < dim_m(); ++a) c[a] = detail::q_inner(algebra, m_basis[a], x);
        return c;
    }

    /// proj_m o ad(x) restricted to m, in m-coordinates.
    Mat ad_on_m(const Vec& x) const {
        Mat A(dim_m(), dim_m());
        for (int b = 0; b < dim_m(); ++b) A.col(b) = to_m(bracket(algebra, x, m_basis[b]));
        return A;
    }

    bool is_abelian() const {
        return std::all_of(algebra.structure.begin(), algebra.structure.end(), [](double c) { return c == 0.0; });
    }
};

inline constexpr double kKernelCutoff = 1e-10;

namespace detail {

// Modified Gram-Schmidt in the Q inner product with one reorthogonalization pass.
inline Vec q_orthogonalize(const LieAlgebraSpec& alg, Vec v, const std::vector<Vec>& against) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& u : against) v -= q_inner(alg, u, v) * u;
    return v;
}

} // namespace detail

inline ReductiveSplit reductive_split(const LieAlgebraSpec& alg, const std::vector<Vec>& h_basis) {
    const auto report = validate_structure(alg);
    if (!report.passed()) throw ValidationError("reductive_split: Lie algebra failed structural validation");
    const int n = alg.dim;
    for (const auto& x : h_basis) {
        if (x.size() != n) throw InputError("isotropy basis vector has wrong length");
        if (!x.allFinite()) throw InputError("isotropy basis vector is not finite");
    }
    if (static_cast<int>(h_basis.size()) > n) throw InputError("isotropy basis has more vectors than dim g");

    if (!h_basis.empty()) {
        Mat H(n, static_cast<int>(h_basis.size()));
        for (int c = 0; c < H.cols(); ++c) H.col(c) = h_basis[c];
        Eigen::JacobiSVD<Mat> svd(H);
        const auto& s = svd.singularValues();
        if (s.minCoeff() <= kKernelCutoff * std::max(1.0, s.maxCoeff()))
            throw InputError("isotropy basis is linearly dependent");
    }

    // Q-orthonormal basis of h.
    std::vector<Vec> hq;
    for (const auto& x : h_basis) {
        Vec v = detail::q_orthogonalize(alg, x, hq);
        hq.push_back(v / std::sqrt(detail::q_inner(alg, v, v)));
    }

    // Closure of h under the bracket.
    double off = 0.0;
    for (std::size_t i = 0; i < hq.size(); ++i)
        for (std::size_t j = i + 1; j < hq.size(); ++j) {
            Vec b = bracket(alg, hq[i], hq[j]);
            Vec rest = detail::q_orthogonalize(alg, b, hq);
            off = std::max(off, rest.cwiseAbs().maxCoeff() / std::max(1.0, b.norm()));
        }
    if (off > kStructureTolerance)
        throw ValidationError("isotropy basis does not span a subalgebra (off-h residual " + format_double(off) + ")");

    ReductiveSplit split;
    split.algebra = alg;
    split.h_basis = h_basis;

    // m: orthogonalize the standard basis against h, keeping the survivors in order.
    std::vector<Vec> span = hq;
    for (int k = 0; k < n && static_cast<int>(split.m_basis.size()) < n - static_cast<int>(hq.size()); ++k) {
        Vec e = Vec::Unit(n, k);
        const double e_norm = std::sqrt(detail::q_inner(alg, e, e));
        Vec v = detail::q_orthogonalize(alg, e, span);
        const double v_norm = std::sqrt(std::max(0.0, detail::q_inner(alg, v, v)));
        if (v_norm <= 1e-8 * e_norm) continue;
        v /= v_norm;
        span.push_back(v);
        split.m_basis.push_back(v);
    }
    const int dm = split.dim_m();

    if (hq.empty() || dm == 0) {
        split.m0_coords = Mat::Identity(dm, dm);
        return split;
    }

    Mat stacked(dm * static_cast<int>(h_basis.size()), dm);
    for (std::size_t i = 0; i < h_basis.size(); ++i)
        stacked.block(static_cast<int>(i) * dm, 0, dm, dm) = split.ad_on_m(h_basis[i]);
    Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    std::vector<int> kernel_cols;
    for (int c = 0; c < dm; ++c)
        if (c >= s.size() || s[c] < kKernelCutoff) kernel_cols.push_back(c);
    if (static_cast<int>(kernel_cols.size()) == dm) {
        split.m0_coords = Mat::Identity(dm, dm);
        return split;
    }
    Mat K(dm, static_cast<int>(kernel_cols.size()));
    for (int c = 0; c < K.cols(); ++c) K.col(c) = svd.matrixV().col(kernel_cols[c]);

    // Canonical basis: project the standard m-coordinates onto the kernel.
    Mat P = K * K.transpose();
    std::vector<Vec> basis;
    for (int a = 0; a < dm && static_cast<int>(basis.size()) < K.cols(); ++a) {
        Vec v = P.col(a);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& u : basis) v -= u.dot(v) * u;
        const double nv = v.norm();
        if (nv <= 1e-8) continue;
        v /= nv;
        for (int i = 0; i < v.size(); ++i)
            if (std::abs(v[i]) < 1e-15) v[i] = 0.0;
        basis.push_back(v / v.norm());
    }
    split.m0_coords.resize(dm, static_cast<int>(basis.size()));
    for (std::size_t c = 0; c < basis.size(); ++c) split.m0_coords.col(static_cast<int>(c)) = basis[c];
    return split;
}

/// Residuals of the split invariants: closure of h, Q(h,m)=0, ad(h) m0 = 0.
inline ValidationReport validate_split(const ReductiveSplit& split) {
    ValidationReport report;
    double hm = 0.0;
    for (const auto& h : split.h_basis)
        for (const auto& m : split.m_basis) hm = std::max(hm, std::abs(detail::q_inner(split.algebra, h, m)));
    report.add("q_orthogonal_h_m", hm, 1e-12);
    report.add_flag("dimension_count", split.dim_h() + split.dim_m() == split.algebra.dim);
    double fixed = 0.0;
    for (const auto& x : split.h_basis) {
        Mat A = split.ad_on_m(x);
        if (split.dim_m0() > 0) fixed = std::max(fixed, (A * split.m0_coords).cwiseAbs().maxCoeff());
    }
    report.add("m0_fixed", fixed, kKernelCutoff);
    return report;
}

} // namespace coho_euler
