#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Sparse>

#include "errors.hpp"

namespace coho_euler {

/// Cubic interpolating spline on (possibly non-uniform) knots. Natural end
/// conditions, or periodic when the first and last samples coincide.
class CubicSpline {
public:
    CubicSpline() = default;

    CubicSpline(std::vector<double> x, std::vector<double> y, bool periodic)
        : x_(std::move(x)), y_(std::move(y)), periodic_(periodic) {
        const std::size_t n = x_.size();
        if (n < 3 || y_.size() != n) throw InputError("CubicSpline: need at least three matching knots");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw InputError("CubicSpline: knots must be strictly increasing");
        m_.assign(n, 0.0);
        if (periodic_)
            solve_periodic();
        else
            solve_natural();
    }

    double operator()(double t) const {
        const std::size_t n = x_.size();
        if (periodic_) {
            const double L = x_.back() - x_.front();
            t = x_.front() + std::fmod(t - x_.front(), L);
            if (t < x_.front()) t += L;
        }
        std::size_t i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
        i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - t) / h;
        const double b = (t - x_[i]) / h;
        return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    }

private:
    void solve_natural() {
        const int n = static_cast<int>(x_.size());
        Eigen::SparseMatrix<double> A(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        std::vector<Eigen::Triplet<double>> t;
        t.emplace_back(0, 0, 1.0);
        t.emplace_back(n - 1, n - 1, 1.0);
        for (int i = 1; i < n - 1; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            t.emplace_back(i, i - 1, h0 / 6.0);
            t.emplace_back(i, i, (h0 + h1) / 3.0);
            t.emplace_back(i, i + 1, h1 / 6.0);
            rhs[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
        }
        solve(A, t, rhs, n);
    }

    void solve_periodic() {
        if (std::abs(y_.front() - y_.back()) > 1e-12 * (1.0 + std::abs(y_.front())))
            throw ValidationError("periodic spline: first and last samples differ");
        const int n = static_cast<int>(x_.size()) - 1; // unique knots
        auto h = [&](int i) { // width of interval [i, i+1] with wrap
            i = ((i % n) + n) % n;
            return x_[i + 1] - x_[i];
        };
        auto y = [&](int i) { return y_[((i % n) + n) % n]; };
        Eigen::SparseMatrix<double> A(n, n);
        Eigen::VectorXd rhs(n);
        std::vector<Eigen::Triplet<double>> t;
        for (int i = 0; i < n; ++i) {
            const double h0 = h(i - 1), h1 = h(i);
            t.emplace_back(i, (i - 1 + n) % n, h0 / 6.0);
            t.emplace_back(i, i, (h0 + h1) / 3.0);
            t.emplace_back(i, (i + 1) % n, h1 / 6.0);
            rhs[i] = (y(i + 1) - y(i)) / h1 - (y(i) - y(i - 1)) / h0;
        }
        solve(A, t, rhs, n);
        m_.back() = m_.front();
    }

    void solve(Eigen::SparseMatrix<double>& A, std::vector<Eigen::Triplet<double>>& t, const Eigen::VectorXd& rhs,
               int n) {
        A.setFromTriplets(t.begin(), t.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw InputError("CubicSpline: singular system");
        Eigen::VectorXd sol = lu.solve(rhs);
        for (int i = 0; i < n; ++i) m_[i] = sol[i];
    }

    std::vector<double> x_, y_, m_;
    bool periodic_ = false;
};

} // namespace coho_euler
