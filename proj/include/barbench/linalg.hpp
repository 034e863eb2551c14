#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "barbench/errors.hpp"

namespace barbench {

using Vec = std::vector<double>;

// Dense row-major matrix. Everything in this project is d <= 10, so the
// plain O(d^3) algorithms below are exact enough and dependency-free.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Matrix identity(std::size_t d) {
        Matrix m(d, d);
        for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Vec operator*(const Matrix& a, const Vec& x) {
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

// Max absolute row sum.
inline double inf_norm(const Matrix& m) {
    double best = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

inline double inf_norm(const Vec& v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Solves A x = b by LU with partial pivoting. Throws SingularSystemError on a
// (numerically) singular pivot.
inline Vec solve(Matrix a, Vec b) {
    const std::size_t d = a.rows();
    if (a.cols() != d || b.size() != d) throw ConfigError("solve: dimension mismatch");
    std::vector<std::size_t> perm(d);
    for (std::size_t i = 0; i < d; ++i) perm[i] = i;

    for (std::size_t k = 0; k < d; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < d; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) < 1e-300) throw SingularSystemError("solve: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < d; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < d; ++i) {
            const double f = a(i, k) / a(k, k);
            a(i, k) = 0.0;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < d; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    Vec x(d);
    for (std::size_t k = d; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < d; ++j) s -= a(k, j) * x[j];
        x[k] = s / a(k, k);
    }
    return x;
}

inline Matrix inverse(const Matrix& a) {
    const std::size_t d = a.rows();
    Matrix inv(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        Vec e(d, 0.0);
        e[j] = 1.0;
        Vec col = solve(a, e);
        for (std::size_t i = 0; i < d; ++i) inv(i, j) = col[i];
    }
    return inv;
}

// Lower-triangular Cholesky factor L with L L^T = A, or the 1-based index of
// the first non-positive leading minor.
struct CholeskyResult {
    std::optional<Matrix> factor;
    int failed_minor = 0;
};

inline CholeskyResult cholesky(const Matrix& a) {
    const std::size_t d = a.rows();
    Matrix l(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) return {std::nullopt, static_cast<int>(i) + 1};
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return {l, 0};
}

// Openness certificate for a substochastic routing matrix: the Neumann series
// I + P + P^2 + ... converges iff some power of P has inf-norm below tol.
// Uses repeated squaring, so powers up to 2^max_squarings are examined.
struct NeumannCertificate {
    bool converges = false;
    unsigned long long power = 0;  // K with ||P^K||_inf < tol, when it converges
    double norm = 0.0;
};

inline NeumannCertificate neumann_convergence(const Matrix& p, double tol = 1e-12,
                                              int max_squarings = 40) {
    Matrix q = p;
    unsigned long long k = 1;
    for (int iter = 0; iter <= max_squarings; ++iter) {
        const double norm = inf_norm(q);
        if (norm < tol) return {true, k, norm};
        q = q * q;
        k *= 2;
    }
    return {false, 0, inf_norm(q)};
}

}  // namespace barbench
