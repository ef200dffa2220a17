#include <infsa/matrix.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

namespace infsa {

void parallelRows(std::size_t n_rows, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)> &body) {
    if (threads <= 1 || n_rows < 2 * threads) {
        body(0, n_rows);
        return;
    }
    const std::size_t per = (n_rows + threads - 1) / threads;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t first = t * per;
        const std::size_t last = std::min(n_rows, first + per);
        if (first >= last) {
            break;
        }
        workers.emplace_back(body, first, last);
    }
    for (auto &w : workers) {
        w.join();
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data length " + std::to_string(data_.size())
                         + " does not match " + std::to_string(rows_) + "x"
                         + std::to_string(cols_));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

void Matrix::requireFinite(const char *context) const {
    for (double x : data_) {
        if (!std::isfinite(x)) {
            throw Error(std::string(context) + ": non-finite matrix entry");
        }
    }
}

void Vector::requireFinite(const char *context) const {
    for (double x : data_) {
        if (!std::isfinite(x)) {
            throw Error(std::string(context) + ": non-finite vector entry");
        }
    }
}

Matrix matmul(const Matrix &a, const Matrix &b, unsigned threads) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ ("
                         + std::to_string(a.cols()) + " vs "
                         + std::to_string(b.rows()) + ")");
    }
    Matrix c(a.rows(), b.cols());
    const std::size_t k_dim = a.cols(), m = b.cols();
    const double *ad = a.data().data();
    const double *bd = b.data().data();
    double *cd = c.data().data();
    // i-k-j order: row-major friendly; the k-loop still accumulates each
    // output entry in ascending-k order, keeping reductions deterministic.
    parallelRows(a.rows(), threads, [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            const double *arow = ad + i * k_dim;
            double *crow = cd + i * m;
            for (std::size_t k = 0; k < k_dim; ++k) {
                const double aik = arow[k];
                if (aik == 0.0) {
                    continue;
                }
                const double *brow = bd + k * m;
                for (std::size_t j = 0; j < m; ++j) {
                    crow[j] += aik * brow[j];
                }
            }
        }
    });
    return c;
}

Matrix transpose(const Matrix &a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

Vector matvec(const Matrix &a, const Vector &x) {
    if (a.cols() != x.size()) {
        throw ShapeError("matvec: matrix has " + std::to_string(a.cols())
                         + " columns, vector has " + std::to_string(x.size()));
    }
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            acc += a(i, j) * x[j];
        }
        y[i] = acc;
    }
    return y;
}

Matrix add(const Matrix &a, const Matrix &b) {
    if (!a.sameShape(b)) {
        throw ShapeError("add: shapes differ");
    }
    Matrix c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) {
        c.data()[i] += b.data()[i];
    }
    return c;
}

Matrix subtract(const Matrix &a, const Matrix &b) {
    if (!a.sameShape(b)) {
        throw ShapeError("subtract: shapes differ");
    }
    Matrix c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) {
        c.data()[i] -= b.data()[i];
    }
    return c;
}

Matrix scale(const Matrix &a, double factor) {
    Matrix c = a;
    for (double &x : c.data()) {
        x *= factor;
    }
    return c;
}

double dot(const Vector &u, const Vector &v) {
    if (u.size() != v.size()) {
        throw ShapeError("dot: lengths differ");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        acc += u[i] * v[i];
    }
    return acc;
}

double l1Norm(const Vector &v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += std::abs(v[i]);
    }
    return acc;
}

double l2Norm(const Vector &v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += v[i] * v[i];
    }
    return std::sqrt(acc);
}

double frobeniusNorm(const Matrix &a) {
    double acc = 0.0;
    for (double x : a.data()) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

Matrix solveLinear(const Matrix &a, const Matrix &b) {
    if (a.rows() != a.cols()) {
        throw ShapeError("solveLinear: coefficient matrix must be square");
    }
    if (b.rows() != a.rows()) {
        throw ShapeError("solveLinear: right-hand side has "
                         + std::to_string(b.rows()) + " rows, expected "
                         + std::to_string(a.rows()));
    }
    const std::size_t n = a.rows();
    const std::size_t m = b.cols();
    Matrix lu = a;
    Matrix x = b;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) {
        perm[i] = i;
    }

    constexpr double kPivotFloor = 1e-12;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot_row = col;
        double pivot_mag = std::abs(lu(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double mag = std::abs(lu(r, col));
            if (mag > pivot_mag) {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if (pivot_mag < kPivotFloor) {
            throw SingularMatrixError("solveLinear: singular pivot at column "
                                      + std::to_string(col));
        }
        if (pivot_row != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(lu(col, j), lu(pivot_row, j));
            }
            for (std::size_t j = 0; j < m; ++j) {
                std::swap(x(col, j), x(pivot_row, j));
            }
            std::swap(perm[col], perm[pivot_row]);
        }
        const double pivot = lu(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = lu(r, col) / pivot;
            if (factor == 0.0) {
                continue;
            }
            lu(r, col) = factor;
            for (std::size_t j = col + 1; j < n; ++j) {
                lu(r, j) -= factor * lu(col, j);
            }
            for (std::size_t j = 0; j < m; ++j) {
                x(r, j) -= factor * x(col, j);
            }
        }
    }

    // Back substitution on the upper-triangular factor.
    for (std::size_t col = n; col-- > 0;) {
        const double pivot = lu(col, col);
        for (std::size_t j = 0; j < m; ++j) {
            x(col, j) /= pivot;
        }
        for (std::size_t r = 0; r < col; ++r) {
            const double factor = lu(r, col);
            if (factor == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < m; ++j) {
                x(r, j) -= factor * x(col, j);
            }
        }
    }
    x.requireFinite("solveLinear");
    return x;
}

PowerIterationResult powerIteration(const Matrix &a, const Vector &x0,
                                    std::size_t max_iters, double tol) {
    if (a.rows() != a.cols()) {
        throw ShapeError("powerIteration: operator must be square");
    }
    if (x0.size() != a.rows()) {
        throw ShapeError("powerIteration: start vector length mismatch");
    }

    Vector v = x0;
    const double norm0 = l1Norm(v);
    if (norm0 == 0.0) {
        throw DegenerateOperatorError("powerIteration: zero start vector");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] /= norm0;
    }

    double lambda = 0.0;
    std::size_t iters = 0;
    for (std::size_t t = 0; t < max_iters; ++t) {
        Vector av = matvec(a, v);
        const double norm = l1Norm(av);
        if (norm == 0.0) {
            throw DegenerateOperatorError(
                "powerIteration: operator annihilated the iterate at step "
                + std::to_string(t));
        }
        lambda = norm;
        double delta = 0.0;
        for (std::size_t i = 0; i < av.size(); ++i) {
            av[i] /= norm;
            delta += std::abs(av[i] - v[i]);
        }
        v = std::move(av);
        iters = t + 1;
        if (delta < tol) {
            break;
        }
    }
    // Report lambda as ||A v||_1 of the final iterate.
    lambda = l1Norm(matvec(a, v));
    return PowerIterationResult{std::move(v), lambda, iters};
}

PowerIterationResult powerIteration(const Matrix &a, std::size_t max_iters,
                                    double tol) {
    const std::size_t n = a.rows();
    Vector x0(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
    return powerIteration(a, x0, max_iters, tol);
}

} // namespace infsa
