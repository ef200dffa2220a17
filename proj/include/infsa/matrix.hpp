#ifndef INFSA_MATRIX_HPP_
#define INFSA_MATRIX_HPP_

#include <cstddef>
#include <functional>
#include <vector>

#include <infsa/errors.hpp>

namespace infsa {

/**
 * Dense row-major matrix of doubles. Value type; operations on matrices are
 * pure functions that return fresh results. All reductions accumulate in a
 * fixed sequential order so results are bit-reproducible.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<double> &data() { return data_; }
    const std::vector<double> &data() const { return data_; }

    bool sameShape(const Matrix &other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    /// Throws if any entry is NaN or infinite.
    void requireFinite(const char *context) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dense vector of doubles.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t len, double fill = 0.0) : data_(len, fill) {}
    explicit Vector(std::vector<double> data) : data_(std::move(data)) {}
    Vector(std::initializer_list<double> init) : data_(init) {}

    static Vector ones(std::size_t len) { return Vector(len, 1.0); }

    std::size_t size() const { return data_.size(); }
    double &operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double> &data() { return data_; }
    const std::vector<double> &data() const { return data_; }

    void requireFinite(const char *context) const;

private:
    std::vector<double> data_;
};

/// Runs body(first, last) over a row partition; single chunk when
/// threads <= 1. Work on distinct rows may not alias.
void parallelRows(std::size_t n_rows, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)> &body);

/// Standard product. Each output entry accumulates over k in ascending
/// order regardless of threads (rows are partitioned, never reductions),
/// so the result is bit-identical for every thread count.
Matrix matmul(const Matrix &a, const Matrix &b, unsigned threads = 1);
Matrix transpose(const Matrix &a);
Vector matvec(const Matrix &a, const Vector &x);

Matrix add(const Matrix &a, const Matrix &b);
Matrix subtract(const Matrix &a, const Matrix &b);
Matrix scale(const Matrix &a, double factor);

double dot(const Vector &u, const Vector &v);
double l1Norm(const Vector &v);
double l2Norm(const Vector &v);

double frobeniusNorm(const Matrix &a);

/**
 * Solves a X = b by LU factorization with partial row pivoting.
 * b may have multiple right-hand-side columns.
 *
 * Throws SingularMatrixError when the best available pivot has magnitude
 * below 1e-12.
 */
Matrix solveLinear(const Matrix &a, const Matrix &b);

struct PowerIterationResult {
    Vector v;                 // l1-normalized dominant-direction estimate
    double lambda;            // ||A v||_1 at termination
    std::size_t iters_used;
};

inline constexpr std::size_t kDefaultPowerIters = 200;
inline constexpr double kDefaultPowerTol = 1e-12;

/**
 * Power iteration with l1 normalization: v <- A v / ||A v||_1.
 * Stops early once successive iterates differ by less than tol in l1 norm.
 * Requires a square nonnegative operator and a strictly positive start;
 * throws DegenerateOperatorError if A v vanishes at any step.
 */
PowerIterationResult powerIteration(const Matrix &a, const Vector &x0,
                                    std::size_t max_iters = kDefaultPowerIters,
                                    double tol = kDefaultPowerTol);

/// Convenience overload starting from the uniform vector x0 = 1/N.
PowerIterationResult powerIteration(const Matrix &a,
                                    std::size_t max_iters = kDefaultPowerIters,
                                    double tol = kDefaultPowerTol);

} // namespace infsa

#endif // INFSA_MATRIX_HPP_
