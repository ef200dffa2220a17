#include <doctest.h>

#include <cmath>

#include <infsa/matrix.hpp>
#include <infsa/rng.hpp>

#include "support/helpers.hpp"

using namespace infsa;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    return Matrix(2, 2, {a, b, c, d});
}

/// Naive triple-loop product, independent of the production kernel's
/// loop order and zero-skipping.
Matrix naiveMatmul(const Matrix &a, const Matrix &b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += a(i, k) * b(k, j);
            }
            c(i, j) = acc;
        }
    }
    return c;
}

} // namespace

TEST_CASE("matmul identity and annihilator") {
    const Matrix a = mat2(1, 2, 3, 4);
    const Matrix out = matmul(a, Matrix::identity(2));
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 2.0);
    CHECK(out(1, 0) == 3.0);
    CHECK(out(1, 1) == 4.0);

    const Matrix zero(2, 2);
    const Matrix annihilated = matmul(zero, mat2(5, 6, 7, 8));
    for (double x : annihilated.data()) {
        CHECK(x == 0.0);
    }
}

TEST_CASE("matmul square matches hand expansion and the naive oracle") {
    const Matrix a = mat2(1, 2, 3, 4);
    const Matrix sq = matmul(a, a);
    CHECK(sq(0, 0) == 7.0);
    CHECK(sq(0, 1) == 10.0);
    CHECK(sq(1, 0) == 15.0);
    CHECK(sq(1, 1) == 22.0);

    Rng rng(99);
    const Matrix r1 = randomMatrix(5, 7, rng, -2.0, 2.0);
    const Matrix r2 = randomMatrix(7, 3, rng, -2.0, 2.0);
    CHECK(test_support::maxAbsDiff(matmul(r1, r2), naiveMatmul(r1, r2)) == 0.0);
}

TEST_CASE("matmul shape error") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 2)), ShapeError);
}

TEST_CASE("matmul is thread-count invariant") {
    Rng rng(3);
    const Matrix a = randomMatrix(19, 23, rng, -1.0, 1.0);
    const Matrix b = randomMatrix(23, 11, rng, -1.0, 1.0);
    const Matrix serial = matmul(a, b);
    const Matrix threaded = matmul(a, b, 4);
    CHECK(serial.data() == threaded.data()); // bitwise
}

TEST_CASE("solveLinear identity and diagonal") {
    const Matrix b(2, 1, {3, 4});
    const Matrix x = solveLinear(Matrix::identity(2), b);
    CHECK(x(0, 0) == 3.0);
    CHECK(x(1, 0) == 4.0);

    const Matrix diag = mat2(2, 0, 0, 4);
    const Matrix inv = solveLinear(diag, Matrix::identity(2));
    CHECK(inv(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(inv(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(inv(0, 1) == 0.0);
}

TEST_CASE("solveLinear rejects a rank-deficient system") {
    CHECK_THROWS_AS(solveLinear(mat2(1, 1, 1, 1), Matrix::identity(2)),
                    SingularMatrixError);
}

TEST_CASE("solveLinear round-trips on random well-conditioned systems") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng = Rng::keyed(17, seed);
        const std::size_t n = 3 + seed % 6;
        Matrix a = randomMatrix(n, n, rng, -1.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            a(i, i) += static_cast<double>(n); // diagonal dominance
        }
        const Matrix b = randomMatrix(n, 2, rng, -1.0, 1.0);
        const Matrix x = solveLinear(a, b);
        const double residual = test_support::frobeniusDiff(matmul(a, x), b);
        CHECK(residual <= 1e-9 * frobeniusNorm(b));
    }
}

TEST_CASE("frobeniusNorm") {
    CHECK(frobeniusNorm(mat2(3, 4, 0, 0)) == 5.0);
    CHECK(frobeniusNorm(Matrix(3, 3)) == 0.0);
    CHECK(frobeniusNorm(Matrix::identity(2)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("powerIteration on a dominant diagonal") {
    const Matrix a = mat2(2, 0, 0, 1);
    const PowerIterationResult r = powerIteration(a, Vector({1.0, 1.0}));
    CHECK(r.v[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.v[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(r.lambda == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("powerIteration on a rank-1 operator lands in one step") {
    const Matrix a = mat2(1, 1, 1, 1); // u u^T with u = (1, 1)
    const PowerIterationResult r = powerIteration(a, Vector({1.0, 1.0}));
    CHECK(r.v[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.v[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.lambda == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.iters_used <= 2);
}

TEST_CASE("powerIteration matches the dense eigensolver oracle on random 8x8") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng = Rng::keyed(23, seed);
        const Matrix a = randomMatrix(8, 8, rng, 0.0, 1.0);
        const PowerIterationResult r = powerIteration(a);
        const std::vector<double> expected =
            oracle::dominantEigenvector(test_support::toOracle(a));
        double dot = 0.0, nu = 0.0, nv = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
            dot += r.v[i] * expected[i];
            nu += r.v[i] * r.v[i];
            nv += expected[i] * expected[i];
        }
        CHECK(dot / std::sqrt(nu * nv) >= 1.0 - 1e-9);
    }
}

TEST_CASE("powerIteration reports a degenerate operator") {
    CHECK_THROWS_AS(powerIteration(Matrix(3, 3), Vector(3, 1.0)),
                    DegenerateOperatorError);
    CHECK_THROWS_AS(powerIteration(Matrix::identity(2), Vector(2, 0.0)),
                    DegenerateOperatorError);
}

TEST_CASE("powerIteration iterates stay l1-normalized and nonnegative") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Rng rng = Rng::keyed(31, seed);
        const std::size_t n = 2 + seed % 7;
        const Matrix a = randomMatrix(n, n, rng, 0.0, 2.0);
        const PowerIterationResult r = powerIteration(a);
        CHECK(std::abs(l1Norm(r.v) - 1.0) <= 1e-12);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(r.v[i] >= 0.0);
        }
    }
}

TEST_CASE("powerIteration lambda tracks the oracle spectral radius") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng = Rng::keyed(37, seed);
        const std::size_t n = 3 + seed;
        // Strictly positive entries make the operator irreducible.
        const Matrix a = randomMatrix(n, n, rng, 0.1, 1.0);
        const PowerIterationResult r = powerIteration(a, 2000, 1e-14);
        const double rho = oracle::spectralRadius(test_support::toOracle(a));
        CHECK(std::abs(r.lambda - rho) <= 1e-12 * rho);
    }
}
