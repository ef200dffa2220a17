#include <doctest.h>

#include <cmath>

#include <infsa/rng.hpp>
#include <infsa/validation.hpp>

using namespace infsa;

TEST_CASE("gradcheckFd on a quadratic") {
    const ScalarFunction f{
        [](const Vector &t) { return t[0] * t[0]; },
        [](const Vector &t) { return Vector({2.0 * t[0]}); }};
    CHECK(gradcheckFd(f, Vector({3.0})) <= 1e-9);
}

TEST_CASE("gradcheckFd on a linear map is exact up to rounding") {
    const ScalarFunction f{
        [](const Vector &t) { return 3.0 * t[0] - 1.0; },
        [](const Vector &) { return Vector({3.0}); }};
    // Dyadic step keeps every intermediate exactly representable.
    CHECK(gradcheckFd(f, Vector({0.5}), 0x1p-20) <= 1e-12);
}

TEST_CASE("gradcheckFd flags a wrong derivative") {
    const ScalarFunction wrong{
        [](const Vector &t) { return t[0] * t[0]; },
        [](const Vector &t) { return Vector({3.0 * t[0]}); }};
    CHECK(gradcheckFd(wrong, Vector({2.0})) > 0.1);
}

TEST_CASE("gradcheckFd rejects non-finite objectives") {
    const ScalarFunction f{
        [](const Vector &t) { return std::log(t[0]); },
        [](const Vector &t) { return Vector({1.0 / t[0]}); }};
    // Probing theta - step crosses into log of a negative number.
    CHECK_THROWS_AS(gradcheckFd(f, Vector({kDefaultFdStep / 2.0})), EvaluationError);
}

TEST_CASE("spearman on aligned, reversed and partially swapped ranks") {
    const Vector u({1.0, 2.0, 3.0, 4.0});
    CHECK(spearman(u, u) == doctest::Approx(1.0).epsilon(1e-14));

    const Vector rev({4.0, 3.0, 2.0, 1.0});
    CHECK(spearman(u, rev) == doctest::Approx(-1.0).epsilon(1e-14));

    const Vector swapped({1.0, 3.0, 2.0, 4.0});
    CHECK(spearman(u, swapped) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("spearman assigns average ranks to ties") {
    const Vector u({1.0, 1.0, 2.0});
    const Vector v({3.0, 5.0, 4.0});
    // Ranks of u are (1.5, 1.5, 3); the correlation with (1, 3, 2) is 0.
    CHECK(spearman(u, v) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("spearman rejects constant vectors and bad shapes") {
    CHECK_THROWS_AS(spearman(Vector(4, 1.0), Vector({1.0, 2.0, 3.0, 4.0})),
                    UndefinedCorrelationError);
    CHECK_THROWS_AS(spearman(Vector({1.0, 2.0}), Vector({1.0, 2.0, 3.0})), ShapeError);
    CHECK_THROWS_AS(spearman(Vector({1.0}), Vector({1.0})), Error);
}

TEST_CASE("spearman is invariant under strictly monotone transforms") {
    Rng rng(311);
    const Vector u = randomVector(9, rng, -2.0, 2.0);
    const Vector v = randomVector(9, rng, -2.0, 2.0);
    const double base = spearman(u, v);

    Vector exp_u(9), cube_v(9);
    for (std::size_t i = 0; i < 9; ++i) {
        exp_u[i] = std::exp(u[i]);
        cube_v[i] = v[i] * v[i] * v[i];
    }
    CHECK(spearman(exp_u, v) == doctest::Approx(base).epsilon(1e-12));
    CHECK(spearman(u, cube_v) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("eigenvectorAlignment on identical nonnegative rows") {
    Matrix q(5, 3);
    for (std::size_t i = 0; i < 5; ++i) {
        q(i, 0) = 0.3;
        q(i, 1) = 1.1;
    }
    const AlignmentSample s = eigenvectorAlignment(TokenFeatures(q));
    CHECK_FALSE(s.degenerate);
    CHECK(s.cosine == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(s.spearman_defined); // all ranks tie
}

TEST_CASE("eigenvectorAlignment on identity tokens is uniform on both sides") {
    const AlignmentSample s = eigenvectorAlignment(TokenFeatures(Matrix::identity(4)));
    CHECK_FALSE(s.degenerate);
    CHECK(s.cosine == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("eigenvectorAlignment flags zero operators as degenerate") {
    const AlignmentSample s = eigenvectorAlignment(TokenFeatures(Matrix(3, 4)));
    CHECK(s.degenerate);
}

TEST_CASE("alignmentBatch aggregates valid samples") {
    const AlignmentResult r = alignmentBatch(20, 12, 6, 99);
    CHECK(r.n_samples + r.n_degenerate == 20);
    CHECK(r.n_samples > 0);
    CHECK(r.cosine >= 0.9);
    CHECK(r.cosine <= 1.0 + 1e-12);
}
