#include <doctest.h>

#include <cmath>

#include <infsa/markov.hpp>
#include <infsa/path_integral.hpp>
#include <infsa/rng.hpp>

#include "support/helpers.hpp"

using namespace infsa;

namespace {

AffinityMatrix swapAffinity() {
    const double w = 1.0 / std::sqrt(2.0);
    return AffinityMatrix(Matrix(2, 2, {0.0, w, w, 0.0}), kDefaultEpsilon);
}

} // namespace

TEST_CASE("buildAbsorbingChain on the zero operator absorbs immediately") {
    const AbsorbingChain chain =
        buildAbsorbingChain(AffinityMatrix(Matrix(3, 3), kDefaultEpsilon), 0.7);
    for (double x : chain.m.data()) {
        CHECK(x == 0.0);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(chain.r[i] == 1.0);
    }
}

TEST_CASE("buildAbsorbingChain on the scaled identity") {
    const double w = 1.0 / std::sqrt(2.0);
    const AffinityMatrix a(scale(Matrix::identity(2), w), kDefaultEpsilon);
    const AbsorbingChain chain = buildAbsorbingChain(a, 0.7);
    CHECK(chain.m(0, 0) == doctest::Approx(0.49497).epsilon(1e-4));
    CHECK(chain.r[0] == doctest::Approx(0.50503).epsilon(1e-4));
    for (std::size_t i = 0; i < 2; ++i) {
        double row = chain.r[i];
        for (std::size_t j = 0; j < 2; ++j) {
            row += chain.m(i, j);
        }
        CHECK(std::abs(row - 1.0) <= 1e-12);
    }
}

TEST_CASE("buildAbsorbingChain rejects rows exceeding 1/gamma") {
    // Row 0 sums to 1.8 > 1/0.7.
    const AffinityMatrix a(Matrix(2, 2, {0.9, 0.9, 0.0, 0.0}), kDefaultEpsilon);
    CHECK_THROWS_AS(buildAbsorbingChain(a, 0.7), InvalidChainError);
    try {
        buildAbsorbingChain(a, 0.7);
    } catch (const InvalidChainError &e) {
        CHECK(e.row() == 0);
        CHECK(e.rowSum() == doctest::Approx(1.8).epsilon(1e-12));
    }
    CHECK_THROWS_AS(buildAbsorbingChain(a, 1.2), Error);
}

TEST_CASE("canonical form is row stochastic") {
    const AbsorbingChain chain = buildAbsorbingChain(test_support::randomAffinity(5, 77), 0.7);
    const Matrix p = chain.canonicalForm();
    REQUIRE(p.rows() == 6);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) {
            row += p(i, j);
            CHECK(p(i, j) >= 0.0);
        }
        CHECK(std::abs(row - 1.0) <= 1e-12);
    }
    CHECK(p(5, 5) == 1.0);
}

TEST_CASE("fundamentalMatrix base cases") {
    const FundamentalMatrix id =
        fundamentalMatrix(AbsorbingChain{Matrix(2, 2), Vector(2, 1.0), 0.7});
    CHECK(test_support::maxAbsDiff(id.n, Matrix::identity(2)) <= 1e-14);

    const FundamentalMatrix geo = fundamentalMatrix(
        AbsorbingChain{scale(Matrix::identity(2), 0.5), Vector(2, 0.5), 0.5});
    CHECK(geo.n(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(geo.n(0, 1) == 0.0);
}

TEST_CASE("fundamentalMatrix of the symmetric two-state chain") {
    const AbsorbingChain chain = buildAbsorbingChain(swapAffinity(), 0.7);
    const FundamentalMatrix fm = fundamentalMatrix(chain);
    const double m = 0.7 / std::sqrt(2.0);
    const double diag = 1.0 / (1.0 - m * m);
    const double off = m / (1.0 - m * m);
    CHECK(fm.n(0, 0) == doctest::Approx(diag).epsilon(1e-12));
    CHECK(fm.n(0, 1) == doctest::Approx(off).epsilon(1e-12));
    CHECK(fm.n(0, 0) == doctest::Approx(1.32450).epsilon(1e-4));
    CHECK(fm.n(0, 1) == doctest::Approx(0.65558).epsilon(2e-4));

    // Diagonal counts include the start itself.
    CHECK(fm.n(0, 0) >= 1.0);
    CHECK(fm.n(1, 1) >= 1.0);
}

TEST_CASE("fundamentalMatrix rejects a closed chain") {
    CHECK_THROWS_AS(
        fundamentalMatrix(AbsorbingChain{Matrix::identity(2), Vector(2, 0.0), 0.5}),
        DivergentSeriesError);
}

TEST_CASE("fundamental matrix satisfies the fixed point N = I + M N") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const AbsorbingChain chain =
            buildAbsorbingChain(test_support::randomAffinity(4 + seed % 3, 500 + seed), 0.7);
        const FundamentalMatrix fm = fundamentalMatrix(chain);
        const Matrix rhs = add(Matrix::identity(chain.nStates()), matmul(chain.m, fm.n));
        CHECK(test_support::frobeniusDiff(fm.n, rhs) <= 1e-9);
    }
}

TEST_CASE("fundamental matrix minus identity equals the discounted path kernel") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const AffinityMatrix a = test_support::randomAffinity(5, 900 + seed);
        const double gamma = 0.7;
        const FundamentalMatrix fm = fundamentalMatrix(buildAbsorbingChain(a, gamma));
        Matrix minus_i = fm.n;
        for (std::size_t i = 0; i < minus_i.rows(); ++i) {
            minus_i(i, i) -= 1.0;
        }
        const Matrix kernel = closedFormKernel(a.mat, DecayFactor(gamma));
        CHECK(test_support::frobeniusDiff(minus_i, kernel) <= 1e-10);
    }
}

TEST_CASE("walkCentralities of the identity and the symmetric chain") {
    const WalkCentralities id = walkCentralities(FundamentalMatrix{Matrix::identity(3)});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(id.c_out[i] == 1.0);
        CHECK(id.c_in[i] == 1.0);
    }

    const FundamentalMatrix fm =
        fundamentalMatrix(buildAbsorbingChain(swapAffinity(), 0.7));
    const WalkCentralities cent = walkCentralities(fm);
    CHECK(cent.c_out[0] == doctest::Approx(1.98008).epsilon(1e-4));
    CHECK(cent.c_in[0] == doctest::Approx(1.98008).epsilon(1e-4));
    // Symmetric operator: outgoing and incoming coincide.
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(cent.c_out[i] == doctest::Approx(cent.c_in[i]).epsilon(1e-12));
    }
}

TEST_CASE("incoming centrality minus one equals the classical Katz vector") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const AffinityMatrix a = test_support::randomAffinity(5, 1300 + seed);
        const double gamma = 0.7;
        const WalkCentralities cent =
            walkCentralities(fundamentalMatrix(buildAbsorbingChain(a, gamma)));

        // Katz oracle: ((I - gamma A)^{-1} - I)^T 1, via the test-side solver.
        const std::size_t n = a.nTokens();
        oracle::Mat lhs(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                // Transposed system: x^T (I - gamma A) = 1^T.
                lhs[i][j] = (i == j ? 1.0 : 0.0) - gamma * a.mat(j, i);
            }
        }
        const std::vector<double> katz_plus_one = oracle::solve(lhs, std::vector<double>(n, 1.0));
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(std::abs((cent.c_in[j] - 1.0) - (katz_plus_one[j] - 1.0)) <= 1e-10);
        }
    }
}

TEST_CASE("simulateWalks with no transitions counts only the start") {
    const AbsorbingChain chain{Matrix(3, 3), Vector(3, 1.0), 0.7};
    const Vector counts = simulateWalks(chain, 1, 100, 5);
    CHECK(counts[0] == 0.0);
    CHECK(counts[1] == 1.0);
    CHECK(counts[2] == 0.0);
}

TEST_CASE("simulateWalks matches the geometric expectation") {
    const AbsorbingChain chain{scale(Matrix::identity(2), 0.5), Vector(2, 0.5), 0.5};
    const WalkStats stats = simulateWalkStats(chain, 0, 100000, 11);
    CHECK(std::abs(stats.mean[0] - 2.0) <= 3.0 * stats.standardError(0));
    CHECK(stats.mean[1] == 0.0);
}

TEST_CASE("simulateWalks reproduces a fundamental-matrix row") {
    const AbsorbingChain chain = buildAbsorbingChain(swapAffinity(), 0.7);
    const FundamentalMatrix fm = fundamentalMatrix(chain);
    const WalkStats stats = simulateWalkStats(chain, 0, 100000, 7);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(std::abs(stats.mean[j] - fm.n(0, j)) <= 4.0 * stats.standardError(j));
    }
}

TEST_CASE("simulateWalks is deterministic and thread-count invariant") {
    const AbsorbingChain chain = buildAbsorbingChain(test_support::randomAffinity(4, 55), 0.7);
    const Vector a = simulateWalks(chain, 0, 20000, 123, 1);
    const Vector b = simulateWalks(chain, 0, 20000, 123, 1);
    const Vector c = simulateWalks(chain, 0, 20000, 123, 4);
    CHECK(a.data() == b.data());
    CHECK(a.data() == c.data()); // bitwise across thread counts

    const Vector other_seed = simulateWalks(chain, 0, 20000, 124, 1);
    CHECK(a.data() != other_seed.data());
}

TEST_CASE("simulateWalks enforces the step cap on a chain that never absorbs") {
    const AbsorbingChain closed{Matrix(2, 2, {0.0, 1.0, 1.0, 0.0}), Vector(2, 0.0), 0.9};
    CHECK_THROWS_AS(simulateWalks(closed, 0, 1, 9), WalkCapError);
}

TEST_CASE("rankings coincide on a symmetric operator and under ties") {
    const RankingComparison sym = oneHopVsMultihopRanking(swapAffinity(), 0.7);
    REQUIRE(sym.one_hop_rank.size() == 2);
    CHECK(sym.one_hop_rank == sym.katz_rank);
    CHECK(sym.one_hop_rank[0] == 0); // tie broken toward the lower index

    const RankingComparison zero =
        oneHopVsMultihopRanking(AffinityMatrix(Matrix(4, 4), kDefaultEpsilon), 0.7);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(zero.one_hop_rank[i] == i);
        CHECK(zero.katz_rank[i] == i);
    }
}

TEST_CASE("frozen demo fixture splits one-hop and multi-hop winners") {
    const AffinityMatrix fixture = multihopDemoFixture();
    CHECK(frobeniusNorm(fixture.mat) == doctest::Approx(1.0).epsilon(1e-12));
    const RankingComparison cmp = oneHopVsMultihopRanking(fixture, 0.7);
    CHECK(cmp.one_hop_rank[0] == 0);
    CHECK(cmp.katz_rank[0] == 4);
}
