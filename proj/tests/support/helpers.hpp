#ifndef INFSA_TESTS_HELPERS_HPP_
#define INFSA_TESTS_HELPERS_HPP_

#include <cstdint>
#include <vector>

#include <infsa/attention_graph.hpp>
#include <infsa/matrix.hpp>
#include <infsa/rng.hpp>

#include "eig_oracle.hpp"

namespace test_support {

inline oracle::Mat toOracle(const infsa::Matrix &m) {
    oracle::Mat out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out[i][j] = m(i, j);
        }
    }
    return out;
}

/// Random affinity operator produced the same way the library does it:
/// nonnegative, Frobenius norm just under 1.
inline infsa::AffinityMatrix randomAffinity(std::size_t n, std::uint64_t seed,
                                            std::size_t dim = 8) {
    infsa::Rng rng = infsa::Rng::keyed(seed, n);
    infsa::TokenFeatures q(infsa::randomMatrix(n, dim, rng, 0.0, 1.0));
    return infsa::buildAffinity(q, q);
}

inline double maxAbsDiff(const infsa::Matrix &a, const infsa::Matrix &b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

inline double frobeniusDiff(const infsa::Matrix &a, const infsa::Matrix &b) {
    return infsa::frobeniusNorm(infsa::subtract(a, b));
}

} // namespace test_support

#endif // INFSA_TESTS_HELPERS_HPP_
