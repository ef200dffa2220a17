#ifndef INFSA_MARKOV_HPP_
#define INFSA_MARKOV_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include <infsa/attention_graph.hpp>
#include <infsa/matrix.hpp>

namespace infsa {

/**
 * Absorbing random walk over the token graph. The transition block
 * M = gamma * A is substochastic; the slack of each row is the per-step
 * absorption probability R_i, so every row of the implied canonical form
 * [[M, R], [0, 1]] sums to exactly 1.
 */
struct AbsorbingChain {
    Matrix m;      // N x N substochastic transition block
    Vector r;      // length N, per-step absorption probabilities
    double gamma;

    std::size_t nStates() const { return m.rows(); }

    /// The (N+1) x (N+1) canonical form with the absorbing state appended.
    Matrix canonicalForm() const;
};

/**
 * Expected visit counts of the chain: n = (I - M)^{-1}. Entry (i, j) is the
 * expected number of visits to state j before absorption when starting at i
 * (the start itself counts once, so diagonal entries are >= 1).
 */
struct FundamentalMatrix {
    Matrix n;

    std::size_t nStates() const { return n.rows(); }
};

/**
 * Builds the chain M = gamma * A, R_i = 1 - sum_j M_ij. Throws
 * InvalidChainError (reporting the offending row and its row sum) when some
 * absorption probability would be negative, i.e. gamma * sigma_i > 1.
 */
AbsorbingChain buildAbsorbingChain(const AffinityMatrix &a_hat, double gamma);

/// Solves (I - M) n = I. Throws DivergentSeriesError if I - M is singular.
FundamentalMatrix fundamentalMatrix(const AbsorbingChain &chain);

struct WalkCentralities {
    Vector c_out; // row sums: expected walk length started from each token
    Vector c_in;  // column sums: expected visits received from all starts
};

WalkCentralities walkCentralities(const FundamentalMatrix &n);

/**
 * Monte-Carlo estimate of one row of the fundamental matrix: empirical mean
 * visit counts per token over num_walks absorbing walks from `start` (the
 * start is counted once at step 0). Each walk draws from a stream keyed by
 * (seed, walk_index) and per-walk counts are integers, so results are
 * bit-identical for a fixed (seed, num_walks) regardless of thread count.
 *
 * A hard cap of 10^6 steps per walk guards pathological inputs
 * (WalkCapError).
 */
Vector simulateWalks(const AbsorbingChain &chain, std::size_t start,
                     std::size_t num_walks, std::uint64_t seed,
                     unsigned threads = 1);

/// Mean plus per-token sums and sums of squares of the per-walk visit
/// counts, for standard-error estimates. Same determinism contract as
/// simulateWalks.
struct WalkStats {
    Vector mean;
    std::vector<std::uint64_t> count_sum;
    std::vector<std::uint64_t> count_sumsq;
    std::size_t num_walks = 0;

    /// Standard error of the mean visit count for token j.
    double standardError(std::size_t j) const;
};

WalkStats simulateWalkStats(const AbsorbingChain &chain, std::size_t start,
                            std::size_t num_walks, std::uint64_t seed,
                            unsigned threads = 1);

/**
 * Compares direct attention against multi-hop centrality: the descending
 * argsort of the operator's column sums (one-hop incoming attention) next
 * to the descending argsort of c_in from the fundamental matrix. Ties break
 * toward the lower token index.
 */
struct RankingComparison {
    std::vector<std::size_t> one_hop_rank;
    std::vector<std::size_t> katz_rank;
    Vector one_hop_scores;
    Vector katz_scores; // c_in
};

RankingComparison oneHopVsMultihopRanking(const AffinityMatrix &a_hat,
                                          double gamma);

/**
 * Frozen 5-token demo graph: tokens 1 and 2 both point at token 0, which
 * chains through 3 to 4. One-hop column mass ranks token 0 first, while the
 * multi-hop centrality ranks token 4 first.
 */
AffinityMatrix multihopDemoFixture();

} // namespace infsa

#endif // INFSA_MARKOV_HPP_
