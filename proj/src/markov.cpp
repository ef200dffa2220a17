#include <infsa/markov.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include <infsa/rng.hpp>

namespace infsa {

Matrix AbsorbingChain::canonicalForm() const {
    const std::size_t n = nStates();
    Matrix p(n + 1, n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            p(i, j) = m(i, j);
        }
        p(i, n) = r[i];
    }
    p(n, n) = 1.0;
    return p;
}

AbsorbingChain buildAbsorbingChain(const AffinityMatrix &a_hat, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw Error("buildAbsorbingChain: gamma must lie in (0, 1)");
    }
    const std::size_t n = a_hat.nTokens();
    Matrix m(n, n);
    Vector r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = a_hat.mat(i, j);
            if (w < 0.0) {
                throw InvalidChainError(
                    "buildAbsorbingChain: negative affinity at row "
                    + std::to_string(i),
                    i, w);
            }
            const double p = gamma * w;
            m(i, j) = p;
            row_sum += p;
        }
        const double absorb = 1.0 - row_sum;
        if (absorb < 0.0) {
            throw InvalidChainError(
                "buildAbsorbingChain: row " + std::to_string(i)
                + " has transition mass " + std::to_string(row_sum)
                + " > 1 (affinity row sum " + std::to_string(row_sum / gamma)
                + " exceeds 1/gamma)",
                i, row_sum / gamma);
        }
        r[i] = absorb;
    }
    return AbsorbingChain{std::move(m), std::move(r), gamma};
}

FundamentalMatrix fundamentalMatrix(const AbsorbingChain &chain) {
    const std::size_t n = chain.nStates();
    Matrix lhs = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            lhs(i, j) -= chain.m(i, j);
        }
    }
    try {
        return FundamentalMatrix{solveLinear(lhs, Matrix::identity(n))};
    } catch (const SingularMatrixError &e) {
        throw DivergentSeriesError(std::string("fundamentalMatrix: I - M is singular: ")
                                   + e.what());
    }
}

WalkCentralities walkCentralities(const FundamentalMatrix &n) {
    const std::size_t size = n.nStates();
    Vector c_out(size);
    Vector c_in(size);
    for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = 0; j < size; ++j) {
            c_out[i] += n.n(i, j);
            c_in[j] += n.n(i, j);
        }
    }
    return WalkCentralities{std::move(c_out), std::move(c_in)};
}

namespace {

constexpr std::size_t kWalkStepCap = 1000000;

/// One absorbing walk; adds integer visit counts into `counts`.
void runWalk(const AbsorbingChain &chain, std::size_t start, Rng &rng,
             std::vector<std::uint64_t> &counts) {
    const std::size_t n = chain.nStates();
    std::size_t state = start;
    ++counts[start]; // step 0
    for (std::size_t step = 0; step < kWalkStepCap; ++step) {
        // Inverse-CDF draw over [transitions..., absorb], cumulated in
        // index order for reproducibility.
        const double u = rng.nextDouble();
        double cum = 0.0;
        std::size_t next = n; // n means absorbed
        for (std::size_t j = 0; j < n; ++j) {
            cum += chain.m(state, j);
            if (u < cum) {
                next = j;
                break;
            }
        }
        if (next == n) {
            return;
        }
        state = next;
        ++counts[state];
    }
    throw WalkCapError("simulateWalks: walk exceeded "
                       + std::to_string(kWalkStepCap) + " steps");
}

void accumulateWalks(const AbsorbingChain &chain, std::size_t start,
                     std::uint64_t seed, std::size_t first, std::size_t last,
                     std::vector<std::uint64_t> &sum,
                     std::vector<std::uint64_t> &sumsq) {
    const std::size_t n = chain.nStates();
    std::vector<std::uint64_t> counts(n);
    for (std::size_t w = first; w < last; ++w) {
        std::fill(counts.begin(), counts.end(), 0);
        Rng rng = Rng::keyed(seed, w);
        runWalk(chain, start, rng, counts);
        for (std::size_t j = 0; j < n; ++j) {
            sum[j] += counts[j];
            sumsq[j] += counts[j] * counts[j];
        }
    }
}

} // namespace

WalkStats simulateWalkStats(const AbsorbingChain &chain, std::size_t start,
                            std::size_t num_walks, std::uint64_t seed,
                            unsigned threads) {
    const std::size_t n = chain.nStates();
    if (start >= n) {
        throw ShapeError("simulateWalks: start index out of range");
    }
    if (num_walks < 1) {
        throw Error("simulateWalks: need at least one walk");
    }
    if (threads < 1) {
        threads = 1;
    }

    std::vector<std::uint64_t> sum(n, 0);
    std::vector<std::uint64_t> sumsq(n, 0);

    if (threads == 1 || num_walks < 2 * threads) {
        accumulateWalks(chain, start, seed, 0, num_walks, sum, sumsq);
    } else {
        // Contiguous walk-index chunks; integer partial sums merge in
        // worker-index order, so the aggregate is thread-count invariant.
        const std::size_t chunks = threads;
        std::vector<std::vector<std::uint64_t>> part_sum(chunks, std::vector<std::uint64_t>(n, 0));
        std::vector<std::vector<std::uint64_t>> part_sumsq(chunks, std::vector<std::uint64_t>(n, 0));
        std::vector<std::thread> workers;
        workers.reserve(chunks);
        const std::size_t per = (num_walks + chunks - 1) / chunks;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t first = c * per;
            const std::size_t last = std::min(num_walks, first + per);
            workers.emplace_back([&, c, first, last] {
                try {
                    if (first < last) {
                        accumulateWalks(chain, start, seed, first, last,
                                        part_sum[c], part_sumsq[c]);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            });
        }
        for (auto &w : workers) {
            w.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
        for (std::size_t c = 0; c < chunks; ++c) {
            for (std::size_t j = 0; j < n; ++j) {
                sum[j] += part_sum[c][j];
                sumsq[j] += part_sumsq[c][j];
            }
        }
    }

    Vector mean(n);
    for (std::size_t j = 0; j < n; ++j) {
        mean[j] = static_cast<double>(sum[j]) / static_cast<double>(num_walks);
    }
    return WalkStats{std::move(mean), std::move(sum), std::move(sumsq), num_walks};
}

double WalkStats::standardError(std::size_t j) const {
    const double w = static_cast<double>(num_walks);
    const double m = static_cast<double>(count_sum[j]) / w;
    const double var = static_cast<double>(count_sumsq[j]) / w - m * m;
    return std::sqrt(std::max(var, 0.0) / w);
}

Vector simulateWalks(const AbsorbingChain &chain, std::size_t start,
                     std::size_t num_walks, std::uint64_t seed,
                     unsigned threads) {
    return simulateWalkStats(chain, start, num_walks, seed, threads).mean;
}

namespace {

std::vector<std::size_t> descendingArgsort(const Vector &scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    // Ties break toward the lower token index. Scores within 1e-12
    // (relative) of a group leader count as tied, so symmetric operators
    // rank identically regardless of last-ulp solver noise.
    std::size_t group_start = 0;
    for (std::size_t i = 1; i <= order.size(); ++i) {
        const double leader = scores[order[group_start]];
        const double tol = 1e-12 * std::max(1.0, std::abs(leader));
        if (i == order.size() || leader - scores[order[i]] > tol) {
            std::sort(order.begin() + group_start, order.begin() + i);
            group_start = i;
        }
    }
    return order;
}

} // namespace

RankingComparison oneHopVsMultihopRanking(const AffinityMatrix &a_hat,
                                          double gamma) {
    const std::size_t n = a_hat.nTokens();
    Vector one_hop(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            one_hop[j] += a_hat.mat(i, j);
        }
    }
    const AbsorbingChain chain = buildAbsorbingChain(a_hat, gamma);
    const FundamentalMatrix fm = fundamentalMatrix(chain);
    WalkCentralities cent = walkCentralities(fm);

    RankingComparison cmp;
    cmp.one_hop_rank = descendingArgsort(one_hop);
    cmp.katz_rank = descendingArgsort(cent.c_in);
    cmp.one_hop_scores = std::move(one_hop);
    cmp.katz_scores = std::move(cent.c_in);
    return cmp;
}

AffinityMatrix multihopDemoFixture() {
    // Raw weights: 1->0 and 2->0 at 0.35 each, 0->3 at 0.65, 3->4 at 0.66,
    // normalized to unit Frobenius norm. Token 0 then collects the largest
    // one-hop column mass (0.35 + 0.35 vs 0.65 / 0.66) while walks pile up
    // on token 4 through the 0->3->4 chain.
    Matrix raw(5, 5);
    raw(1, 0) = 0.35;
    raw(2, 0) = 0.35;
    raw(0, 3) = 0.65;
    raw(3, 4) = 0.66;
    const double norm = frobeniusNorm(raw);
    for (double &x : raw.data()) {
        x /= norm;
    }
    return AffinityMatrix(std::move(raw), kDefaultEpsilon);
}

} // namespace infsa
