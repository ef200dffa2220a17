#ifndef INFSA_VALIDATION_HPP_
#define INFSA_VALIDATION_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <infsa/attention_graph.hpp>
#include <infsa/matrix.hpp>

namespace infsa {

/// Scalar objective paired with its hand-derived gradient.
struct ScalarFunction {
    std::function<double(const Vector &)> value;
    std::function<Vector(const Vector &)> gradient;
};

inline constexpr double kDefaultFdStep = 1e-6;

/**
 * Central-difference gradient check. Returns the maximum over coordinates
 * of |analytic - fd| / max(|analytic|, |fd|, 1e-8). The step default of
 * 1e-6 balances truncation against rounding at double precision; failures
 * above ~1e-5 indicate a wrong derivative rather than noise.
 * Throws EvaluationError if the objective returns a non-finite value.
 */
double gradcheckFd(const ScalarFunction &f, const Vector &theta,
                   double step = kDefaultFdStep);

/**
 * Spearman rank correlation: Pearson correlation of ranks, with ties
 * assigned average ranks. Throws UndefinedCorrelationError when either
 * input is constant.
 */
double spearman(const Vector &u, const Vector &v);

/// Cosine similarity of two vectors.
double cosineSimilarity(const Vector &u, const Vector &v);

/**
 * One sample of the eigenvector-alignment protocol: build the affinity
 * operator from Q (= K), power-iterate to the dominant direction, rebuild
 * the closed-form token weights, and compare the two. Zero operators and
 * zero score vectors are flagged degenerate (excluded from aggregates);
 * all-tied ranks leave spearman undefined.
 */
struct AlignmentSample {
    double cosine = 0.0;
    double spearman = 0.0;
    bool spearman_defined = false;
    bool degenerate = false;
};

AlignmentSample eigenvectorAlignment(const TokenFeatures &q,
                                     double epsilon = kDefaultEpsilon,
                                     std::size_t t_pow = 200);

/// Aggregate over valid samples.
struct AlignmentResult {
    double cosine = 0.0;   // mean over valid samples
    double spearman = 0.0; // mean over samples with defined rank correlation
    std::size_t n_samples = 0;
    std::size_t n_degenerate = 0;
    std::size_t n_spearman = 0;
};

/**
 * Runs the alignment protocol over `samples` random nonnegative token
 * batches (entries uniform in [0, 1)) and aggregates in sample order.
 */
AlignmentResult alignmentBatch(std::size_t samples, std::size_t tokens,
                               std::size_t dim, std::uint64_t seed,
                               double epsilon = kDefaultEpsilon,
                               std::size_t t_pow = 200);

/// One gradient-checked operation: name and worst relative error seen.
struct OpGradcheck {
    std::string op;
    double max_rel_err;
};

/**
 * Gradient-checks every differentiable layer operation (linear head, full
 * attention sublayer, and the whole pre-LN block in both variants) on
 * small seeded-random instances, differentiating with respect to all
 * weights and the input.
 */
std::vector<OpGradcheck> layerGradcheckSuite(std::uint64_t seed,
                                             double step = kDefaultFdStep);

} // namespace infsa

#endif // INFSA_VALIDATION_HPP_
