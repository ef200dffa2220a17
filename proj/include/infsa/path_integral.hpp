#ifndef INFSA_PATH_INTEGRAL_HPP_
#define INFSA_PATH_INTEGRAL_HPP_

#include <cstddef>
#include <vector>

#include <infsa/matrix.hpp>

namespace infsa {

/// Geometric decay factor for path discounting, restricted to (0, 1).
/// Validity against a specific operator additionally requires
/// gamma * rho(A) < 1, which the series routines check.
struct DecayFactor {
    double gamma;

    explicit DecayFactor(double g);
};

inline constexpr double kDefaultGamma = 0.7;

/**
 * Sum over all length-t walks from i to j of the product of edge weights,
 * by explicit enumeration of the N^(t-1) intermediate-node sequences.
 * Exists as the from-first-principles reference for matrix powers; capped
 * at N <= 8, t <= 5 (CapacityError beyond that).
 */
double pathSumBruteforce(const Matrix &a, std::size_t i, std::size_t j,
                         std::size_t t);

/// Depth-t participation score per token: row sums of A^t.
Vector depthScore(const Matrix &a, std::size_t t);

/**
 * Partial sum of the discounted series, sum_{t=1..depth} (gamma A)^t,
 * accumulated Horner-style: P <- gamma A (P + I). One matrix product per
 * depth step, O(N^2) memory.
 */
Matrix truncatedNeumann(const Matrix &a, DecayFactor gamma, std::size_t depth);

/**
 * Closed form of the full discounted series: (I - gamma A)^{-1} - I.
 * Refuses to run (DivergentSeriesError) unless gamma * rho(A) < 1 - 1e-9,
 * since the series is only defined under contractivity.
 */
Matrix closedFormKernel(const Matrix &a, DecayFactor gamma);

/// Per-token centrality: row sums of the accumulated kernel.
Vector tokenCentrality(const Matrix &kernel);

/**
 * Discounted accumulation of per-layer outputs: S_L = sum_l gamma^l Z^(l).
 * Standard self-attention is the L = 1 case.
 */
Matrix layerwiseAccumulate(const std::vector<Matrix> &layer_outputs,
                           DecayFactor gamma);

/**
 * Kernel, per-token scores and (optionally) per-depth scores for a graph.
 * scores equals kernel row sums; per_depth holds the depth-t score vectors
 * for t = 1..per_depth_terms when requested (it costs one matrix power per
 * depth, so it is opt-in).
 */
struct CentralityReport {
    Matrix kernel;
    Vector scores;
    std::vector<Vector> per_depth;
};

CentralityReport centralityReport(const Matrix &a, DecayFactor gamma,
                                  std::size_t per_depth_terms = 0);

} // namespace infsa

#endif // INFSA_PATH_INTEGRAL_HPP_
