#ifndef INFSA_ATTENTION_GRAPH_HPP_
#define INFSA_ATTENTION_GRAPH_HPP_

#include <cstddef>

#include <infsa/matrix.hpp>

namespace infsa {

/// Default normalization floor used throughout the library.
inline constexpr double kDefaultEpsilon = 1e-6;

/// Elementwise gate applied to the raw token-affinity kernel.
/// ReLU is the default; Gelu and Abs are selectable ablation variants.
/// Only ReLU and Abs guarantee a nonnegative operator.
enum class Activation { ReLU, Gelu, Abs };

double applyActivation(Activation act, double x);

/**
 * Token feature block: N token rows, each a d-dimensional embedding.
 * Houses query/key/value matrices and per-head projections alike.
 */
struct TokenFeatures {
    Matrix mat;

    TokenFeatures() = default;
    explicit TokenFeatures(Matrix m);

    std::size_t nTokens() const { return mat.rows(); }
    std::size_t dim() const { return mat.cols(); }
};

/**
 * Nonnegative attention operator normalized by total energy:
 * gate(Q K^T) divided by its Frobenius norm (plus floor), so the Frobenius
 * norm is at most 1 and strictly below 1 for nonzero input. Row sums are
 * not constrained, unlike softmax attention.
 */
struct AffinityMatrix {
    Matrix mat;
    double epsilon = kDefaultEpsilon;

    AffinityMatrix() = default;
    AffinityMatrix(Matrix m, double eps);

    std::size_t nTokens() const { return mat.rows(); }
};

/**
 * Builds the affinity operator from query and key features:
 * raw kernel gate(Q K^T), then division by (Frobenius norm + epsilon).
 * No 1/sqrt(d) temperature is applied: the normalization makes any
 * positive pre-scale a no-op on the result.
 */
AffinityMatrix buildAffinity(const TokenFeatures &q, const TokenFeatures &k,
                             double epsilon = kDefaultEpsilon,
                             Activation act = Activation::ReLU,
                             unsigned threads = 1);

/// One diffusion step on the token graph: Y = A V.
TokenFeatures diffuse(const AffinityMatrix &a_hat, const TokenFeatures &v);

struct ContractivityCheck {
    bool ok;
    double rho_estimate;
};

/**
 * Estimates the spectral radius of the operator by power iteration and
 * checks gamma * rho < 1, the condition for the discounted series to
 * converge. A zero or nilpotent operator reports rho_estimate = 0 (ok).
 */
ContractivityCheck assertContractive(const AffinityMatrix &a_hat, double gamma);

/// Spectral-radius estimate for a plain square nonnegative operator.
/// Degenerate (annihilating) operators report 0.
double spectralRadiusEstimate(const Matrix &a);

} // namespace infsa

#endif // INFSA_ATTENTION_GRAPH_HPP_
