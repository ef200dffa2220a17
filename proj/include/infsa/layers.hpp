#ifndef INFSA_LAYERS_HPP_
#define INFSA_LAYERS_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include <infsa/attention_graph.hpp>
#include <infsa/matrix.hpp>
#include <infsa/path_integral.hpp>

namespace infsa {

/**
 * Parameters of one linear-variant head. The query projection is tied
 * (K = Q); values keep their own projection. gamma scales the pooled
 * context (w = gamma * a), epsilon floors every normalization.
 */
struct LinfsaHeadParams {
    Matrix w_q;                       // d_model x d_h
    Matrix w_v;                       // d_model x d_h
    double gamma = kDefaultGamma;
    double epsilon = kDefaultEpsilon;
};

/// Parameters of one full-attention head (separate Q, K, V projections).
struct PureHeadParams {
    Matrix w_q;                       // d_model x d_h
    Matrix w_k;
    Matrix w_v;
    double epsilon = kDefaultEpsilon;
    Activation activation = Activation::ReLU;
};

struct MultiHeadConfig {
    std::size_t n_heads;
    std::size_t d_h;
    std::size_t d_model;

    /// Throws ConfigError unless n_heads * d_h == d_model.
    void validate() const;
};

enum class Variant { Pure, Linear };

/**
 * One pre-LN transformer block: out = Y + MLP(LN2(Y)) with
 * Y = X + Attn(LN1(X)). The attention sublayer is either the full
 * per-head operator (pure) or the broadcast pooled context (linear);
 * head outputs are concatenated and passed through one output projection.
 */
struct BlockParams {
    std::vector<PureHeadParams> pure_heads;     // used by Variant::Pure
    std::vector<LinfsaHeadParams> linear_heads; // used by Variant::Linear
    Matrix w_out;                               // d_model x d_model
    Vector ln1_scale, ln1_shift;                // d_model
    Vector ln2_scale, ln2_shift;
    Matrix ff1;                                 // d_model x d_ff
    Vector ff1_bias;                            // d_ff
    Matrix ff2;                                 // d_ff x d_model
    Vector ff2_bias;                            // d_model
};

/// Random initialization for tests and the CLI; layer norms start at
/// identity (scale 1, shift 0), weights uniform in (-scale, scale).
/// `act` selects the kernel gate of pure heads (ablation variants).
BlockParams randomBlockParams(const MultiHeadConfig &cfg, Variant variant,
                              std::uint64_t seed, std::size_t d_ff,
                              double scale = 0.5,
                              double gamma = kDefaultGamma,
                              double epsilon = kDefaultEpsilon,
                              Activation act = Activation::ReLU);

/**
 * Position-shared token weights of the linear head:
 *   e_i = ||Q_i||_2,  alpha = e / (sum e + eps),  qbar = sum_i alpha_i Q_i,
 *   S_j = [qbar . Q_j]_+,  a = S / (sum S + eps)     (K = Q).
 * A single vector comes out, not one row per query: the weighting is query
 * independent by construction. When every score vanishes (sum S = 0) the
 * uniform fallback 1/N is returned and *degenerate is set.
 */
Vector linfsaWeights(const TokenFeatures &q, double epsilon = kDefaultEpsilon,
                     bool *degenerate = nullptr);

struct LinfsaHeadOutput {
    Vector h; // pooled context, broadcast to every position
    Vector a; // token weights
    bool degenerate = false;
};

/**
 * Forward pass of one linear head on unprojected input x (N x d_model):
 * Q = x w_q (= K), V = x w_v, h = V^T (gamma a). The per-position output
 * is h at every row, so the head's token-output matrix has rank <= 1.
 */
LinfsaHeadOutput linfsaHeadForward(const TokenFeatures &x,
                                   const LinfsaHeadParams &params);

/// Gradients of a scalar loss through one linear head, given dL/dh.
struct LinfsaHeadGrads {
    Matrix d_w_q;
    Matrix d_w_v;
    Matrix d_x;
};

LinfsaHeadGrads linfsaHeadBackward(const TokenFeatures &x,
                                   const LinfsaHeadParams &params,
                                   const Vector &d_h);

/**
 * Full-attention sublayer: per head, Z = A_hat V with A_hat built from this
 * layer's Q and K; head outputs concatenated and output-projected. Returns
 * an N x d_model matrix (pre-residual). Feeds layerwiseAccumulate when
 * stacked.
 */
Matrix pureInfsaLayer(const TokenFeatures &x, const BlockParams &params);

struct PureLayerGrads {
    std::vector<Matrix> d_w_q, d_w_k, d_w_v; // one per head
    Matrix d_w_out;
    Matrix d_x;
};

PureLayerGrads pureInfsaLayerBackward(const TokenFeatures &x,
                                      const BlockParams &params,
                                      const Matrix &d_out);

TokenFeatures multiheadBlockForward(const TokenFeatures &x,
                                    const MultiHeadConfig &cfg,
                                    const BlockParams &params,
                                    Variant variant);

struct BlockGrads {
    std::vector<Matrix> d_w_q, d_w_k, d_w_v; // d_w_k unused by Linear
    Matrix d_w_out;
    Vector d_ln1_scale, d_ln1_shift, d_ln2_scale, d_ln2_shift;
    Matrix d_ff1;
    Vector d_ff1_bias;
    Matrix d_ff2;
    Vector d_ff2_bias;
    Matrix d_x;
};

BlockGrads multiheadBlockBackward(const TokenFeatures &x,
                                  const MultiHeadConfig &cfg,
                                  const BlockParams &params, Variant variant,
                                  const Matrix &d_out);

/**
 * The normalized score map F(x) = [qbar^T K]_+ / (||[qbar^T K]_+||_1 + eps)
 * on the nonnegative cone, with qbar built from the fixed per-row norms of
 * Q. F is positively 1-homogeneous (exactly: the weighting does not read x,
 * so F(lambda x) = F(x)) and nonnegativity preserving. Degenerate numerator
 * falls back to uniform, consistent with linfsaWeights.
 */
Vector perronMapF(const Vector &x, const TokenFeatures &q,
                  double epsilon = kDefaultEpsilon);

struct IterateFResult {
    Vector v;
    std::size_t iters;
    bool converged;
    bool degenerate;
};

/**
 * Iterates F from the uniform start until successive iterates agree in l1
 * norm within tol. Reports the number of applications needed to reach the
 * fixed direction; non-convergence returns the last iterate with the flag
 * cleared rather than throwing.
 */
IterateFResult iterateF(const TokenFeatures &q,
                        double epsilon = kDefaultEpsilon,
                        std::size_t max_iters = 200, double tol = 1e-12);

} // namespace infsa

#endif // INFSA_LAYERS_HPP_
