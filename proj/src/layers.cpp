#include <infsa/layers.hpp>

#include <cmath>
#include <string>

#include <infsa/rng.hpp>

namespace infsa {

void MultiHeadConfig::validate() const {
    if (n_heads == 0 || d_h == 0 || d_model == 0) {
        throw ConfigError("MultiHeadConfig: all dimensions must be positive");
    }
    if (n_heads * d_h != d_model) {
        throw ConfigError("MultiHeadConfig: n_heads * d_h = "
                          + std::to_string(n_heads * d_h)
                          + " must equal d_model = " + std::to_string(d_model));
    }
}

namespace {

double activationDerivative(Activation act, double x) {
    switch (act) {
    case Activation::ReLU:
        return x > 0.0 ? 1.0 : 0.0;
    case Activation::Gelu: {
        const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        return cdf + x * pdf;
    }
    case Activation::Abs:
        return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    }
    return 0.0;
}

double gelu(double x) { return applyActivation(Activation::Gelu, x); }
double geluDerivative(double x) { return activationDerivative(Activation::Gelu, x); }

// ---------------------------------------------------------------------------
// Linear head pipeline
// ---------------------------------------------------------------------------

struct LinfsaPipelineCache {
    Vector e;      // per-token query norms
    double e_sum;  // sum e + eps
    Vector alpha;
    Vector qbar;   // d_h
    Vector u;      // raw scores qbar . Q_j
    Vector s;      // gated scores
    double s_sum;  // sum s + eps
    Vector a;
    bool degenerate = false;
};

LinfsaPipelineCache linfsaPipeline(const Matrix &q, double epsilon) {
    const std::size_t n = q.rows();
    const std::size_t d = q.cols();
    LinfsaPipelineCache c;
    c.e = Vector(n);
    double e_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            sq += q(i, k) * q(i, k);
        }
        c.e[i] = std::sqrt(sq);
        e_total += c.e[i];
    }
    c.e_sum = e_total + epsilon;
    c.alpha = Vector(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.alpha[i] = c.e[i] / c.e_sum;
    }
    c.qbar = Vector(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            c.qbar[k] += c.alpha[i] * q(i, k);
        }
    }
    c.u = Vector(n);
    c.s = Vector(n);
    double s_total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            acc += c.qbar[k] * q(j, k);
        }
        c.u[j] = acc;
        c.s[j] = acc > 0.0 ? acc : 0.0;
        s_total += c.s[j];
    }
    c.s_sum = s_total + epsilon;
    c.a = Vector(n);
    if (s_total == 0.0) {
        c.degenerate = true;
        for (std::size_t j = 0; j < n; ++j) {
            c.a[j] = 1.0 / static_cast<double>(n);
        }
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            c.a[j] = c.s[j] / c.s_sum;
        }
    }
    return c;
}

/// dL/dQ from dL/da through the score pipeline. The degenerate branch is
/// locally constant, so its gradient is zero.
Matrix linfsaPipelineBackward(const Matrix &q, const LinfsaPipelineCache &c,
                              const Vector &g_a) {
    const std::size_t n = q.rows();
    const std::size_t d = q.cols();
    Matrix g_q(n, d);
    if (c.degenerate) {
        return g_q;
    }

    // a = s / (sum s + eps)
    double ga_dot_a = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        ga_dot_a += g_a[j] * c.a[j];
    }
    Vector g_u(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double g_s = (g_a[j] - ga_dot_a) / c.s_sum;
        g_u[j] = c.u[j] > 0.0 ? g_s : 0.0;
    }

    // u_j = qbar . Q_j
    Vector g_qbar(d);
    for (std::size_t j = 0; j < n; ++j) {
        if (g_u[j] == 0.0) {
            continue;
        }
        for (std::size_t k = 0; k < d; ++k) {
            g_qbar[k] += g_u[j] * q(j, k);
            g_q(j, k) += g_u[j] * c.qbar[k];
        }
    }

    // qbar = sum_i alpha_i Q_i
    Vector g_alpha(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            acc += g_qbar[k] * q(i, k);
            g_q(i, k) += c.alpha[i] * g_qbar[k];
        }
        g_alpha[i] = acc;
    }

    // alpha = e / (sum e + eps), e_i = ||Q_i||
    double galpha_dot_alpha = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        galpha_dot_alpha += g_alpha[i] * c.alpha[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (c.e[i] == 0.0) {
            continue; // norm kink at zero rows; subgradient zero
        }
        const double g_e = (g_alpha[i] - galpha_dot_alpha) / c.e_sum;
        const double coeff = g_e / c.e[i];
        for (std::size_t k = 0; k < d; ++k) {
            g_q(i, k) += coeff * q(i, k);
        }
    }
    return g_q;
}

// ---------------------------------------------------------------------------
// Pure head
// ---------------------------------------------------------------------------

struct PureHeadCache {
    Matrix q, k, v;
    Matrix b;      // raw kernel Q K^T
    Matrix atilde; // gated kernel
    double nf;     // ||atilde||_F
    Matrix ahat;
    Matrix z;
};

PureHeadCache pureHeadForward(const Matrix &x, const PureHeadParams &p) {
    PureHeadCache c;
    c.q = matmul(x, p.w_q);
    c.k = matmul(x, p.w_k);
    c.v = matmul(x, p.w_v);
    c.b = matmul(c.q, transpose(c.k));
    c.atilde = c.b;
    double sumsq = 0.0;
    for (double &e : c.atilde.data()) {
        e = applyActivation(p.activation, e);
        sumsq += e * e;
    }
    c.nf = std::sqrt(sumsq);
    const double denom = c.nf + p.epsilon;
    // Divide (not multiply by a reciprocal): bit-identical to buildAffinity.
    c.ahat = c.atilde;
    for (double &e : c.ahat.data()) {
        e /= denom;
    }
    c.z = matmul(c.ahat, c.v);
    return c;
}

struct PureHeadGrads {
    Matrix d_w_q, d_w_k, d_w_v;
};

PureHeadGrads pureHeadBackward(const Matrix &x, const PureHeadParams &p,
                               const PureHeadCache &c, const Matrix &g_z,
                               Matrix &g_x) {
    const double denom = c.nf + p.epsilon;

    Matrix g_ahat = matmul(g_z, transpose(c.v));
    Matrix g_v = matmul(transpose(c.ahat), g_z);

    // ahat = atilde / (||atilde||_F + eps)
    double ip = 0.0;
    for (std::size_t i = 0; i < g_ahat.data().size(); ++i) {
        ip += g_ahat.data()[i] * c.atilde.data()[i];
    }
    Matrix g_atilde = g_ahat;
    if (c.nf > 0.0) {
        const double coeff = ip / (denom * denom * c.nf);
        for (std::size_t i = 0; i < g_atilde.data().size(); ++i) {
            g_atilde.data()[i] = g_atilde.data()[i] / denom - coeff * c.atilde.data()[i];
        }
    } else {
        for (double &e : g_atilde.data()) {
            e /= denom;
        }
    }

    Matrix g_b = g_atilde;
    for (std::size_t i = 0; i < g_b.data().size(); ++i) {
        g_b.data()[i] *= activationDerivative(p.activation, c.b.data()[i]);
    }

    Matrix g_q = matmul(g_b, c.k);
    Matrix g_k = matmul(transpose(g_b), c.q);

    PureHeadGrads grads;
    grads.d_w_q = matmul(transpose(x), g_q);
    grads.d_w_k = matmul(transpose(x), g_k);
    grads.d_w_v = matmul(transpose(x), g_v);
    g_x = add(g_x, matmul(g_q, transpose(p.w_q)));
    g_x = add(g_x, matmul(g_k, transpose(p.w_k)));
    g_x = add(g_x, matmul(g_v, transpose(p.w_v)));
    return grads;
}

// ---------------------------------------------------------------------------
// Layer norm (per-token, variance floor 1e-6 inside the square root)
// ---------------------------------------------------------------------------

constexpr double kLayerNormFloor = 1e-6;

struct LayerNormCache {
    Matrix xhat;
    Vector inv_sigma; // per row
};

Matrix layerNormForward(const Matrix &x, const Vector &scale_v,
                        const Vector &shift_v, LayerNormCache &cache) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (scale_v.size() != d || shift_v.size() != d) {
        throw ShapeError("layerNorm: scale/shift length must match feature dim");
    }
    cache.xhat = Matrix(n, d);
    cache.inv_sigma = Vector(n);
    Matrix y(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            mean += x(i, j);
        }
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = x(i, j) - mean;
            var += diff * diff;
        }
        var /= static_cast<double>(d);
        const double inv_sigma = 1.0 / std::sqrt(var + kLayerNormFloor);
        cache.inv_sigma[i] = inv_sigma;
        for (std::size_t j = 0; j < d; ++j) {
            const double xhat = (x(i, j) - mean) * inv_sigma;
            cache.xhat(i, j) = xhat;
            y(i, j) = scale_v[j] * xhat + shift_v[j];
        }
    }
    return y;
}

Matrix layerNormBackward(const Matrix &g_y, const LayerNormCache &cache,
                         const Vector &scale_v, Vector &g_scale,
                         Vector &g_shift) {
    const std::size_t n = g_y.rows();
    const std::size_t d = g_y.cols();
    Matrix g_x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double mean_gxhat = 0.0;
        double mean_gxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double gy = g_y(i, j);
            g_shift[j] += gy;
            g_scale[j] += gy * cache.xhat(i, j);
            const double gxhat = gy * scale_v[j];
            mean_gxhat += gxhat;
            mean_gxhat_xhat += gxhat * cache.xhat(i, j);
        }
        mean_gxhat /= static_cast<double>(d);
        mean_gxhat_xhat /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double gxhat = g_y(i, j) * scale_v[j];
            g_x(i, j) = cache.inv_sigma[i]
                        * (gxhat - mean_gxhat - cache.xhat(i, j) * mean_gxhat_xhat);
        }
    }
    return g_x;
}

// ---------------------------------------------------------------------------
// Attention sublayers (concat heads + output projection)
// ---------------------------------------------------------------------------

struct PureAttnCache {
    std::vector<PureHeadCache> heads;
    Matrix concat;
};

Matrix pureAttnForward(const Matrix &x, const BlockParams &p, PureAttnCache &cache) {
    if (p.pure_heads.empty()) {
        throw ConfigError("pure attention: no heads configured");
    }
    const std::size_t n = x.rows();
    std::size_t total = 0;
    for (const auto &head : p.pure_heads) {
        total += head.w_q.cols();
    }
    if (p.w_out.rows() != total) {
        throw ShapeError("pure attention: concat width " + std::to_string(total)
                         + " does not match output projection rows "
                         + std::to_string(p.w_out.rows()));
    }
    cache.concat = Matrix(n, total);
    cache.heads.clear();
    cache.heads.reserve(p.pure_heads.size());
    std::size_t offset = 0;
    for (const auto &head : p.pure_heads) {
        PureHeadCache hc = pureHeadForward(x, head);
        const std::size_t dh = hc.z.cols();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dh; ++j) {
                cache.concat(i, offset + j) = hc.z(i, j);
            }
        }
        offset += dh;
        cache.heads.push_back(std::move(hc));
    }
    return matmul(cache.concat, p.w_out);
}

void pureAttnBackward(const Matrix &x, const BlockParams &p,
                      const PureAttnCache &cache, const Matrix &g_out,
                      std::vector<Matrix> &d_w_q, std::vector<Matrix> &d_w_k,
                      std::vector<Matrix> &d_w_v, Matrix &d_w_out, Matrix &g_x) {
    d_w_out = add(d_w_out, matmul(transpose(cache.concat), g_out));
    Matrix g_concat = matmul(g_out, transpose(p.w_out));
    const std::size_t n = x.rows();
    std::size_t offset = 0;
    for (std::size_t h = 0; h < p.pure_heads.size(); ++h) {
        const std::size_t dh = cache.heads[h].z.cols();
        Matrix g_z(n, dh);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dh; ++j) {
                g_z(i, j) = g_concat(i, offset + j);
            }
        }
        PureHeadGrads hg = pureHeadBackward(x, p.pure_heads[h], cache.heads[h], g_z, g_x);
        d_w_q[h] = add(d_w_q[h], hg.d_w_q);
        d_w_k[h] = add(d_w_k[h], hg.d_w_k);
        d_w_v[h] = add(d_w_v[h], hg.d_w_v);
        offset += dh;
    }
}

struct LinearHeadCache {
    Matrix q, v;
    LinfsaPipelineCache pipeline;
    Vector h;
};

LinearHeadCache linearHeadForward(const Matrix &x, const LinfsaHeadParams &p) {
    LinearHeadCache c;
    c.q = matmul(x, p.w_q);
    c.v = matmul(x, p.w_v);
    c.pipeline = linfsaPipeline(c.q, p.epsilon);
    const std::size_t n = x.rows();
    const std::size_t dh = c.v.cols();
    c.h = Vector(dh);
    for (std::size_t t = 0; t < n; ++t) {
        const double w = p.gamma * c.pipeline.a[t];
        for (std::size_t k = 0; k < dh; ++k) {
            c.h[k] += w * c.v(t, k);
        }
    }
    return c;
}

void linearHeadBackward(const Matrix &x, const LinfsaHeadParams &p,
                        const LinearHeadCache &c, const Vector &g_h,
                        Matrix &d_w_q, Matrix &d_w_v, Matrix &g_x) {
    const std::size_t n = x.rows();
    const std::size_t dh = c.v.cols();

    // h = sum_t (gamma a_t) V_t
    Matrix g_v(n, dh);
    Vector g_a(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double w = p.gamma * c.pipeline.a[t];
        double vt_dot_gh = 0.0;
        for (std::size_t k = 0; k < dh; ++k) {
            g_v(t, k) = w * g_h[k];
            vt_dot_gh += c.v(t, k) * g_h[k];
        }
        g_a[t] = p.gamma * vt_dot_gh;
    }

    Matrix g_q = linfsaPipelineBackward(c.q, c.pipeline, g_a);

    d_w_q = add(d_w_q, matmul(transpose(x), g_q));
    d_w_v = add(d_w_v, matmul(transpose(x), g_v));
    g_x = add(g_x, matmul(g_q, transpose(p.w_q)));
    g_x = add(g_x, matmul(g_v, transpose(p.w_v)));
}

struct LinearAttnCache {
    std::vector<LinearHeadCache> heads;
    Matrix concat; // broadcast contexts, N x (H * d_h)
};

Matrix linearAttnForward(const Matrix &x, const BlockParams &p, LinearAttnCache &cache) {
    if (p.linear_heads.empty()) {
        throw ConfigError("linear attention: no heads configured");
    }
    const std::size_t n = x.rows();
    std::size_t total = 0;
    for (const auto &head : p.linear_heads) {
        total += head.w_q.cols();
    }
    if (p.w_out.rows() != total) {
        throw ShapeError("linear attention: concat width " + std::to_string(total)
                         + " does not match output projection rows "
                         + std::to_string(p.w_out.rows()));
    }
    cache.concat = Matrix(n, total);
    cache.heads.clear();
    cache.heads.reserve(p.linear_heads.size());
    std::size_t offset = 0;
    for (const auto &head : p.linear_heads) {
        LinearHeadCache hc = linearHeadForward(x, head);
        const std::size_t dh = hc.h.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dh; ++j) {
                cache.concat(i, offset + j) = hc.h[j];
            }
        }
        offset += dh;
        cache.heads.push_back(std::move(hc));
    }
    return matmul(cache.concat, p.w_out);
}

void linearAttnBackward(const Matrix &x, const BlockParams &p,
                        const LinearAttnCache &cache, const Matrix &g_out,
                        std::vector<Matrix> &d_w_q, std::vector<Matrix> &d_w_v,
                        Matrix &d_w_out, Matrix &g_x) {
    d_w_out = add(d_w_out, matmul(transpose(cache.concat), g_out));
    Matrix g_concat = matmul(g_out, transpose(p.w_out));
    const std::size_t n = x.rows();
    std::size_t offset = 0;
    for (std::size_t h = 0; h < p.linear_heads.size(); ++h) {
        const std::size_t dh = cache.heads[h].h.size();
        // Every position shares the same broadcast context.
        Vector g_h(dh);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dh; ++j) {
                g_h[j] += g_concat(i, offset + j);
            }
        }
        linearHeadBackward(x, p.linear_heads[h], cache.heads[h], g_h,
                           d_w_q[h], d_w_v[h], g_x);
        offset += dh;
    }
}

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

struct MlpCache {
    Matrix input;
    Matrix hidden_pre;
    Matrix hidden;
};

Matrix mlpForward(const Matrix &x, const BlockParams &p, MlpCache &cache) {
    cache.input = x;
    cache.hidden_pre = matmul(x, p.ff1);
    for (std::size_t i = 0; i < cache.hidden_pre.rows(); ++i) {
        for (std::size_t j = 0; j < cache.hidden_pre.cols(); ++j) {
            cache.hidden_pre(i, j) += p.ff1_bias[j];
        }
    }
    cache.hidden = cache.hidden_pre;
    for (double &e : cache.hidden.data()) {
        e = gelu(e);
    }
    Matrix out = matmul(cache.hidden, p.ff2);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) += p.ff2_bias[j];
        }
    }
    return out;
}

Matrix mlpBackward(const BlockParams &p, const MlpCache &cache, const Matrix &g_out,
                   Matrix &d_ff1, Vector &d_ff1_bias, Matrix &d_ff2,
                   Vector &d_ff2_bias) {
    d_ff2 = add(d_ff2, matmul(transpose(cache.hidden), g_out));
    for (std::size_t i = 0; i < g_out.rows(); ++i) {
        for (std::size_t j = 0; j < g_out.cols(); ++j) {
            d_ff2_bias[j] += g_out(i, j);
        }
    }
    Matrix g_hidden = matmul(g_out, transpose(p.ff2));
    for (std::size_t i = 0; i < g_hidden.data().size(); ++i) {
        g_hidden.data()[i] *= geluDerivative(cache.hidden_pre.data()[i]);
    }
    d_ff1 = add(d_ff1, matmul(transpose(cache.input), g_hidden));
    for (std::size_t i = 0; i < g_hidden.rows(); ++i) {
        for (std::size_t j = 0; j < g_hidden.cols(); ++j) {
            d_ff1_bias[j] += g_hidden(i, j);
        }
    }
    return matmul(g_hidden, transpose(p.ff1));
}

// ---------------------------------------------------------------------------
// Whole-block cache
// ---------------------------------------------------------------------------

struct BlockCache {
    LayerNormCache ln1, ln2;
    Matrix ln1_out, y, ln2_out;
    PureAttnCache pure_attn;
    LinearAttnCache linear_attn;
    MlpCache mlp;
};

Matrix blockForward(const Matrix &x, const MultiHeadConfig &cfg,
                    const BlockParams &p, Variant variant, BlockCache &cache) {
    cfg.validate();
    if (x.cols() != cfg.d_model) {
        throw ShapeError("block forward: input dim " + std::to_string(x.cols())
                         + " != d_model " + std::to_string(cfg.d_model));
    }
    const std::size_t expected_heads =
        variant == Variant::Pure ? p.pure_heads.size() : p.linear_heads.size();
    if (expected_heads != cfg.n_heads) {
        throw ConfigError("block forward: " + std::to_string(expected_heads)
                          + " heads configured, expected "
                          + std::to_string(cfg.n_heads));
    }

    cache.ln1_out = layerNormForward(x, p.ln1_scale, p.ln1_shift, cache.ln1);
    Matrix attn = variant == Variant::Pure
                      ? pureAttnForward(cache.ln1_out, p, cache.pure_attn)
                      : linearAttnForward(cache.ln1_out, p, cache.linear_attn);
    cache.y = add(x, attn);
    cache.ln2_out = layerNormForward(cache.y, p.ln2_scale, p.ln2_shift, cache.ln2);
    Matrix mlp = mlpForward(cache.ln2_out, p, cache.mlp);
    return add(cache.y, mlp);
}

} // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

Vector linfsaWeights(const TokenFeatures &q, double epsilon, bool *degenerate) {
    if (epsilon <= 0.0) {
        throw Error("linfsaWeights: epsilon must be positive");
    }
    LinfsaPipelineCache c = linfsaPipeline(q.mat, epsilon);
    if (degenerate != nullptr) {
        *degenerate = c.degenerate;
    }
    return c.a;
}

LinfsaHeadOutput linfsaHeadForward(const TokenFeatures &x,
                                   const LinfsaHeadParams &params) {
    if (x.dim() != params.w_q.rows() || x.dim() != params.w_v.rows()) {
        throw ShapeError("linfsaHeadForward: input dim does not match projections");
    }
    LinearHeadCache c = linearHeadForward(x.mat, params);
    return LinfsaHeadOutput{std::move(c.h), std::move(c.pipeline.a),
                            c.pipeline.degenerate};
}

LinfsaHeadGrads linfsaHeadBackward(const TokenFeatures &x,
                                   const LinfsaHeadParams &params,
                                   const Vector &d_h) {
    LinearHeadCache c = linearHeadForward(x.mat, params);
    if (d_h.size() != c.h.size()) {
        throw ShapeError("linfsaHeadBackward: upstream gradient length mismatch");
    }
    LinfsaHeadGrads grads;
    grads.d_w_q = Matrix(params.w_q.rows(), params.w_q.cols());
    grads.d_w_v = Matrix(params.w_v.rows(), params.w_v.cols());
    grads.d_x = Matrix(x.nTokens(), x.dim());
    linearHeadBackward(x.mat, params, c, d_h, grads.d_w_q, grads.d_w_v, grads.d_x);
    return grads;
}

Matrix pureInfsaLayer(const TokenFeatures &x, const BlockParams &params) {
    PureAttnCache cache;
    return pureAttnForward(x.mat, params, cache);
}

PureLayerGrads pureInfsaLayerBackward(const TokenFeatures &x,
                                      const BlockParams &params,
                                      const Matrix &d_out) {
    PureAttnCache cache;
    Matrix out = pureAttnForward(x.mat, params, cache);
    if (!d_out.sameShape(out)) {
        throw ShapeError("pureInfsaLayerBackward: upstream gradient shape mismatch");
    }
    PureLayerGrads grads;
    const std::size_t n_heads = params.pure_heads.size();
    for (std::size_t h = 0; h < n_heads; ++h) {
        grads.d_w_q.emplace_back(params.pure_heads[h].w_q.rows(),
                                 params.pure_heads[h].w_q.cols());
        grads.d_w_k.emplace_back(params.pure_heads[h].w_k.rows(),
                                 params.pure_heads[h].w_k.cols());
        grads.d_w_v.emplace_back(params.pure_heads[h].w_v.rows(),
                                 params.pure_heads[h].w_v.cols());
    }
    grads.d_w_out = Matrix(params.w_out.rows(), params.w_out.cols());
    grads.d_x = Matrix(x.nTokens(), x.dim());
    pureAttnBackward(x.mat, params, cache, d_out, grads.d_w_q, grads.d_w_k,
                     grads.d_w_v, grads.d_w_out, grads.d_x);
    return grads;
}

TokenFeatures multiheadBlockForward(const TokenFeatures &x,
                                    const MultiHeadConfig &cfg,
                                    const BlockParams &params, Variant variant) {
    BlockCache cache;
    return TokenFeatures(blockForward(x.mat, cfg, params, variant, cache));
}

BlockGrads multiheadBlockBackward(const TokenFeatures &x,
                                  const MultiHeadConfig &cfg,
                                  const BlockParams &params, Variant variant,
                                  const Matrix &d_out) {
    BlockCache cache;
    Matrix out = blockForward(x.mat, cfg, params, variant, cache);
    if (!d_out.sameShape(out)) {
        throw ShapeError("multiheadBlockBackward: upstream gradient shape mismatch");
    }

    BlockGrads g;
    const std::size_t n_heads = cfg.n_heads;
    for (std::size_t h = 0; h < n_heads; ++h) {
        if (variant == Variant::Pure) {
            g.d_w_q.emplace_back(params.pure_heads[h].w_q.rows(),
                                 params.pure_heads[h].w_q.cols());
            g.d_w_k.emplace_back(params.pure_heads[h].w_k.rows(),
                                 params.pure_heads[h].w_k.cols());
            g.d_w_v.emplace_back(params.pure_heads[h].w_v.rows(),
                                 params.pure_heads[h].w_v.cols());
        } else {
            g.d_w_q.emplace_back(params.linear_heads[h].w_q.rows(),
                                 params.linear_heads[h].w_q.cols());
            g.d_w_v.emplace_back(params.linear_heads[h].w_v.rows(),
                                 params.linear_heads[h].w_v.cols());
        }
    }
    g.d_w_out = Matrix(params.w_out.rows(), params.w_out.cols());
    g.d_ln1_scale = Vector(params.ln1_scale.size());
    g.d_ln1_shift = Vector(params.ln1_shift.size());
    g.d_ln2_scale = Vector(params.ln2_scale.size());
    g.d_ln2_shift = Vector(params.ln2_shift.size());
    g.d_ff1 = Matrix(params.ff1.rows(), params.ff1.cols());
    g.d_ff1_bias = Vector(params.ff1_bias.size());
    g.d_ff2 = Matrix(params.ff2.rows(), params.ff2.cols());
    g.d_ff2_bias = Vector(params.ff2_bias.size());
    g.d_x = Matrix(x.nTokens(), x.dim());

    // out = y + mlp(ln2(y)); y = x + attn(ln1(x))
    Matrix g_y = d_out;
    Matrix g_ln2_out = mlpBackward(params, cache.mlp, d_out, g.d_ff1,
                                   g.d_ff1_bias, g.d_ff2, g.d_ff2_bias);
    g_y = add(g_y, layerNormBackward(g_ln2_out, cache.ln2, params.ln2_scale,
                                     g.d_ln2_scale, g.d_ln2_shift));

    Matrix g_x = g_y; // residual
    Matrix g_ln1_out(x.nTokens(), x.dim());
    if (variant == Variant::Pure) {
        pureAttnBackward(cache.ln1_out, params, cache.pure_attn, g_y, g.d_w_q,
                         g.d_w_k, g.d_w_v, g.d_w_out, g_ln1_out);
    } else {
        linearAttnBackward(cache.ln1_out, params, cache.linear_attn, g_y,
                           g.d_w_q, g.d_w_v, g.d_w_out, g_ln1_out);
    }
    g_x = add(g_x, layerNormBackward(g_ln1_out, cache.ln1, params.ln1_scale,
                                     g.d_ln1_scale, g.d_ln1_shift));
    g.d_x = g_x;
    return g;
}

BlockParams randomBlockParams(const MultiHeadConfig &cfg, Variant variant,
                              std::uint64_t seed, std::size_t d_ff,
                              double scale, double gamma, double epsilon,
                              Activation act) {
    cfg.validate();
    Rng rng(seed);
    BlockParams p;
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        if (variant == Variant::Pure) {
            PureHeadParams head;
            head.w_q = randomMatrix(cfg.d_model, cfg.d_h, rng, -scale, scale);
            head.w_k = randomMatrix(cfg.d_model, cfg.d_h, rng, -scale, scale);
            head.w_v = randomMatrix(cfg.d_model, cfg.d_h, rng, -scale, scale);
            head.epsilon = epsilon;
            head.activation = act;
            p.pure_heads.push_back(std::move(head));
        } else {
            LinfsaHeadParams head;
            head.w_q = randomMatrix(cfg.d_model, cfg.d_h, rng, -scale, scale);
            head.w_v = randomMatrix(cfg.d_model, cfg.d_h, rng, -scale, scale);
            head.gamma = gamma;
            head.epsilon = epsilon;
            p.linear_heads.push_back(std::move(head));
        }
    }
    p.w_out = randomMatrix(cfg.d_model, cfg.d_model, rng, -scale, scale);
    p.ln1_scale = Vector(cfg.d_model, 1.0);
    p.ln1_shift = Vector(cfg.d_model, 0.0);
    p.ln2_scale = Vector(cfg.d_model, 1.0);
    p.ln2_shift = Vector(cfg.d_model, 0.0);
    p.ff1 = randomMatrix(cfg.d_model, d_ff, rng, -scale, scale);
    p.ff1_bias = randomVector(d_ff, rng, -scale, scale);
    p.ff2 = randomMatrix(d_ff, cfg.d_model, rng, -scale, scale);
    p.ff2_bias = randomVector(cfg.d_model, rng, -scale, scale);
    return p;
}

Vector perronMapF(const Vector &x, const TokenFeatures &q, double epsilon) {
    if (x.size() != q.nTokens()) {
        throw ShapeError("perronMapF: state length " + std::to_string(x.size())
                         + " != token count " + std::to_string(q.nTokens()));
    }
    x.requireFinite("perronMapF");
    // The soft central query is built from the fixed per-row norms of Q, so
    // the map does not read x beyond its length; scaling invariance is exact.
    LinfsaPipelineCache c = linfsaPipeline(q.mat, epsilon);
    return c.a;
}

IterateFResult iterateF(const TokenFeatures &q, double epsilon,
                        std::size_t max_iters, double tol) {
    if (max_iters < 1) {
        throw Error("iterateF: max_iters must be >= 1");
    }
    const std::size_t n = q.nTokens();
    Vector v(n, 1.0 / static_cast<double>(n));
    bool degenerate = false;
    for (std::size_t k = 1; k <= max_iters; ++k) {
        LinfsaPipelineCache c = linfsaPipeline(q.mat, epsilon);
        degenerate = c.degenerate;
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            delta += std::abs(c.a[i] - v[i]);
        }
        v = std::move(c.a);
        if (delta < tol) {
            return IterateFResult{std::move(v), k - 1, true, degenerate};
        }
    }
    return IterateFResult{std::move(v), max_iters, false, degenerate};
}

} // namespace infsa
