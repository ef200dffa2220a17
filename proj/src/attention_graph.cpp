#include <infsa/attention_graph.hpp>

#include <cmath>
#include <string>

namespace infsa {

double applyActivation(Activation act, double x) {
    switch (act) {
    case Activation::ReLU:
        return x > 0.0 ? x : 0.0;
    case Activation::Gelu:
        // Exact erf-based form.
        return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
    case Activation::Abs:
        return std::abs(x);
    }
    return 0.0;
}

TokenFeatures::TokenFeatures(Matrix m) : mat(std::move(m)) {
    mat.requireFinite("TokenFeatures");
}

AffinityMatrix::AffinityMatrix(Matrix m, double eps) : mat(std::move(m)), epsilon(eps) {
    if (mat.rows() != mat.cols()) {
        throw ShapeError("AffinityMatrix: operator must be square, got "
                         + std::to_string(mat.rows()) + "x" + std::to_string(mat.cols()));
    }
    mat.requireFinite("AffinityMatrix");
}

AffinityMatrix buildAffinity(const TokenFeatures &q, const TokenFeatures &k,
                             double epsilon, Activation act, unsigned threads) {
    if (q.dim() != k.dim()) {
        throw ShapeError("buildAffinity: query dim " + std::to_string(q.dim())
                         + " != key dim " + std::to_string(k.dim()));
    }
    if (q.nTokens() != k.nTokens()) {
        throw ShapeError("buildAffinity: token counts differ");
    }
    if (epsilon <= 0.0) {
        throw Error("buildAffinity: epsilon must be positive");
    }

    const std::size_t n = q.nTokens();
    const std::size_t d = q.dim();
    Matrix raw(n, n);
    // gate(Q K^T), computed row against row so no transpose is materialized.
    parallelRows(n, threads, [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    acc += q.mat(i, c) * k.mat(j, c);
                }
                raw(i, j) = applyActivation(act, acc);
            }
        }
    });
    // Frobenius norm accumulated row-major in one fixed pass.
    double sumsq = 0.0;
    for (double x : raw.data()) {
        sumsq += x * x;
    }
    const double denom = std::sqrt(sumsq) + epsilon;
    for (double &x : raw.data()) {
        x /= denom;
    }
    return AffinityMatrix(std::move(raw), epsilon);
}

TokenFeatures diffuse(const AffinityMatrix &a_hat, const TokenFeatures &v) {
    if (a_hat.nTokens() != v.nTokens()) {
        throw ShapeError("diffuse: operator is " + std::to_string(a_hat.nTokens())
                         + " tokens, values have " + std::to_string(v.nTokens()));
    }
    return TokenFeatures(matmul(a_hat.mat, v.mat));
}

double spectralRadiusEstimate(const Matrix &a) {
    try {
        return powerIteration(a).lambda;
    } catch (const DegenerateOperatorError &) {
        // Annihilating (e.g. nilpotent) operator: every eigenvalue is 0.
        return 0.0;
    }
}

ContractivityCheck assertContractive(const AffinityMatrix &a_hat, double gamma) {
    if (gamma <= 0.0) {
        throw Error("assertContractive: gamma must be positive");
    }
    const double rho = spectralRadiusEstimate(a_hat.mat);
    return ContractivityCheck{gamma * rho < 1.0, rho};
}

} // namespace infsa
