#include <infsa/path_integral.hpp>

#include <cmath>
#include <string>

#include <infsa/attention_graph.hpp>

namespace infsa {

DecayFactor::DecayFactor(double g) : gamma(g) {
    if (!(g > 0.0 && g < 1.0)) {
        throw Error("DecayFactor: gamma must lie in (0, 1), got "
                    + std::to_string(g));
    }
}

namespace {

void requireSquare(const Matrix &a, const char *op) {
    if (a.rows() != a.cols()) {
        throw ShapeError(std::string(op) + ": operator must be square");
    }
}

} // namespace

double pathSumBruteforce(const Matrix &a, std::size_t i, std::size_t j,
                         std::size_t t) {
    requireSquare(a, "pathSumBruteforce");
    const std::size_t n = a.rows();
    if (i >= n || j >= n) {
        throw ShapeError("pathSumBruteforce: node index out of range");
    }
    if (t < 1) {
        throw Error("pathSumBruteforce: walk length must be >= 1");
    }
    if (n > 8 || t > 5) {
        throw CapacityError("pathSumBruteforce: enumeration capped at N <= 8, t <= 5 (got N="
                            + std::to_string(n) + ", t=" + std::to_string(t) + ")");
    }
    if (t == 1) {
        return a(i, j);
    }

    // Odometer over the t-1 intermediate nodes, summed in lexicographic
    // order so the result is reproducible.
    std::vector<std::size_t> mid(t - 1, 0);
    double total = 0.0;
    while (true) {
        double w = a(i, mid[0]);
        for (std::size_t s = 1; s + 1 < t; ++s) {
            w *= a(mid[s - 1], mid[s]);
        }
        w *= a(mid[t - 2], j);
        total += w;

        std::size_t pos = t - 1;
        while (pos > 0) {
            --pos;
            if (++mid[pos] < n) {
                break;
            }
            mid[pos] = 0;
            if (pos == 0) {
                return total;
            }
        }
    }
}

Vector depthScore(const Matrix &a, std::size_t t) {
    requireSquare(a, "depthScore");
    if (t < 1) {
        throw Error("depthScore: depth must be >= 1");
    }
    Matrix power = a;
    for (std::size_t s = 1; s < t; ++s) {
        power = matmul(power, a);
    }
    const std::size_t n = a.rows();
    Vector scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += power(i, j);
        }
        scores[i] = acc;
    }
    return scores;
}

Matrix truncatedNeumann(const Matrix &a, DecayFactor gamma, std::size_t depth) {
    requireSquare(a, "truncatedNeumann");
    if (depth < 1) {
        throw Error("truncatedNeumann: depth must be >= 1");
    }
    const Matrix ga = scale(a, gamma.gamma);
    Matrix partial = ga;
    for (std::size_t l = 1; l < depth; ++l) {
        // P <- gamma A (P + I)
        Matrix shifted = partial;
        for (std::size_t i = 0; i < shifted.rows(); ++i) {
            shifted(i, i) += 1.0;
        }
        partial = matmul(ga, shifted);
    }
    return partial;
}

Matrix closedFormKernel(const Matrix &a, DecayFactor gamma) {
    requireSquare(a, "closedFormKernel");
    const double rho = spectralRadiusEstimate(a);
    if (gamma.gamma * rho >= 1.0 - 1e-9) {
        throw DivergentSeriesError(
            "closedFormKernel: gamma * rho(A) = "
            + std::to_string(gamma.gamma * rho)
            + " >= 1, series diverges");
    }
    const std::size_t n = a.rows();
    Matrix lhs = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            lhs(i, j) -= gamma.gamma * a(i, j);
        }
    }
    Matrix kernel = solveLinear(lhs, Matrix::identity(n));
    for (std::size_t i = 0; i < n; ++i) {
        kernel(i, i) -= 1.0;
    }
    return kernel;
}

Vector tokenCentrality(const Matrix &kernel) {
    requireSquare(kernel, "tokenCentrality");
    const std::size_t n = kernel.rows();
    Vector scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += kernel(i, j);
        }
        scores[i] = acc;
    }
    return scores;
}

Matrix layerwiseAccumulate(const std::vector<Matrix> &layer_outputs,
                           DecayFactor gamma) {
    if (layer_outputs.empty()) {
        throw ArityError("layerwiseAccumulate: need at least one layer output");
    }
    Matrix acc(layer_outputs.front().rows(), layer_outputs.front().cols());
    double weight = 1.0;
    for (const Matrix &z : layer_outputs) {
        if (!z.sameShape(acc)) {
            throw ShapeError("layerwiseAccumulate: layer outputs differ in shape");
        }
        weight *= gamma.gamma;
        for (std::size_t i = 0; i < acc.data().size(); ++i) {
            acc.data()[i] += weight * z.data()[i];
        }
    }
    return acc;
}

CentralityReport centralityReport(const Matrix &a, DecayFactor gamma,
                                  std::size_t per_depth_terms) {
    CentralityReport report;
    report.kernel = closedFormKernel(a, gamma);
    report.scores = tokenCentrality(report.kernel);
    report.per_depth.reserve(per_depth_terms);
    for (std::size_t t = 1; t <= per_depth_terms; ++t) {
        report.per_depth.push_back(depthScore(a, t));
    }
    return report;
}

} // namespace infsa
