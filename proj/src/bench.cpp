#include <infsa/bench.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <new>

#include <infsa/attention_graph.hpp>
#include <infsa/layers.hpp>
#include <infsa/rng.hpp>

namespace infsa {

std::string benchVariantName(BenchVariant v) {
    switch (v) {
    case BenchVariant::Pure:
        return "pure";
    case BenchVariant::Linear:
        return "linear";
    case BenchVariant::SoftmaxBaseline:
        return "softmax-baseline";
    }
    return "?";
}

BenchVariant benchVariantFromName(const std::string &name) {
    if (name == "pure") {
        return BenchVariant::Pure;
    }
    if (name == "linear") {
        return BenchVariant::Linear;
    }
    if (name == "softmax-baseline") {
        return BenchVariant::SoftmaxBaseline;
    }
    throw Error("unknown bench variant '" + name + "'");
}

namespace {

double checksumOf(const Matrix &m) {
    double acc = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, m.data().size() / 64);
    for (std::size_t i = 0; i < m.data().size(); i += stride) {
        acc += m.data()[i];
    }
    return acc;
}

double pureForward(const TokenFeatures &q, const TokenFeatures &v,
                   unsigned threads, double *fro_out) {
    AffinityMatrix a_hat = buildAffinity(q, q, kDefaultEpsilon,
                                         Activation::ReLU, threads);
    if (fro_out != nullptr) {
        *fro_out = frobeniusNorm(a_hat.mat);
    }
    Matrix y = matmul(a_hat.mat, v.mat, threads);
    return checksumOf(y);
}

double linearForward(const TokenFeatures &q, const TokenFeatures &v,
                     double *a_l1_out) {
    const Vector a = linfsaWeights(q);
    if (a_l1_out != nullptr) {
        *a_l1_out = l1Norm(a);
    }
    const std::size_t n = v.nTokens();
    const std::size_t d = v.dim();
    Vector h(d);
    for (std::size_t t = 0; t < n; ++t) {
        const double w = kDefaultGamma * a[t];
        for (std::size_t k = 0; k < d; ++k) {
            h[k] += w * v.mat(t, k);
        }
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        acc += h[k];
    }
    return acc;
}

double softmaxForward(const TokenFeatures &q, const TokenFeatures &v,
                      unsigned threads, double *row_sum_out) {
    const std::size_t n = q.nTokens();
    const std::size_t d = q.dim();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix attn(n, n);
    parallelRows(n, threads, [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            double row_max = -1e308;
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    acc += q.mat(i, c) * q.mat(j, c);
                }
                attn(i, j) = acc * inv_sqrt_d;
                row_max = std::max(row_max, attn(i, j));
            }
            double row_sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                attn(i, j) = std::exp(attn(i, j) - row_max);
                row_sum += attn(i, j);
            }
            for (std::size_t j = 0; j < n; ++j) {
                attn(i, j) /= row_sum;
            }
        }
    });
    if (row_sum_out != nullptr) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s += attn(0, j);
        }
        *row_sum_out = s;
    }
    Matrix y = matmul(attn, v.mat, threads);
    return checksumOf(y);
}

} // namespace

BenchResult benchScaling(BenchVariant variant,
                         const std::vector<std::size_t> &sizes,
                         std::size_t repeats, std::uint64_t seed,
                         std::size_t dim, unsigned threads) {
    if (sizes.size() < 4) {
        throw Error("benchScaling: need at least 4 sizes, got "
                    + std::to_string(sizes.size()));
    }
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] <= sizes[i - 1]) {
            throw Error("benchScaling: sizes must be strictly increasing");
        }
    }
    if (repeats < 5) {
        throw Error("benchScaling: need at least 5 repeats");
    }
    if (dim < 1) {
        throw Error("benchScaling: dim must be >= 1");
    }

    constexpr std::size_t kWarmups = 2;
    BenchResult result;
    for (std::size_t n : sizes) {
        BenchRecord record;
        record.variant = variant;
        record.n_tokens = n;
        record.repeats = repeats;
        try {
            Rng rng = Rng::keyed(seed, n);
            TokenFeatures q(randomMatrix(n, dim, rng, 0.0, 1.0));
            TokenFeatures v(randomMatrix(n, dim, rng, -1.0, 1.0));

            auto run = [&](double *validation) {
                switch (variant) {
                case BenchVariant::Pure:
                    return pureForward(q, v, threads, validation);
                case BenchVariant::Linear:
                    return linearForward(q, v, validation);
                case BenchVariant::SoftmaxBaseline:
                    return softmaxForward(q, v, threads, validation);
                }
                return 0.0;
            };

            // Validation pass doubles as the first warm-up.
            double validation = 0.0;
            result.checksum += run(&validation);
            switch (variant) {
            case BenchVariant::Pure:
                if (std::abs(validation - 1.0) > 0.01) {
                    throw Error("benchScaling: pure operator norm drifted to "
                                + std::to_string(validation));
                }
                break;
            case BenchVariant::Linear:
                if (std::abs(validation - 1.0) > 1e-3) {
                    throw Error("benchScaling: linear weights sum drifted to "
                                + std::to_string(validation));
                }
                break;
            case BenchVariant::SoftmaxBaseline:
                if (std::abs(validation - 1.0) > 1e-9) {
                    throw Error("benchScaling: softmax row sum drifted to "
                                + std::to_string(validation));
                }
                break;
            }
            for (std::size_t w = 1; w < kWarmups; ++w) {
                result.checksum += run(nullptr);
            }

            std::vector<double> times;
            times.reserve(repeats);
            for (std::size_t r = 0; r < repeats; ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                result.checksum += run(nullptr);
                const auto t1 = std::chrono::steady_clock::now();
                times.push_back(std::chrono::duration<double>(t1 - t0).count());
            }
            std::sort(times.begin(), times.end());
            const std::size_t mid = times.size() / 2;
            record.median_s = times.size() % 2 == 1
                                  ? times[mid]
                                  : 0.5 * (times[mid - 1] + times[mid]);
        } catch (const std::bad_alloc &) {
            record.oom = true;
        }
        result.records.push_back(record);
    }

    // Least squares on log(time) vs log(N), upper half of the usable sizes.
    std::vector<std::pair<double, double>> points;
    for (const BenchRecord &r : result.records) {
        if (!r.oom && r.median_s > 0.0) {
            points.emplace_back(std::log(static_cast<double>(r.n_tokens)),
                                std::log(r.median_s));
        }
    }
    const std::size_t keep = (points.size() + 1) / 2;
    if (keep >= 2) {
        const std::size_t start = points.size() - keep;
        double mx = 0.0, my = 0.0;
        for (std::size_t i = start; i < points.size(); ++i) {
            mx += points[i].first;
            my += points[i].second;
        }
        mx /= static_cast<double>(keep);
        my /= static_cast<double>(keep);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = start; i < points.size(); ++i) {
            sxy += (points[i].first - mx) * (points[i].second - my);
            sxx += (points[i].first - mx) * (points[i].first - mx);
        }
        result.slope = sxy / sxx;
    }
    return result;
}

} // namespace infsa
