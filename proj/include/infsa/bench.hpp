#ifndef INFSA_BENCH_HPP_
#define INFSA_BENCH_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace infsa {

enum class BenchVariant { Pure, Linear, SoftmaxBaseline };

std::string benchVariantName(BenchVariant v);
BenchVariant benchVariantFromName(const std::string &name);

struct BenchRecord {
    BenchVariant variant;
    std::size_t n_tokens;
    double median_s = 0.0; // median wall time of the timed repeats
    std::size_t repeats = 0;
    bool oom = false;      // excluded from the slope fit
};

struct BenchResult {
    std::vector<BenchRecord> records;
    double slope = 0.0; // log-log fit over the largest half of sizes
    double checksum = 0.0;
};

/**
 * Times one attention forward per repeat at each token count and fits
 * log(median time) against log(N) over the upper half of the sizes, where
 * fixed overhead no longer biases the exponent. Two warm-up runs per size
 * are discarded; the median (not the mean) suppresses scheduler noise.
 *
 * Inputs are seeded-random token features with Q = K nonnegative. Every
 * size is validated before timing: the pure operator must come out with
 * Frobenius norm near 1 and the linear weight vector must sum to 1.
 * A size that exhausts memory is recorded as OOM and excluded from the fit.
 */
BenchResult benchScaling(BenchVariant variant,
                         const std::vector<std::size_t> &sizes,
                         std::size_t repeats, std::uint64_t seed,
                         std::size_t dim = 16, unsigned threads = 1);

} // namespace infsa

#endif // INFSA_BENCH_HPP_
