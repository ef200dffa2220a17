#ifndef INFSA_RNG_HPP_
#define INFSA_RNG_HPP_

#include <cstdint>

#include <infsa/matrix.hpp>

namespace infsa {

/**
 * Counter-based deterministic random stream (splitmix64 core).
 * A stream keyed by (seed, stream_index) is independent of every other
 * stream, so work items may be distributed across threads with
 * bit-identical aggregate results.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Stream keyed by (seed, stream), e.g. one stream per walk index.
    static Rng keyed(std::uint64_t seed, std::uint64_t stream) {
        Rng r(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0x2545f4914f6cdd1dULL));
        return r;
    }

    std::uint64_t nextU64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 bits of randomness.
    double nextDouble() {
        return static_cast<double>(nextU64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double nextUniform(double lo, double hi) {
        return lo + (hi - lo) * nextDouble();
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

inline Matrix randomMatrix(std::size_t rows, std::size_t cols, Rng &rng,
                           double lo = 0.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (double &x : m.data()) {
        x = rng.nextUniform(lo, hi);
    }
    return m;
}

inline Vector randomVector(std::size_t len, Rng &rng, double lo = 0.0,
                           double hi = 1.0) {
    Vector v(len);
    for (std::size_t i = 0; i < len; ++i) {
        v[i] = rng.nextUniform(lo, hi);
    }
    return v;
}

} // namespace infsa

#endif // INFSA_RNG_HPP_
