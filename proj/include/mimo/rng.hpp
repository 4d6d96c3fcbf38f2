#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace mimo {

/// One step of the splitmix64 sequence; used to expand seeds into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Deterministic pseudo-random stream backed by xoshiro256++ with splitmix64
/// seeding. The generator is fully specified here (no standard-library
/// distributions are involved), so a given seed reproduces the identical
/// sequence on every platform and toolchain. All stochastic code in the
/// library draws from this class; Gaussian variates use the Box-Muller
/// transform on 53-bit uniforms.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    /// Stream for parallel worker `index`, derived as `base_seed XOR index`.
    /// The XOR'd value is avalanched through splitmix64 by the constructor,
    /// so nearby indices still yield decorrelated streams.
    static SeededRng derive(std::uint64_t base_seed, std::uint64_t index) {
        return SeededRng(base_seed ^ index);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, bound) via Lemire's multiply-shift rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw ParameterError("next_below: bound must be positive");
        unsigned __int128 product = static_cast<unsigned __int128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
            while (low < threshold) {
                product = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// One fair bit.
    std::uint8_t next_bit() { return static_cast<std::uint8_t>(next_u64() >> 63); }

    /// Box-Muller pair of independent N(0, 1) draws. Consumes exactly two uniforms.
    std::pair<double, double> gaussian_pair() {
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    /// Circularly symmetric complex Gaussian CN(0, variance).
    std::complex<double> complex_gaussian(double variance) {
        if (variance < 0.0) throw ParameterError("complex_gaussian: variance must be non-negative");
        const auto [z0, z1] = gaussian_pair();
        const double scale = std::sqrt(variance / 2.0);
        return {z0 * scale, z1 * scale};
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    std::uint64_t seed_;
};

/// Vector of n i.i.d. CN(0, variance) samples.
inline std::vector<std::complex<double>> sample_complex_gaussian(SeededRng& rng, std::size_t n,
                                                                 double variance) {
    if (variance < 0.0)
        throw ParameterError("sample_complex_gaussian: variance must be non-negative");
    std::vector<std::complex<double>> out(n);
    for (auto& z : out) z = rng.complex_gaussian(variance);
    return out;
}

/// n fair bits (values 0 or 1).
inline std::vector<std::uint8_t> random_bits(SeededRng& rng, std::size_t n) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = rng.next_bit();
    return bits;
}

/// In-place Fisher-Yates shuffle. Implemented here rather than via std::shuffle
/// because the standard leaves the latter's draw sequence implementation-defined.
template <typename T>
void deterministic_shuffle(std::vector<T>& values, SeededRng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace mimo
