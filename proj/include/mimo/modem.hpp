#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace mimo {

enum class ModulationScheme { BPSK, QPSK };

using BitBlock = std::vector<std::uint8_t>;
using SymbolVector = CVec;

inline int bits_per_symbol(ModulationScheme scheme) {
    return scheme == ModulationScheme::BPSK ? 1 : 2;
}

inline const char* scheme_name(ModulationScheme scheme) {
    return scheme == ModulationScheme::BPSK ? "bpsk" : "qpsk";
}

inline ModulationScheme scheme_from_name(const std::string& name) {
    if (name == "bpsk") return ModulationScheme::BPSK;
    if (name == "qpsk") return ModulationScheme::QPSK;
    throw ParameterError("unknown modulation scheme: " + name);
}

struct ConstellationPoint {
    BitBlock bits;
    Complex point;
};

namespace detail {
inline constexpr double kInvSqrt2 = 0.7071067811865475244;

inline Complex map_symbol(ModulationScheme scheme, const std::uint8_t* bits) {
    if (scheme == ModulationScheme::BPSK) return bits[0] ? Complex(1.0, 0.0) : Complex(-1.0, 0.0);
    // Gray-coded QPSK with unit average (here: unit per-symbol) energy.
    return Complex((1.0 - 2.0 * bits[0]) * kInvSqrt2, (1.0 - 2.0 * bits[1]) * kInvSqrt2);
}
}  // namespace detail

/// All (label bits, point) pairs of a scheme in lexicographic label order.
inline const std::vector<ConstellationPoint>& constellation(ModulationScheme scheme) {
    static const std::vector<ConstellationPoint> bpsk = [] {
        std::vector<ConstellationPoint> pts;
        for (std::uint8_t b = 0; b < 2; ++b)
            pts.push_back({{b}, detail::map_symbol(ModulationScheme::BPSK, &b)});
        return pts;
    }();
    static const std::vector<ConstellationPoint> qpsk = [] {
        std::vector<ConstellationPoint> pts;
        for (std::uint8_t b0 = 0; b0 < 2; ++b0)
            for (std::uint8_t b1 = 0; b1 < 2; ++b1) {
                const BitBlock bits{b0, b1};
                pts.push_back({bits, detail::map_symbol(ModulationScheme::QPSK, bits.data())});
            }
        return pts;
    }();
    return scheme == ModulationScheme::BPSK ? bpsk : qpsk;
}

/// Maps bits to symbols, M bits per symbol in order. The bit count must be a
/// positive multiple of M.
inline SymbolVector modulate(const BitBlock& bits, ModulationScheme scheme) {
    const std::size_t m = static_cast<std::size_t>(bits_per_symbol(scheme));
    if (bits.empty() || bits.size() % m != 0)
        throw ParameterError("modulate: bit count must be a positive multiple of bits per symbol");
    for (const auto b : bits)
        if (b > 1) throw ParameterError("modulate: bits must be 0 or 1");
    SymbolVector out(bits.size() / m);
    for (std::size_t s = 0; s < out.size(); ++s)
        out[s] = detail::map_symbol(scheme, bits.data() + s * m);
    return out;
}

/// Nearest-point hard decision per symbol. Exact distance ties go to the
/// label with more 0 bits, then to the lexicographically smallest label, so
/// decisions are deterministic.
inline BitBlock demodulate_hard(const CVec& x_hat, ModulationScheme scheme) {
    if (x_hat.empty()) throw ParameterError("demodulate_hard: empty input");
    const auto& points = constellation(scheme);
    const std::size_t m = static_cast<std::size_t>(bits_per_symbol(scheme));
    BitBlock out;
    out.reserve(x_hat.size() * m);
    for (const auto& value : x_hat) {
        std::size_t best = 0;
        double best_dist = std::norm(value - points[0].point);
        int best_zeros = 0;
        for (const auto b : points[0].bits) best_zeros += (b == 0);
        for (std::size_t c = 1; c < points.size(); ++c) {
            const double dist = std::norm(value - points[c].point);
            int zeros = 0;
            for (const auto b : points[c].bits) zeros += (b == 0);
            if (dist < best_dist || (dist == best_dist && zeros > best_zeros)) {
                best = c;
                best_dist = dist;
                best_zeros = zeros;
            }
        }
        out.insert(out.end(), points[best].bits.begin(), points[best].bits.end());
    }
    return out;
}

}  // namespace mimo
