#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

#include "channel.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "matrix.hpp"
#include "modem.hpp"

namespace mimo {

struct DetectionInput {
    CVec y;
    CsiEstimate csi;
    double sigma_n_sq = 0.0;
    ModulationScheme scheme = ModulationScheme::BPSK;
};

struct DetectionOutput {
    SymbolVector x_hat;
    BitBlock b_hat;
    std::optional<CVec> soft_estimate;  // present for the linear detectors
};

struct SerCounter {
    std::uint64_t symbol_errors = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t total_symbols = 0;
    std::uint64_t total_bits = 0;

    void merge(const SerCounter& other) {
        symbol_errors += other.symbol_errors;
        bit_errors += other.bit_errors;
        total_symbols += other.total_symbols;
        total_bits += other.total_bits;
    }
};

/// Exhaustive search is refused above 2^20 candidate bit labels.
inline constexpr std::size_t kMlCandidateGuardBits = 20;

namespace detail {

inline void check_detection_input(const DetectionInput& in) {
    const std::size_t n_r = in.csi.h_hat.rows;
    const std::size_t n_t = in.csi.h_hat.cols;
    if (n_t == 0 || n_r == 0) throw ParameterError("detect: empty channel estimate");
    if (n_r < n_t) throw ParameterError("detect: n_r must be at least n_t");
    if (in.y.size() != n_r) throw ParameterError("detect: observation length != n_r");
    if (in.sigma_n_sq < 0.0) throw ParameterError("detect: noise variance must be non-negative");
}

/// Per-antenna nearest-point quantization of a soft estimate.
inline DetectionOutput quantize(CVec soft, ModulationScheme scheme) {
    DetectionOutput out;
    out.b_hat = demodulate_hard(soft, scheme);
    out.x_hat = modulate(out.b_hat, scheme);
    out.soft_estimate = std::move(soft);
    return out;
}

/// Linear detection via the regularized Gram system
/// (H^H H + reg I) x = H^H y.
inline DetectionOutput detect_linear(const DetectionInput& in, double reg) {
    check_detection_input(in);
    const ComplexMatrix hh = adjoint(in.csi.h_hat);
    ComplexMatrix gram = multiply(hh, in.csi.h_hat);
    if (reg != 0.0) add_scaled_identity(gram, reg);
    const CVec rhs_vec = multiply(hh, in.y);
    ComplexMatrix rhs(rhs_vec.size(), 1);
    for (std::size_t i = 0; i < rhs_vec.size(); ++i) rhs(i, 0) = rhs_vec[i];
    const ComplexMatrix solution = solve_hermitian(gram, rhs);
    CVec soft(solution.rows);
    for (std::size_t i = 0; i < soft.size(); ++i) soft[i] = solution(i, 0);
    return quantize(std::move(soft), in.scheme);
}

}  // namespace detail

/// Zero-forcing: x_soft = (H^H H)^-1 H^H y. Rank-deficient estimates raise
/// SingularityError.
inline DetectionOutput detect_zf(const DetectionInput& in) { return detail::detect_linear(in, 0.0); }

/// MMSE: x_soft = (H^H H + sigma_n_sq I)^-1 H^H y. With sigma_n_sq = 0 this
/// is exactly the zero-forcing system.
inline DetectionOutput detect_mmse(const DetectionInput& in) {
    return detail::detect_linear(in, in.sigma_n_sq);
}

/// Exhaustive maximum-likelihood search: argmin over every candidate bit
/// label of || y - H x(b) ||^2. Candidates are enumerated in lexicographic
/// label order and only a strictly smaller residual replaces the incumbent,
/// so exact ties resolve to the smallest label. Refuses searches beyond
/// 2^kMlCandidateGuardBits candidates.
inline DetectionOutput detect_ml(const DetectionInput& in) {
    detail::check_detection_input(in);
    const std::size_t n_t = in.csi.h_hat.cols;
    const std::size_t n_r = in.csi.h_hat.rows;
    const std::size_t m = static_cast<std::size_t>(bits_per_symbol(in.scheme));
    const std::size_t k = m * n_t;
    if (k > kMlCandidateGuardBits)
        throw CapacityError("detect_ml: candidate space exceeds the 2^20 guard");

    const std::size_t count = std::size_t{1} << k;
    BitBlock bits(k);
    BitBlock best_bits;
    SymbolVector best_x;
    double best_residual = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < count; ++c) {
        for (std::size_t i = 0; i < k; ++i) bits[i] = (c >> (k - 1 - i)) & 1u;
        SymbolVector x = modulate(bits, in.scheme);
        double residual = 0.0;
        for (std::size_t r = 0; r < n_r; ++r) {
            Complex acc = in.y[r];
            for (std::size_t t = 0; t < n_t; ++t) acc -= in.csi.h_hat(r, t) * x[t];
            residual += std::norm(acc);
        }
        if (residual < best_residual) {
            best_residual = residual;
            best_bits = bits;
            best_x = std::move(x);
        }
    }
    return {std::move(best_x), std::move(best_bits), std::nullopt};
}

/// Accumulates bit and symbol error counts for one detected block.
inline SerCounter& count_errors(const BitBlock& b_hat, const BitBlock& b, const SymbolVector& x_hat,
                                const SymbolVector& x, SerCounter& acc) {
    if (b_hat.size() != b.size()) throw ParameterError("count_errors: bit lengths disagree");
    if (x_hat.size() != x.size()) throw ParameterError("count_errors: symbol lengths disagree");
    for (std::size_t i = 0; i < b.size(); ++i) acc.bit_errors += (b_hat[i] != b[i]);
    for (std::size_t i = 0; i < x.size(); ++i) acc.symbol_errors += (x_hat[i] != x[i]);
    acc.total_bits += b.size();
    acc.total_symbols += x.size();
    return acc;
}

}  // namespace mimo
