#pragma once

#include <cmath>
#include <cstddef>

#include "errors.hpp"
#include "linalg.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace mimo {

/// One flat-fading channel use: y = H x + n with H of size n_r x n_t.
struct ChannelRealization {
    ComplexMatrix h;

    std::size_t n_r() const { return h.rows; }
    std::size_t n_t() const { return h.cols; }
};

/// Exponential transmit-side correlation R[i][j] = rho^|i-j|. rho = 0 is the
/// i.i.d. case.
struct CorrelationSpec {
    double rho = 0.0;
};

/// Receiver-side channel knowledge: h_hat = H + dH where the entries of dH
/// are i.i.d. CN(0, sigma_e_sq). sigma_e_sq = 0 means perfect CSI.
struct CsiEstimate {
    ComplexMatrix h_hat;
    double sigma_e_sq = 0.0;
};

struct NoiseSpec {
    double sigma_n_sq = 0.0;
};

/// The channel is redrawn every period_t uses and held constant in between.
struct BlockFadingSpec {
    std::size_t period_t = 1;
};

/// Noise power for a target SNR in dB under the convention used throughout:
/// symbols have unit average energy, so the total received signal power per
/// receive antenna is n_t and
///
///   sigma_n_sq = n_t * 10^(-snr_db / 10).
inline double noise_variance_for_snr_db(std::size_t n_t, double snr_db) {
    if (n_t == 0) throw ParameterError("noise_variance_for_snr_db: n_t must be positive");
    return static_cast<double>(n_t) * std::pow(10.0, -snr_db / 10.0);
}

/// Draws H = G * R^(1/2): G has i.i.d. CN(0, 1) entries (drawn row-major) and
/// R is the exponential transmit correlation matrix. With rho = 0 the square
/// root is the identity and G is returned as-is.
inline ChannelRealization draw_channel(SeededRng& rng, std::size_t n_t, std::size_t n_r,
                                       const CorrelationSpec& corr = {}) {
    if (n_t == 0 || n_r == 0) throw ParameterError("draw_channel: dimensions must be positive");
    if (!(corr.rho >= 0.0 && corr.rho < 1.0))
        throw ParameterError("draw_channel: rho must lie in [0, 1)");

    ComplexMatrix g(n_r, n_t);
    for (std::size_t i = 0; i < n_r; ++i)
        for (std::size_t j = 0; j < n_t; ++j) g(i, j) = rng.complex_gaussian(1.0);
    if (corr.rho == 0.0) return {std::move(g)};

    RealMatrix r(n_t, n_t);
    for (std::size_t i = 0; i < n_t; ++i)
        for (std::size_t j = 0; j < n_t; ++j)
            r(i, j) = std::pow(corr.rho, std::abs(static_cast<double>(i) - static_cast<double>(j)));
    const RealMatrix l = cholesky_lower(r);
    // H = G * L^T, which gives E[H^H H] / n_r = L L^T = R.
    ComplexMatrix h(n_r, n_t);
    for (std::size_t i = 0; i < n_r; ++i)
        for (std::size_t j = 0; j < n_t; ++j) {
            Complex acc = 0.0;
            for (std::size_t k = 0; k <= j; ++k) acc += g(i, k) * l(j, k);
            h(i, j) = acc;
        }
    return {std::move(h)};
}

/// Channel-estimation error variance from the pilot budget:
/// sigma_e_sq = n_t / np_ep. np_ep = +infinity models perfect estimation.
inline double pilot_error_variance(std::size_t n_t, double np_ep) {
    if (n_t == 0) throw ParameterError("pilot_error_variance: n_t must be positive");
    if (!(np_ep > 0.0)) throw ParameterError("pilot_error_variance: np_ep must be positive");
    return static_cast<double>(n_t) / np_ep;
}

/// Receiver CSI for one realization. With sigma_e_sq = 0 the estimate is the
/// true matrix, bit for bit, and no random draws are consumed.
inline CsiEstimate corrupt_csi(const ChannelRealization& channel, double sigma_e_sq,
                               SeededRng& rng) {
    if (sigma_e_sq < 0.0) throw ParameterError("corrupt_csi: variance must be non-negative");
    if (sigma_e_sq == 0.0) return {channel.h, 0.0};
    ComplexMatrix h_hat = channel.h;
    for (std::size_t i = 0; i < h_hat.rows; ++i)
        for (std::size_t j = 0; j < h_hat.cols; ++j) h_hat(i, j) += rng.complex_gaussian(sigma_e_sq);
    return {std::move(h_hat), sigma_e_sq};
}

/// y = H x + n with n i.i.d. CN(0, sigma_n_sq). Variance 0 yields exactly H x
/// and consumes no random draws.
inline CVec apply_channel(const ChannelRealization& channel, const CVec& x,
                          const NoiseSpec& noise, SeededRng& rng) {
    if (x.size() != channel.n_t()) throw ParameterError("apply_channel: symbol count != n_t");
    if (noise.sigma_n_sq < 0.0)
        throw ParameterError("apply_channel: noise variance must be non-negative");
    CVec y = multiply(channel.h, x);
    if (noise.sigma_n_sq > 0.0)
        for (auto& v : y) v += rng.complex_gaussian(noise.sigma_n_sq);
    return y;
}

/// Per-antenna variance of the equivalent noise n - dH * x seen through an
/// estimated channel: n_t * sigma_e_sq + sigma_n_sq (unit-energy symbols).
inline double equivalent_noise_variance(std::size_t n_t, double sigma_e_sq, double sigma_n_sq) {
    if (n_t == 0) throw ParameterError("equivalent_noise_variance: n_t must be positive");
    if (sigma_e_sq < 0.0 || sigma_n_sq < 0.0)
        throw ParameterError("equivalent_noise_variance: variances must be non-negative");
    return static_cast<double>(n_t) * sigma_e_sq + sigma_n_sq;
}

}  // namespace mimo
