#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "dataset.hpp"
#include "detectors.hpp"
#include "errors.hpp"
#include "modem.hpp"
#include "nn.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace mimo {

/// Closed-form BER of BPSK over flat Rayleigh fading at average SNR gamma
/// (linear): (1/2) (1 - sqrt(gamma / (1 + gamma))).
inline double siso_rayleigh_bpsk_ber(double snr_linear) {
    if (!(snr_linear > 0.0))
        throw ParameterError("siso_rayleigh_bpsk_ber: SNR must be positive");
    return 0.5 * (1.0 - std::sqrt(snr_linear / (1.0 + snr_linear)));
}

/// 95% Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t total) {
    if (total == 0) throw ParameterError("wilson_interval: empty sample");
    if (errors > total) throw ParameterError("wilson_interval: errors exceed total");
    constexpr double z = 1.959963984540054;  // 97.5th normal percentile
    const double n = static_cast<double>(total);
    const double p = static_cast<double>(errors) / n;
    const double z2n = z * z / n;
    const double denom = 1.0 + z2n;
    const double center = (p + z2n / 2.0) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / denom;
    double low = center - half;
    double high = center + half;
    // At the boundaries the exact bounds are 0 and 1; keep them free of
    // rounding residue so zero-error points report a clean ci_low = 0.
    if (errors == 0 || low < 0.0) low = 0.0;
    if (errors == total || high > 1.0) high = 1.0;
    return {low, high};
}

struct SweepConfig {
    std::size_t n_t = 4;
    std::size_t n_r = 4;
    ModulationScheme scheme = ModulationScheme::BPSK;
    std::vector<double> snr_db_list;
    std::uint64_t bits_per_point = 100000;
    std::vector<std::string> detectors{"zf", "mmse", "ml"};
    double np_ep = std::numeric_limits<double>::infinity();
    double rho = 0.0;
    std::size_t block_period = 1;
    std::uint64_t seed = 1;
    std::size_t dnn_batch = 256;
};

struct BerPoint {
    std::string detector;
    double snr_db = 0.0;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    double ber = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct BerResult {
    std::vector<BerPoint> points;  // detector-major, SNR points in config order
    /// Blocks whose linear detection hit a numerically singular Gram matrix;
    /// those blocks were scored as random guesses and logged here.
    std::map<std::string, std::uint64_t> erased_blocks;
};

/// Test seam: a detector given the transmitted truth alongside the input.
/// Production detectors ignore the truth arguments.
using DetectorFn = std::function<DetectionOutput(const DetectionInput&, const BitBlock& true_bits,
                                                 const SymbolVector& true_x)>;

struct NamedDetector {
    std::string name;
    DetectorFn fn;
};

namespace detail {

struct SweepDetector {
    enum class Kind { Zf, Mmse, Ml, Dnn, Custom };
    std::string name;
    Kind kind = Kind::Custom;
    const nn::NetworkModel* model = nullptr;
    DetectorFn custom;
};

struct ShardTally {
    std::vector<SerCounter> counters;       // one per detector
    std::vector<std::uint64_t> erased;      // one per detector
};

/// Runs `slots` channel uses of one SNR point on one worker stream and tallies
/// every detector on the identical realizations.
inline ShardTally run_sweep_shard(const SweepConfig& cfg,
                                  const std::vector<SweepDetector>& detectors, double snr_db,
                                  std::uint64_t slots, std::uint64_t worker_index) {
    const std::size_t k = static_cast<std::size_t>(bits_per_symbol(cfg.scheme)) * cfg.n_t;
    const double sigma_n_sq = noise_variance_for_snr_db(cfg.n_t, snr_db);
    const double sigma_e_sq = pilot_error_variance(cfg.n_t, cfg.np_ep);
    SeededRng rng = SeededRng::derive(cfg.seed, worker_index);
    // Separate stream for scoring singular blocks, so detector outcomes never
    // shift the realization sequence.
    SeededRng erasure_rng = SeededRng::derive(cfg.seed, worker_index ^ 0x455241534544ull);

    ShardTally tally;
    tally.counters.resize(detectors.size());
    tally.erased.assign(detectors.size(), 0);

    const std::size_t chunk = cfg.dnn_batch > 0 ? cfg.dnn_batch : 256;
    std::vector<DetectionInput> inputs(chunk);
    std::vector<BitBlock> tx_bits(chunk);
    std::vector<SymbolVector> tx_x(chunk);

    ChannelRealization channel;
    CsiEstimate csi;
    std::size_t window_pos = 0;

    std::uint64_t done = 0;
    while (done < slots) {
        const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, slots - done));
        for (std::size_t i = 0; i < n; ++i) {
            if (window_pos == 0) {
                channel = draw_channel(rng, cfg.n_t, cfg.n_r, {cfg.rho});
                csi = corrupt_csi(channel, sigma_e_sq, rng);
            }
            window_pos = (window_pos + 1) % cfg.block_period;
            tx_bits[i] = random_bits(rng, k);
            tx_x[i] = modulate(tx_bits[i], cfg.scheme);
            inputs[i].y = apply_channel(channel, tx_x[i], {sigma_n_sq}, rng);
            inputs[i].csi = csi;
            inputs[i].sigma_n_sq = sigma_n_sq;
            inputs[i].scheme = cfg.scheme;
        }

        for (std::size_t d = 0; d < detectors.size(); ++d) {
            const auto& det = detectors[d];
            auto& counter = tally.counters[d];
            switch (det.kind) {
                case SweepDetector::Kind::Dnn: {
                    RealMatrix batch(n, nn::dnn_input_width(cfg.n_t, cfg.n_r));
                    for (std::size_t i = 0; i < n; ++i) {
                        const RVec feat = build_features(inputs[i].y, inputs[i].csi);
                        std::copy(feat.begin(), feat.end(), batch.row(i));
                    }
                    const RealMatrix probs = nn::forward_infer(*det.model, batch);
                    for (std::size_t i = 0; i < n; ++i) {
                        const BitBlock b_hat = nn::threshold_bits(probs.row(i), k);
                        const SymbolVector x_hat = modulate(b_hat, cfg.scheme);
                        count_errors(b_hat, tx_bits[i], x_hat, tx_x[i], counter);
                    }
                    break;
                }
                default: {
                    for (std::size_t i = 0; i < n; ++i) {
                        DetectionOutput out;
                        bool erased = false;
                        try {
                            switch (det.kind) {
                                case SweepDetector::Kind::Zf: out = detect_zf(inputs[i]); break;
                                case SweepDetector::Kind::Mmse: out = detect_mmse(inputs[i]); break;
                                case SweepDetector::Kind::Ml: out = detect_ml(inputs[i]); break;
                                default: out = det.custom(inputs[i], tx_bits[i], tx_x[i]); break;
                            }
                        } catch (const SingularityError&) {
                            out.b_hat = random_bits(erasure_rng, k);
                            out.x_hat = modulate(out.b_hat, cfg.scheme);
                            erased = true;
                        }
                        count_errors(out.b_hat, tx_bits[i], out.x_hat, tx_x[i], counter);
                        tally.erased[d] += erased;
                    }
                    break;
                }
            }
        }
        done += n;
    }
    return tally;
}

inline void validate_sweep_config(const SweepConfig& cfg) {
    if (cfg.n_t == 0 || cfg.n_r < cfg.n_t)
        throw ParameterError("sweep: need 1 <= n_t <= n_r");
    if (cfg.snr_db_list.empty()) throw ParameterError("sweep: empty SNR list");
    if (cfg.bits_per_point < 10000)
        throw ParameterError("sweep: bits_per_point must be at least 10^4");
    if (cfg.detectors.empty()) throw ParameterError("sweep: no detectors selected");
    if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw ParameterError("sweep: rho out of range");
    if (cfg.block_period == 0) throw ParameterError("sweep: block period must be positive");
    if (!(cfg.np_ep > 0.0)) throw ParameterError("sweep: np_ep must be positive");
}

inline BerResult run_sweep_engine(const SweepConfig& cfg,
                                  const std::vector<SweepDetector>& detectors, unsigned threads) {
    validate_sweep_config(cfg);
    if (threads == 0) throw ParameterError("sweep: thread count must be positive");
    const std::size_t k = static_cast<std::size_t>(bits_per_symbol(cfg.scheme)) * cfg.n_t;
    const std::uint64_t slots_per_point = (cfg.bits_per_point + k - 1) / k;

    std::vector<std::vector<SerCounter>> totals(cfg.snr_db_list.size());
    BerResult result;
    for (const auto& det : detectors) result.erased_blocks[det.name] = 0;

    for (std::size_t point = 0; point < cfg.snr_db_list.size(); ++point) {
        const double snr_db = cfg.snr_db_list[point];
        const unsigned shards = threads;
        std::vector<ShardTally> tallies(shards);
        auto run_one = [&](unsigned s) {
            const std::uint64_t base = slots_per_point / shards;
            const std::uint64_t extra = slots_per_point % shards;
            const std::uint64_t slots = base + (s < extra ? 1 : 0);
            const std::uint64_t worker_index =
                static_cast<std::uint64_t>(point) * shards + s;
            tallies[s] = run_sweep_shard(cfg, detectors, snr_db, slots, worker_index);
        };
        if (shards == 1) {
            run_one(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(shards);
            for (unsigned s = 0; s < shards; ++s) pool.emplace_back(run_one, s);
            for (auto& t : pool) t.join();
        }
        totals[point].resize(detectors.size());
        for (unsigned s = 0; s < shards; ++s) {
            for (std::size_t d = 0; d < detectors.size(); ++d) {
                totals[point][d].merge(tallies[s].counters[d]);
                result.erased_blocks[detectors[d].name] += tallies[s].erased[d];
            }
        }
    }

    for (std::size_t d = 0; d < detectors.size(); ++d) {
        for (std::size_t point = 0; point < cfg.snr_db_list.size(); ++point) {
            const auto& counter = totals[point][d];
            BerPoint bp;
            bp.detector = detectors[d].name;
            bp.snr_db = cfg.snr_db_list[point];
            bp.bits = counter.total_bits;
            bp.bit_errors = counter.bit_errors;
            bp.ber = static_cast<double>(counter.bit_errors) / static_cast<double>(counter.total_bits);
            const auto ci = wilson_interval(counter.bit_errors, counter.total_bits);
            bp.ci_low = ci.first;
            bp.ci_high = ci.second;
            result.points.push_back(std::move(bp));
        }
    }
    return result;
}

}  // namespace detail

/// Paired Monte-Carlo BER sweep: per SNR point every selected detector sees
/// the identical channel, data and noise realizations. `models` supplies the
/// network for the "dnn" detector. With threads = 1 the slot sequence is the
/// canonical sequential stream; any fixed thread count is itself
/// deterministic (worker streams derive from seed XOR worker index and the
/// merge is associative).
inline BerResult run_ber_sweep(const SweepConfig& cfg,
                               const std::map<std::string, const nn::NetworkModel*>& models = {},
                               unsigned threads = 1) {
    std::vector<detail::SweepDetector> detectors;
    for (const auto& name : cfg.detectors) {
        detail::SweepDetector det;
        det.name = name;
        if (name == "zf") {
            det.kind = detail::SweepDetector::Kind::Zf;
        } else if (name == "mmse") {
            det.kind = detail::SweepDetector::Kind::Mmse;
        } else if (name == "ml") {
            det.kind = detail::SweepDetector::Kind::Ml;
            const std::size_t k = static_cast<std::size_t>(bits_per_symbol(cfg.scheme)) * cfg.n_t;
            if (k > kMlCandidateGuardBits)
                throw CapacityError("sweep: ML candidate space exceeds the 2^20 guard");
        } else if (name == "dnn") {
            det.kind = detail::SweepDetector::Kind::Dnn;
            const auto it = models.find(name);
            if (it == models.end() || it->second == nullptr)
                throw ParameterError("sweep: detector 'dnn' needs a model");
            const auto* model = it->second;
            if (model->input_width != nn::dnn_input_width(cfg.n_t, cfg.n_r) ||
                model->output_width !=
                    static_cast<std::size_t>(bits_per_symbol(cfg.scheme)) * cfg.n_t)
                throw ParameterError("sweep: model widths do not match the link configuration");
            det.model = model;
        } else {
            throw ParameterError("sweep: unknown detector '" + name + "'");
        }
        detectors.push_back(std::move(det));
    }
    return detail::run_sweep_engine(cfg, detectors, threads);
}

/// Sweep over caller-supplied detector callables (used to exercise the
/// harness itself with reference stubs).
inline BerResult run_ber_sweep_custom(const SweepConfig& cfg,
                                      const std::vector<NamedDetector>& custom,
                                      unsigned threads = 1) {
    if (custom.empty()) throw ParameterError("sweep: no detectors supplied");
    std::vector<detail::SweepDetector> detectors;
    for (const auto& named : custom) {
        detail::SweepDetector det;
        det.name = named.name;
        det.kind = detail::SweepDetector::Kind::Custom;
        det.custom = named.fn;
        detectors.push_back(std::move(det));
    }
    return detail::run_sweep_engine(cfg, detectors, threads);
}

/// BER table as CSV, one row per (detector, SNR point).
inline std::string ber_csv(const BerResult& result) {
    std::string out = "detector,snr_db,bits,bit_errors,ber,ci_low,ci_high\n";
    for (const auto& p : result.points) {
        out += p.detector;
        out += ',';
        out += format_double(p.snr_db);
        out += ',';
        out += std::to_string(p.bits);
        out += ',';
        out += std::to_string(p.bit_errors);
        out += ',';
        out += format_double(p.ber);
        out += ',';
        out += format_double(p.ci_low);
        out += ',';
        out += format_double(p.ci_high);
        out += '\n';
    }
    return out;
}

inline void write_ber_csv(const BerResult& result, const std::string& path) {
    write_text_file(path, ber_csv(result));
}

}  // namespace mimo
