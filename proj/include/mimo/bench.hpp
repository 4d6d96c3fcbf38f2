#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <string>
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

struct BenchConfig {
    std::size_t n_t = 4;
    std::size_t n_r = 4;
    ModulationScheme scheme = ModulationScheme::BPSK;
    double snr_db = 8.0;
    std::uint64_t symbols = 720000;  // transmit vectors per timed pass
    std::size_t repetitions = 3;
    std::vector<std::string> detectors{"zf", "mmse", "ml"};
    double np_ep = std::numeric_limits<double>::infinity();
    double rho = 0.0;
    std::size_t block_period = 1;
    std::uint64_t seed = 1;
    std::size_t dnn_batch = 256;
};

struct ThroughputRow {
    std::string detector;
    std::uint64_t detected_bits = 0;
    double wall_seconds = 0.0;  // median over repetitions
    double throughput_kbps = 0.0;
};

namespace detail {

inline void validate_bench_config(const BenchConfig& cfg) {
    if (cfg.n_t == 0 || cfg.n_r < cfg.n_t)
        throw ParameterError("bench: need 1 <= n_t <= n_r");
    if (cfg.symbols == 0) throw ParameterError("bench: symbol count must be positive");
    if (cfg.repetitions == 0) throw ParameterError("bench: repetition count must be positive");
    if (cfg.detectors.empty()) throw ParameterError("bench: no detectors selected");
    if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw ParameterError("bench: rho out of range");
    if (cfg.block_period == 0) throw ParameterError("bench: block period must be positive");
    if (!(cfg.np_ep > 0.0)) throw ParameterError("bench: np_ep must be positive");
    if (cfg.dnn_batch == 0) throw ParameterError("bench: batch size must be positive");
}

/// Pre-generates the shared workload so the timed region contains only
/// detection work.
inline std::vector<DetectionInput> build_bench_workload(const BenchConfig& cfg) {
    const std::size_t k = static_cast<std::size_t>(bits_per_symbol(cfg.scheme)) * cfg.n_t;
    const double sigma_n_sq = noise_variance_for_snr_db(cfg.n_t, cfg.snr_db);
    const double sigma_e_sq = pilot_error_variance(cfg.n_t, cfg.np_ep);
    SeededRng rng(cfg.seed);

    std::vector<DetectionInput> workload(cfg.symbols);
    ChannelRealization channel;
    CsiEstimate csi;
    std::size_t window_pos = 0;
    for (std::uint64_t i = 0; i < cfg.symbols; ++i) {
        if (window_pos == 0) {
            channel = draw_channel(rng, cfg.n_t, cfg.n_r, {cfg.rho});
            csi = corrupt_csi(channel, sigma_e_sq, rng);
        }
        window_pos = (window_pos + 1) % cfg.block_period;
        const BitBlock bits = random_bits(rng, k);
        const SymbolVector x = modulate(bits, cfg.scheme);
        workload[i].y = apply_channel(channel, x, {sigma_n_sq}, rng);
        workload[i].csi = csi;
        workload[i].sigma_n_sq = sigma_n_sq;
        workload[i].scheme = cfg.scheme;
    }
    return workload;
}

/// Sums the hard bits so the optimizer cannot discard the detection work.
struct BenchSink {
    std::uint64_t checksum = 0;
    void consume(const BitBlock& bits) {
        for (const std::uint8_t b : bits) checksum += b;
    }
};

template <typename Fn>
inline double timed_pass(Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace detail

/// Times each detector over the identical pre-generated workload. Every
/// repetition is preceded by a short warmup slice; the reported wall time is
/// the median over repetitions. The DNN path is timed batched, including
/// feature construction, matching how it runs in the sweep.
inline std::vector<ThroughputRow> run_throughput_bench(
    const BenchConfig& cfg, const std::map<std::string, const nn::NetworkModel*>& models = {},
    std::uint64_t* checksum_out = nullptr) {
    detail::validate_bench_config(cfg);
    const std::size_t k = static_cast<std::size_t>(bits_per_symbol(cfg.scheme)) * cfg.n_t;
    for (const auto& name : cfg.detectors) {
        if (name == "ml" && k > kMlCandidateGuardBits)
            throw CapacityError("bench: ML candidate space exceeds the 2^20 guard");
        if (name != "zf" && name != "mmse" && name != "ml" && name != "dnn")
            throw ParameterError("bench: unknown detector '" + name + "'");
    }

    const std::vector<DetectionInput> workload = detail::build_bench_workload(cfg);
    const std::uint64_t warmup = std::min<std::uint64_t>(1000, cfg.symbols);
    detail::BenchSink sink;

    std::vector<ThroughputRow> rows;
    for (const auto& name : cfg.detectors) {
        const nn::NetworkModel* model = nullptr;
        if (name == "dnn") {
            const auto it = models.find(name);
            if (it == models.end() || it->second == nullptr)
                throw ParameterError("bench: detector 'dnn' needs a model");
            model = it->second;
            if (model->input_width != nn::dnn_input_width(cfg.n_t, cfg.n_r) ||
                model->output_width != k)
                throw ParameterError("bench: model widths do not match the link configuration");
        }

        auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
            if (name == "dnn") {
                const std::size_t width = nn::dnn_input_width(cfg.n_t, cfg.n_r);
                for (std::uint64_t at = begin; at < end;) {
                    const std::size_t n =
                        static_cast<std::size_t>(std::min<std::uint64_t>(cfg.dnn_batch, end - at));
                    RealMatrix batch(n, width);
                    for (std::size_t i = 0; i < n; ++i) {
                        const RVec feat =
                            build_features(workload[at + i].y, workload[at + i].csi);
                        std::copy(feat.begin(), feat.end(), batch.row(i));
                    }
                    const RealMatrix probs = nn::forward_infer(*model, batch);
                    for (std::size_t i = 0; i < n; ++i)
                        sink.consume(nn::threshold_bits(probs.row(i), k));
                    at += n;
                }
            } else {
                for (std::uint64_t i = begin; i < end; ++i) {
                    DetectionOutput out;
                    if (name == "zf")
                        out = detect_zf(workload[i]);
                    else if (name == "mmse")
                        out = detect_mmse(workload[i]);
                    else
                        out = detect_ml(workload[i]);
                    sink.consume(out.b_hat);
                }
            }
        };

        std::vector<double> times;
        times.reserve(cfg.repetitions);
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
            run_range(0, warmup);
            times.push_back(detail::timed_pass([&] { run_range(0, cfg.symbols); }));
        }

        ThroughputRow row;
        row.detector = name;
        row.detected_bits = cfg.symbols * static_cast<std::uint64_t>(k);
        row.wall_seconds = detail::median(std::move(times));
        row.throughput_kbps =
            static_cast<double>(row.detected_bits) / row.wall_seconds / 1000.0;
        rows.push_back(std::move(row));
    }
    if (checksum_out != nullptr) *checksum_out = sink.checksum;
    return rows;
}

inline std::string throughput_csv(const std::vector<ThroughputRow>& rows) {
    std::string out = "detector,detected_bits,wall_seconds,throughput_kbps\n";
    for (const auto& r : rows) {
        out += r.detector;
        out += ',';
        out += std::to_string(r.detected_bits);
        out += ',';
        out += format_double(r.wall_seconds);
        out += ',';
        out += format_double(r.throughput_kbps);
        out += '\n';
    }
    return out;
}

inline void write_throughput_csv(const std::vector<ThroughputRow>& rows,
                                 const std::string& path) {
    write_text_file(path, throughput_csv(rows));
}

}  // namespace mimo
