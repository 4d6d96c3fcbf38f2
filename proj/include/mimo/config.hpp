#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bench.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "modem.hpp"
#include "nn_train.hpp"
#include "sweep.hpp"
#include "textio.hpp"

namespace mimo {

/// Recorded in every manifest so result files are self-describing.
inline constexpr const char* kSnrConvention =
    "SNR_dB = 10*log10(N_t*E_s/sigma_n_sq) with E_s = 1 per symbol and unit-variance channel "
    "entries, i.e. sigma_n_sq = N_t*10^(-SNR_dB/10)";

struct RunConfig {
    // system
    std::size_t n_t = 4;
    std::size_t n_r = 4;
    ModulationScheme scheme = ModulationScheme::BPSK;
    // channel
    double rho = 0.0;
    std::size_t block_period = 1;
    double np_ep = std::numeric_limits<double>::infinity();  // +inf = perfect CSI
    // snr (sweep grid)
    std::vector<double> snr_db_list{0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0};
    // training
    nn::TrainingConfig training;
    bool training_seed_explicit = false;
    // data
    std::uint64_t train_samples = 540000;
    std::uint64_t val_samples = 180000;
    std::uint64_t test_samples = 720000;
    std::vector<double> data_snr_db_list;  // empty = use training SNR
    // sweep
    std::uint64_t bits_per_point = 100000;
    std::vector<std::string> sweep_detectors{"zf", "mmse", "ml"};
    // bench
    std::uint64_t bench_symbols = 720000;
    std::size_t bench_repetitions = 3;
    std::size_t bench_batch = 256;
    double bench_snr_db = 8.0;
    std::vector<std::string> bench_detectors{"zf", "mmse", "ml"};
    // paths
    std::string model_file = "model.json";
    std::string output_dir = ".";
    // root
    std::uint64_t seed = 1;
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& key, const std::string& what) {
    throw ConfigError("config: " + key + ": " + what);
}

inline void reject_unknown_keys(const json& obj, const std::string& section,
                                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool found = false;
        for (const char* key : allowed) found = found || it.key() == key;
        if (!found) {
            const std::string path = section.empty() ? it.key() : section + "." + it.key();
            throw ConfigError("config: unknown key: " + path);
        }
    }
}

inline double get_number(const json& v, const std::string& key) {
    if (!v.is_number()) config_fail(key, "expected a number");
    return v.get<double>();
}

inline std::uint64_t get_u64(const json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    config_fail(key, "expected a non-negative integer");
}

inline std::uint64_t get_positive_u64(const json& v, const std::string& key) {
    const std::uint64_t value = get_u64(v, key);
    if (value == 0) config_fail(key, "must be positive");
    return value;
}

inline std::string get_string(const json& v, const std::string& key) {
    if (!v.is_string()) config_fail(key, "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> get_number_list(const json& v, const std::string& key) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
        return out;
    }
    if (!v.is_array() || v.empty()) config_fail(key, "expected a number or non-empty list");
    for (const auto& item : v) {
        if (!item.is_number()) config_fail(key, "expected numeric entries");
        out.push_back(item.get<double>());
    }
    return out;
}

inline std::vector<std::string> get_detector_list(const json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) config_fail(key, "expected a non-empty list");
    std::vector<std::string> out;
    for (const auto& item : v) {
        const std::string name = item.is_string() ? item.get<std::string>() : std::string();
        if (name != "zf" && name != "mmse" && name != "ml" && name != "dnn")
            config_fail(key, "detectors must be among zf, mmse, ml, dnn");
        out.push_back(name);
    }
    return out;
}

inline void parse_system(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, "system", {"n_t", "n_r", "scheme"});
    if (obj.contains("n_t")) cfg.n_t = static_cast<std::size_t>(get_positive_u64(obj["n_t"], "system.n_t"));
    if (obj.contains("n_r")) cfg.n_r = static_cast<std::size_t>(get_positive_u64(obj["n_r"], "system.n_r"));
    if (obj.contains("scheme")) {
        const std::string name = get_string(obj["scheme"], "system.scheme");
        try {
            cfg.scheme = scheme_from_name(name);
        } catch (const ParameterError&) {
            config_fail("system.scheme", "must be \"bpsk\" or \"qpsk\"");
        }
    }
    if (cfg.n_t > 8) config_fail("system.n_t", "at most 8 transmit antennas are supported");
    if (cfg.n_r > 8) config_fail("system.n_r", "at most 8 receive antennas are supported");
    if (cfg.n_r < cfg.n_t) config_fail("system.n_r", "must be at least n_t");
}

inline void parse_channel(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, "channel", {"rho", "block_period", "np_ep"});
    if (obj.contains("rho")) {
        cfg.rho = get_number(obj["rho"], "channel.rho");
        if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) config_fail("channel.rho", "must lie in [0, 1)");
    }
    if (obj.contains("block_period"))
        cfg.block_period =
            static_cast<std::size_t>(get_positive_u64(obj["block_period"], "channel.block_period"));
    if (obj.contains("np_ep")) {
        const json& v = obj["np_ep"];
        if (v.is_string()) {
            if (v.get<std::string>() != "perfect")
                config_fail("channel.np_ep", "expected a positive number or \"perfect\"");
            cfg.np_ep = std::numeric_limits<double>::infinity();
        } else {
            cfg.np_ep = get_number(v, "channel.np_ep");
            if (!(cfg.np_ep > 0.0))
                config_fail("channel.np_ep", "expected a positive number or \"perfect\"");
        }
    }
}

inline void parse_training(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, "training",
                        {"batch_size", "max_epochs", "lr", "early_stop_patience", "seed",
                         "training_snr_db", "target_train_loss"});
    auto& t = cfg.training;
    if (obj.contains("batch_size")) {
        t.batch_size =
            static_cast<std::size_t>(get_positive_u64(obj["batch_size"], "training.batch_size"));
        if (t.batch_size < 2) config_fail("training.batch_size", "must be at least 2");
    }
    if (obj.contains("max_epochs"))
        t.max_epochs =
            static_cast<std::size_t>(get_positive_u64(obj["max_epochs"], "training.max_epochs"));
    if (obj.contains("lr")) {
        t.lr = get_number(obj["lr"], "training.lr");
        if (!(t.lr > 0.0)) config_fail("training.lr", "must be positive");
    }
    if (obj.contains("early_stop_patience"))
        t.early_stop_patience = static_cast<std::size_t>(
            get_positive_u64(obj["early_stop_patience"], "training.early_stop_patience"));
    if (obj.contains("seed")) {
        t.seed = get_u64(obj["seed"], "training.seed");
        cfg.training_seed_explicit = true;
    }
    if (obj.contains("training_snr_db"))
        t.training_snr_db = get_number(obj["training_snr_db"], "training.training_snr_db");
    if (obj.contains("target_train_loss")) {
        t.target_train_loss = get_number(obj["target_train_loss"], "training.target_train_loss");
        if (t.target_train_loss < 0.0)
            config_fail("training.target_train_loss", "must be non-negative");
    }
}

inline void parse_data(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, "data", {"train_samples", "val_samples", "test_samples", "snr_db"});
    if (obj.contains("train_samples"))
        cfg.train_samples = get_positive_u64(obj["train_samples"], "data.train_samples");
    if (obj.contains("val_samples"))
        cfg.val_samples = get_positive_u64(obj["val_samples"], "data.val_samples");
    if (obj.contains("test_samples"))
        cfg.test_samples = get_positive_u64(obj["test_samples"], "data.test_samples");
    if (obj.contains("snr_db")) cfg.data_snr_db_list = get_number_list(obj["snr_db"], "data.snr_db");
}

inline void parse_sweep(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, "sweep", {"bits_per_point", "detectors"});
    if (obj.contains("bits_per_point")) {
        cfg.bits_per_point = get_positive_u64(obj["bits_per_point"], "sweep.bits_per_point");
        if (cfg.bits_per_point < 10000)
            config_fail("sweep.bits_per_point", "must be at least 10000");
    }
    if (obj.contains("detectors"))
        cfg.sweep_detectors = get_detector_list(obj["detectors"], "sweep.detectors");
}

inline void parse_bench(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, "bench",
                        {"symbols", "repetitions", "batch_size", "snr_db", "detectors"});
    if (obj.contains("symbols"))
        cfg.bench_symbols = get_positive_u64(obj["symbols"], "bench.symbols");
    if (obj.contains("repetitions"))
        cfg.bench_repetitions =
            static_cast<std::size_t>(get_positive_u64(obj["repetitions"], "bench.repetitions"));
    if (obj.contains("batch_size"))
        cfg.bench_batch =
            static_cast<std::size_t>(get_positive_u64(obj["batch_size"], "bench.batch_size"));
    if (obj.contains("snr_db")) cfg.bench_snr_db = get_number(obj["snr_db"], "bench.snr_db");
    if (obj.contains("detectors"))
        cfg.bench_detectors = get_detector_list(obj["detectors"], "bench.detectors");
}

inline void parse_paths(const json& obj, RunConfig& cfg) {
    reject_unknown_keys(obj, "paths", {"model_file", "output_dir"});
    if (obj.contains("model_file")) {
        cfg.model_file = get_string(obj["model_file"], "paths.model_file");
        if (cfg.model_file.empty()) config_fail("paths.model_file", "must not be empty");
    }
    if (obj.contains("output_dir")) {
        cfg.output_dir = get_string(obj["output_dir"], "paths.output_dir");
        if (cfg.output_dir.empty()) config_fail("paths.output_dir", "must not be empty");
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& root) {
    if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
    detail::reject_unknown_keys(
        root, "", {"system", "channel", "snr", "training", "data", "sweep", "bench", "paths", "seed"});
    RunConfig cfg;
    auto section = [&](const char* name) -> const nlohmann::json* {
        if (!root.contains(name)) return nullptr;
        if (!root[name].is_object()) detail::config_fail(name, "expected an object");
        return &root[name];
    };
    if (const auto* obj = section("system")) detail::parse_system(*obj, cfg);
    if (const auto* obj = section("channel")) detail::parse_channel(*obj, cfg);
    if (root.contains("snr")) cfg.snr_db_list = detail::get_number_list(root["snr"], "snr");
    if (const auto* obj = section("training")) detail::parse_training(*obj, cfg);
    if (const auto* obj = section("data")) detail::parse_data(*obj, cfg);
    if (const auto* obj = section("sweep")) detail::parse_sweep(*obj, cfg);
    if (const auto* obj = section("bench")) detail::parse_bench(*obj, cfg);
    if (const auto* obj = section("paths")) detail::parse_paths(*obj, cfg);
    if (root.contains("seed")) cfg.seed = detail::get_u64(root["seed"], "seed");
    if (!cfg.training_seed_explicit) cfg.training.seed = cfg.seed;
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    const std::string text = read_text_file(path);
    const nlohmann::json root = nlohmann::json::parse(text, nullptr, false);
    if (root.is_discarded()) throw ConfigError("config: " + path + " is not valid JSON");
    return parse_run_config(root);
}

/// Fully resolved configuration, defaults included, as stored in manifests.
inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["system"] = {{"n_t", cfg.n_t}, {"n_r", cfg.n_r}, {"scheme", scheme_name(cfg.scheme)}};
    j["channel"]["rho"] = cfg.rho;
    j["channel"]["block_period"] = cfg.block_period;
    if (std::isinf(cfg.np_ep))
        j["channel"]["np_ep"] = "perfect";
    else
        j["channel"]["np_ep"] = cfg.np_ep;
    j["channel"]["sigma_e_sq"] = pilot_error_variance(cfg.n_t, cfg.np_ep);
    j["snr"] = cfg.snr_db_list;
    j["training"] = {{"batch_size", cfg.training.batch_size},
                     {"max_epochs", cfg.training.max_epochs},
                     {"lr", cfg.training.lr},
                     {"early_stop_patience", cfg.training.early_stop_patience},
                     {"seed", cfg.training.seed},
                     {"training_snr_db", cfg.training.training_snr_db},
                     {"target_train_loss", cfg.training.target_train_loss}};
    j["data"] = {{"train_samples", cfg.train_samples},
                 {"val_samples", cfg.val_samples},
                 {"test_samples", cfg.test_samples},
                 {"snr_db", cfg.data_snr_db_list.empty()
                                ? std::vector<double>{cfg.training.training_snr_db}
                                : cfg.data_snr_db_list}};
    j["sweep"] = {{"bits_per_point", cfg.bits_per_point}, {"detectors", cfg.sweep_detectors}};
    j["bench"] = {{"symbols", cfg.bench_symbols},
                  {"repetitions", cfg.bench_repetitions},
                  {"batch_size", cfg.bench_batch},
                  {"snr_db", cfg.bench_snr_db},
                  {"detectors", cfg.bench_detectors}};
    j["paths"] = {{"model_file", cfg.model_file}, {"output_dir", cfg.output_dir}};
    j["seed"] = cfg.seed;
    return j;
}

/// Seed streams derived from the run seed. Fixed indices keep the splits and
/// the model initialization independent of one another.
struct DerivedSeeds {
    std::uint64_t train_data;
    std::uint64_t val_data;
    std::uint64_t test_data;
    std::uint64_t model_init;

    static DerivedSeeds from(std::uint64_t seed) {
        return {seed ^ 0ull, seed ^ 1ull, seed ^ 2ull, seed ^ 3ull};
    }
};

inline DatasetSpec dataset_spec_from_config(const RunConfig& cfg, std::uint64_t seed) {
    DatasetSpec spec;
    spec.n_t = cfg.n_t;
    spec.n_r = cfg.n_r;
    spec.scheme = cfg.scheme;
    spec.snr_db_list = cfg.data_snr_db_list.empty()
                           ? std::vector<double>{cfg.training.training_snr_db}
                           : cfg.data_snr_db_list;
    spec.rho = cfg.rho;
    spec.block_period = cfg.block_period;
    spec.np_ep = cfg.np_ep;
    spec.seed = seed;
    return spec;
}

inline SweepConfig sweep_config_from_config(const RunConfig& cfg) {
    SweepConfig sweep;
    sweep.n_t = cfg.n_t;
    sweep.n_r = cfg.n_r;
    sweep.scheme = cfg.scheme;
    sweep.snr_db_list = cfg.snr_db_list;
    sweep.bits_per_point = cfg.bits_per_point;
    sweep.detectors = cfg.sweep_detectors;
    sweep.np_ep = cfg.np_ep;
    sweep.rho = cfg.rho;
    sweep.block_period = cfg.block_period;
    sweep.seed = cfg.seed;
    sweep.dnn_batch = cfg.bench_batch;
    return sweep;
}

inline BenchConfig bench_config_from_config(const RunConfig& cfg) {
    BenchConfig bench;
    bench.n_t = cfg.n_t;
    bench.n_r = cfg.n_r;
    bench.scheme = cfg.scheme;
    bench.snr_db = cfg.bench_snr_db;
    bench.symbols = cfg.bench_symbols;
    bench.repetitions = cfg.bench_repetitions;
    bench.detectors = cfg.bench_detectors;
    bench.np_ep = cfg.np_ep;
    bench.rho = cfg.rho;
    bench.block_period = cfg.block_period;
    bench.seed = cfg.seed;
    bench.dnn_batch = cfg.bench_batch;
    return bench;
}

/// Run manifest: everything needed to reproduce the outputs bit-exactly on
/// the same platform. Deliberately timestamp-free so reruns emit identical
/// manifests.
inline nlohmann::json build_manifest(const std::string& command, const RunConfig& cfg,
                                     unsigned threads,
                                     const std::map<std::string, std::string>& outputs,
                                     const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = run_config_to_json(cfg);
    j["threads"] = threads;
    j["seed"] = cfg.seed;
    j["derived_seeds"] = {{"train_data", DerivedSeeds::from(cfg.seed).train_data},
                          {"val_data", DerivedSeeds::from(cfg.seed).val_data},
                          {"test_data", DerivedSeeds::from(cfg.seed).test_data},
                          {"model_init", DerivedSeeds::from(cfg.seed).model_init},
                          {"training", cfg.training.seed}};
    j["snr_convention"] = kSnrConvention;
    j["outputs"] = outputs;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = *it;
    return j;
}

}  // namespace mimo
