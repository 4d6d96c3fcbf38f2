#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <mimo/mimo.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    unsigned threads = 1;

    // gen-data
    std::string split = "train";
    std::optional<std::uint64_t> samples;
    std::string dataset_file;

    // train
    std::string train_data;
    std::string val_data;
};

mimo::RunConfig resolve_config(const CliOptions& opts) {
    mimo::RunConfig cfg =
        opts.config_path.empty() ? mimo::RunConfig{} : mimo::load_run_config(opts.config_path);
    if (opts.seed) {
        cfg.seed = *opts.seed;
        if (!cfg.training_seed_explicit) cfg.training.seed = cfg.seed;
    }
    if (opts.out_dir) cfg.output_dir = *opts.out_dir;
    return cfg;
}

void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw mimo::IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string out_path(const mimo::RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

std::string model_path(const mimo::RunConfig& cfg) {
    const fs::path p(cfg.model_file);
    return p.is_absolute() ? p.string() : (fs::path(cfg.output_dir) / p).string();
}

void write_manifest(const mimo::RunConfig& cfg, const std::string& name, const json& manifest) {
    mimo::write_text_file(out_path(cfg, name), manifest.dump(2) + "\n");
}

/// Reads, hashes, and parses a model file, then checks it against the link
/// configuration.
mimo::nn::NetworkModel load_model_checked(const mimo::RunConfig& cfg, std::string& sha1_out) {
    const std::string path = model_path(cfg);
    const std::string text = mimo::read_text_file(path);
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw mimo::FormatError("model file: malformed JSON: " + path);
    mimo::nn::NetworkModel model = mimo::nn::model_from_json(j);
    if (model.input_width != mimo::nn::dnn_input_width(cfg.n_t, cfg.n_r) ||
        model.output_width !=
            static_cast<std::size_t>(mimo::bits_per_symbol(cfg.scheme)) * cfg.n_t)
        throw mimo::ConfigError(
            "config: paths.model_file: model widths do not match system.n_t/n_r/scheme");
    sha1_out = mimo::git_blob_sha1_hex(text);
    return model;
}

bool wants_dnn(const std::vector<std::string>& detectors) {
    for (const auto& d : detectors)
        if (d == "dnn") return true;
    return false;
}

int cmd_gen_data(const CliOptions& opts) {
    mimo::RunConfig cfg = resolve_config(opts);
    ensure_output_dir(cfg.output_dir);

    const mimo::DerivedSeeds seeds = mimo::DerivedSeeds::from(cfg.seed);
    std::uint64_t count = 0;
    std::uint64_t dataset_seed = 0;
    if (opts.split == "train") {
        count = cfg.train_samples;
        dataset_seed = seeds.train_data;
    } else if (opts.split == "val") {
        count = cfg.val_samples;
        dataset_seed = seeds.val_data;
    } else {
        count = cfg.test_samples;
        dataset_seed = seeds.test_data;
    }
    if (opts.samples) count = *opts.samples;
    if (count == 0) throw mimo::ConfigError("config: data: sample count must be positive");

    const std::string file_name =
        opts.dataset_file.empty() ? "dataset_" + opts.split + ".bin" : opts.dataset_file;
    const std::string path = out_path(cfg, file_name);

    mimo::DatasetSpec spec = mimo::dataset_spec_from_config(cfg, dataset_seed);
    mimo::SampleGenerator gen(spec);
    mimo::DatasetWriter writer(path, spec, count);
    for (std::uint64_t i = 0; i < count; ++i) writer.append(gen.next());
    writer.close();

    json extra;
    extra["split"] = opts.split;
    extra["samples"] = count;
    extra["dataset_seed"] = dataset_seed;
    write_manifest(cfg, "manifest_gen_data_" + opts.split + ".json",
                   mimo::build_manifest("gen-data", cfg, opts.threads, {{"dataset", path}}, extra));
    std::printf("wrote %llu samples to %s\n", static_cast<unsigned long long>(count), path.c_str());
    return 0;
}

mimo::Dataset load_dataset_checked(const std::string& path, const mimo::RunConfig& cfg) {
    mimo::Dataset ds = mimo::load_dataset(path);
    if (ds.feature_width != mimo::nn::dnn_input_width(cfg.n_t, cfg.n_r) ||
        ds.target_width != static_cast<std::size_t>(mimo::bits_per_symbol(cfg.scheme)) * cfg.n_t)
        throw mimo::ConfigError("config: system: dataset " + path +
                                " does not match system.n_t/n_r/scheme");
    return ds;
}

int cmd_train(const CliOptions& opts) {
    mimo::RunConfig cfg = resolve_config(opts);
    ensure_output_dir(cfg.output_dir);
    const mimo::DerivedSeeds seeds = mimo::DerivedSeeds::from(cfg.seed);

    mimo::RealMatrix x_train, y_train, x_val, y_val;
    if (!opts.train_data.empty() || !opts.val_data.empty()) {
        if (opts.train_data.empty() || opts.val_data.empty())
            throw mimo::ConfigError("config: train: --train-data and --val-data go together");
        const mimo::Dataset train_ds = load_dataset_checked(opts.train_data, cfg);
        const mimo::Dataset val_ds = load_dataset_checked(opts.val_data, cfg);
        x_train = train_ds.features;
        y_train = train_ds.targets_real();
        x_val = val_ds.features;
        y_val = val_ds.targets_real();
    } else {
        const mimo::Dataset train_ds = mimo::generate_dataset(
            mimo::dataset_spec_from_config(cfg, seeds.train_data),
            static_cast<std::size_t>(cfg.train_samples));
        const mimo::Dataset val_ds = mimo::generate_dataset(
            mimo::dataset_spec_from_config(cfg, seeds.val_data),
            static_cast<std::size_t>(cfg.val_samples));
        x_train = train_ds.features;
        y_train = train_ds.targets_real();
        x_val = val_ds.features;
        y_val = val_ds.targets_real();
    }

    mimo::SeededRng init_rng(seeds.model_init);
    mimo::nn::NetworkModel model = mimo::nn::build_dnn(cfg.n_t, cfg.n_r, cfg.scheme, init_rng);
    const mimo::nn::TrainResult result =
        mimo::nn::train(std::move(model), x_train, y_train, x_val, y_val, cfg.training);

    const std::string model_out = model_path(cfg);
    const std::string model_text = mimo::nn::model_to_json(result.model).dump();
    mimo::write_text_file(model_out, model_text);

    std::string history = "epoch,train_loss,val_loss\n";
    for (const auto& row : result.history) {
        history += std::to_string(row.epoch);
        history += ',';
        history += mimo::format_double(row.train_loss);
        history += ',';
        history += mimo::format_double(row.val_loss);
        history += '\n';
    }
    const std::string history_path = out_path(cfg, "history.csv");
    mimo::write_text_file(history_path, history);

    json extra;
    extra["model_sha1"] = mimo::git_blob_sha1_hex(model_text);
    extra["best_val_loss"] = result.best_val_loss;
    extra["epochs_run"] = result.history.size();
    write_manifest(cfg, "manifest_train.json",
                   mimo::build_manifest("train", cfg, opts.threads,
                                        {{"model", model_out}, {"history", history_path}}, extra));
    std::printf("best validation loss: %s after %zu epochs; model written to %s\n",
                mimo::format_double(result.best_val_loss).c_str(), result.history.size(),
                model_out.c_str());
    return 0;
}

int cmd_sweep(const CliOptions& opts) {
    mimo::RunConfig cfg = resolve_config(opts);
    ensure_output_dir(cfg.output_dir);
    const mimo::SweepConfig sweep_cfg = mimo::sweep_config_from_config(cfg);

    mimo::nn::NetworkModel model;
    std::map<std::string, const mimo::nn::NetworkModel*> models;
    std::string model_sha1;
    if (wants_dnn(sweep_cfg.detectors)) {
        model = load_model_checked(cfg, model_sha1);
        models["dnn"] = &model;
    }

    const mimo::BerResult result = mimo::run_ber_sweep(sweep_cfg, models, opts.threads);
    const std::string csv_path = out_path(cfg, "ber.csv");
    mimo::write_ber_csv(result, csv_path);

    json extra;
    extra["erased_blocks"] = result.erased_blocks;
    if (!model_sha1.empty()) extra["model_sha1"] = model_sha1;
    write_manifest(
        cfg, "manifest_sweep.json",
        mimo::build_manifest("sweep", cfg, opts.threads, {{"ber_csv", csv_path}}, extra));
    std::printf("wrote %zu BER points to %s\n", result.points.size(), csv_path.c_str());
    return 0;
}

int cmd_bench(const CliOptions& opts) {
    mimo::RunConfig cfg = resolve_config(opts);
    ensure_output_dir(cfg.output_dir);
    const mimo::BenchConfig bench_cfg = mimo::bench_config_from_config(cfg);

    mimo::nn::NetworkModel model;
    std::map<std::string, const mimo::nn::NetworkModel*> models;
    std::string model_sha1;
    if (wants_dnn(bench_cfg.detectors)) {
        model = load_model_checked(cfg, model_sha1);
        models["dnn"] = &model;
    }

    const std::vector<mimo::ThroughputRow> rows = mimo::run_throughput_bench(bench_cfg, models);
    const std::string csv_path = out_path(cfg, "throughput.csv");
    mimo::write_throughput_csv(rows, csv_path);

    json extra;
    if (!model_sha1.empty()) extra["model_sha1"] = model_sha1;
    write_manifest(
        cfg, "manifest_bench.json",
        mimo::build_manifest("bench", cfg, opts.threads, {{"throughput_csv", csv_path}}, extra));

    std::printf("%-10s %14s %14s %14s\n", "detector", "bits", "seconds", "kbps");
    for (const auto& row : rows)
        std::printf("%-10s %14llu %14s %14s\n", row.detector.c_str(),
                    static_cast<unsigned long long>(row.detected_bits),
                    mimo::format_double(row.wall_seconds).c_str(),
                    mimo::format_double(row.throughput_kbps).c_str());
    std::printf("table written to %s\n", csv_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mimodet: link-level MIMO detection toolkit"};
    app.require_subcommand(1);

    CliOptions opts;
    app.add_option("--config", opts.config_path, "JSON run configuration file");
    app.add_option("--seed", opts.seed, "override the run seed");
    app.add_option("--out", opts.out_dir, "output directory");
    app.add_option("--threads", opts.threads, "worker threads (1 = bit-exact sequential path)")
        ->check(CLI::Range(1u, 256u));

    CLI::App* gen = app.add_subcommand("gen-data", "generate a labelled dataset file");
    gen->fallthrough();
    gen->add_option("--split", opts.split, "which split sizes/seed to use")
        ->check(CLI::IsMember({"train", "val", "test"}));
    gen->add_option("--samples", opts.samples, "override the sample count");
    gen->add_option("--file", opts.dataset_file, "dataset file name inside the output directory");

    CLI::App* train = app.add_subcommand("train", "train the DNN detector");
    train->fallthrough();
    train->add_option("--train-data", opts.train_data, "pre-generated training dataset file");
    train->add_option("--val-data", opts.val_data, "pre-generated validation dataset file");

    CLI::App* sweep = app.add_subcommand("sweep", "run a BER-versus-SNR sweep");
    sweep->fallthrough();

    CLI::App* bench = app.add_subcommand("bench", "measure detector throughput");
    bench->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(opts);
        if (train->parsed()) return cmd_train(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        return cmd_bench(opts);
    } catch (const mimo::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const mimo::ParameterError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const mimo::CapacityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const mimo::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mimo::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const mimo::SingularityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
