#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "channel.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "modem.hpp"
#include "rng.hpp"

namespace mimo {

/// Detector input feature vector: the real embeddings of y and H side by
/// side, [ydot | Hdot], flattened row-major. Width is 2*n_r*(2*n_t + 1).
inline RVec build_features(const CVec& y, const CsiEstimate& csi) {
    const std::size_t n_r = csi.h_hat.rows;
    const std::size_t n_t = csi.h_hat.cols;
    if (n_r == 0 || n_t == 0) throw ParameterError("build_features: empty channel estimate");
    if (y.size() != n_r) throw ParameterError("build_features: observation length != n_r");
    const RVec ey = real_embed_vector(y);
    const RealMatrix eh = real_embed_matrix(csi.h_hat);
    const std::size_t row_width = 2 * n_t + 1;
    RVec out(2 * n_r * row_width);
    for (std::size_t r = 0; r < 2 * n_r; ++r) {
        out[r * row_width] = ey[r];
        for (std::size_t c = 0; c < 2 * n_t; ++c) out[r * row_width + 1 + c] = eh(r, c);
    }
    return out;
}

struct SampleMeta {
    double snr_db = 0.0;
    double csi_error_variance = 0.0;
    std::uint64_t channel_index = 0;  // block-fading window the sample fell in
};

struct DatasetSpec {
    std::size_t n_t = 4;
    std::size_t n_r = 4;
    ModulationScheme scheme = ModulationScheme::BPSK;
    /// One entry is the standard fixed-SNR protocol; several entries switch
    /// to mixed-SNR generation with a uniform draw per sample.
    std::vector<double> snr_db_list{8.0};
    double rho = 0.0;
    std::size_t block_period = 1;
    /// Pilot budget N_p * E_p; +infinity means perfect CSI.
    double np_ep = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1;

    double sigma_e_sq() const { return pilot_error_variance(n_t, np_ep); }
    std::size_t feature_width() const { return 2 * n_r * (2 * n_t + 1); }
    std::size_t target_width() const {
        return static_cast<std::size_t>(bits_per_symbol(scheme)) * n_t;
    }
};

inline void validate_dataset_spec(const DatasetSpec& spec) {
    if (spec.n_t == 0 || spec.n_r == 0)
        throw ParameterError("dataset spec: dimensions must be positive");
    if (spec.snr_db_list.empty()) throw ParameterError("dataset spec: empty SNR list");
    if (!(spec.rho >= 0.0 && spec.rho < 1.0)) throw ParameterError("dataset spec: rho out of range");
    if (spec.block_period == 0) throw ParameterError("dataset spec: block period must be positive");
    if (!(spec.np_ep > 0.0)) throw ParameterError("dataset spec: np_ep must be positive");
}

struct Dataset {
    DatasetSpec spec;
    std::size_t feature_width = 0;
    std::size_t target_width = 0;
    RealMatrix features;                // size x feature_width
    std::vector<std::uint8_t> targets;  // size x target_width
    std::vector<SampleMeta> meta;

    std::size_t size() const { return features.rows; }

    /// Targets as a 0/1 double matrix for the training loop.
    RealMatrix targets_real() const {
        RealMatrix out(size(), target_width);
        for (std::size_t i = 0; i < targets.size(); ++i)
            out.data[i] = static_cast<double>(targets[i]);
        return out;
    }
};

/// Draws labelled samples one at a time. Per block-fading window it draws the
/// channel and then the CSI error; per slot it draws bits (the SNR pick first
/// when running mixed-SNR), then the receiver noise.
class SampleGenerator {
  public:
    explicit SampleGenerator(const DatasetSpec& spec)
        : spec_(spec), rng_(spec.seed), sigma_e_sq_(spec.sigma_e_sq()) {
        validate_dataset_spec(spec);
    }

    struct Sample {
        RVec features;
        BitBlock bits;
        SampleMeta meta;
    };

    Sample next() {
        if (slot_ % spec_.block_period == 0) {
            channel_ = draw_channel(rng_, spec_.n_t, spec_.n_r, {spec_.rho});
            csi_ = corrupt_csi(channel_, sigma_e_sq_, rng_);
        }
        const std::uint64_t window = slot_ / spec_.block_period;
        const double snr_db =
            spec_.snr_db_list.size() == 1
                ? spec_.snr_db_list.front()
                : spec_.snr_db_list[rng_.next_below(spec_.snr_db_list.size())];
        BitBlock bits = random_bits(rng_, spec_.target_width());
        const SymbolVector x = modulate(bits, spec_.scheme);
        const CVec y = apply_channel(
            channel_, x, {noise_variance_for_snr_db(spec_.n_t, snr_db)}, rng_);
        ++slot_;
        return {build_features(y, csi_), std::move(bits), {snr_db, sigma_e_sq_, window}};
    }

  private:
    DatasetSpec spec_;
    SeededRng rng_;
    double sigma_e_sq_;
    std::uint64_t slot_ = 0;
    ChannelRealization channel_;
    CsiEstimate csi_;
};

inline Dataset generate_dataset(const DatasetSpec& spec, std::size_t n_samples) {
    if (n_samples == 0) throw ParameterError("generate_dataset: sample count must be positive");
    SampleGenerator gen(spec);
    Dataset ds;
    ds.spec = spec;
    ds.feature_width = spec.feature_width();
    ds.target_width = spec.target_width();
    ds.features = RealMatrix(n_samples, ds.feature_width);
    ds.targets.resize(n_samples * ds.target_width);
    ds.meta.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        auto sample = gen.next();
        std::copy(sample.features.begin(), sample.features.end(), ds.features.row(i));
        std::copy(sample.bits.begin(), sample.bits.end(), ds.targets.begin() + i * ds.target_width);
        ds.meta[i] = sample.meta;
    }
    return ds;
}

namespace detail {

inline void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void append_f64_le(std::string& out, double d) {
    append_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

inline std::uint64_t read_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline double read_f64_le(const unsigned char* p) {
    return std::bit_cast<double>(read_u64_le(p));
}

inline nlohmann::json dataset_header_json(const DatasetSpec& spec, std::uint64_t count) {
    nlohmann::json h;
    h["format"] = "mimo-dataset";
    h["format_version"] = 1;
    h["endianness"] = "little";
    h["n_t"] = spec.n_t;
    h["n_r"] = spec.n_r;
    h["scheme"] = scheme_name(spec.scheme);
    h["snr_db"] = spec.snr_db_list;
    h["rho"] = spec.rho;
    h["block_period"] = spec.block_period;
    if (std::isinf(spec.np_ep))
        h["np_ep"] = "perfect";
    else
        h["np_ep"] = spec.np_ep;
    h["sigma_e_sq"] = spec.sigma_e_sq();
    h["seed"] = spec.seed;
    h["feature_width"] = spec.feature_width();
    h["target_width"] = spec.target_width();
    h["sample_count"] = count;
    return h;
}

}  // namespace detail

/// Streams samples into a dataset file: one JSON header line, then fixed-width
/// little-endian records (features as f64, target bits as bytes, then the
/// sample's snr_db, csi error variance and channel index).
class DatasetWriter {
  public:
    DatasetWriter(const std::string& path, const DatasetSpec& spec, std::uint64_t count)
        : out_(path, std::ios::binary | std::ios::trunc), path_(path), expected_(count) {
        validate_dataset_spec(spec);
        if (count == 0) throw ParameterError("dataset writer: sample count must be positive");
        if (!out_) throw IoError("cannot open dataset file for writing: " + path);
        feature_width_ = spec.feature_width();
        target_width_ = spec.target_width();
        const std::string header = detail::dataset_header_json(spec, count).dump() + "\n";
        out_.write(header.data(), static_cast<std::streamsize>(header.size()));
    }

    void append(const SampleGenerator::Sample& sample) {
        if (written_ == expected_) throw StateError("dataset writer: more samples than declared");
        if (sample.features.size() != feature_width_ || sample.bits.size() != target_width_)
            throw ParameterError("dataset writer: sample has wrong width");
        std::string rec;
        rec.reserve(feature_width_ * 8 + target_width_ + 24);
        for (const double f : sample.features) detail::append_f64_le(rec, f);
        for (const auto b : sample.bits) rec.push_back(static_cast<char>(b));
        detail::append_f64_le(rec, sample.meta.snr_db);
        detail::append_f64_le(rec, sample.meta.csi_error_variance);
        detail::append_u64_le(rec, sample.meta.channel_index);
        out_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
        ++written_;
    }

    void close() {
        if (written_ != expected_) throw StateError("dataset writer: sample count mismatch on close");
        out_.flush();
        if (!out_.good()) throw IoError("failed to write dataset file: " + path_);
        out_.close();
    }

  private:
    std::ofstream out_;
    std::string path_;
    std::uint64_t expected_ = 0;
    std::uint64_t written_ = 0;
    std::size_t feature_width_ = 0;
    std::size_t target_width_ = 0;
};

inline void save_dataset(const Dataset& ds, const std::string& path) {
    DatasetWriter writer(path, ds.spec, ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        SampleGenerator::Sample s;
        s.features.assign(ds.features.row(i), ds.features.row(i) + ds.feature_width);
        s.bits.assign(ds.targets.begin() + i * ds.target_width,
                      ds.targets.begin() + (i + 1) * ds.target_width);
        s.meta = ds.meta[i];
        writer.append(s);
    }
    writer.close();
}

/// Reads a dataset file back, validating the header and the byte count. A
/// truncated file raises FormatError.
inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw FormatError("dataset file: missing header: " + path);
    nlohmann::json h = nlohmann::json::parse(header_line, nullptr, false);
    if (h.is_discarded()) throw FormatError("dataset file: malformed header JSON");

    Dataset ds;
    try {
        if (h.value("format", "") != "mimo-dataset" || h.value("format_version", 0) != 1)
            throw FormatError("dataset file: wrong format tag or version");
        if (h.value("endianness", "") != "little")
            throw FormatError("dataset file: unsupported endianness");
        ds.spec.n_t = h.at("n_t").get<std::size_t>();
        ds.spec.n_r = h.at("n_r").get<std::size_t>();
        ds.spec.scheme = scheme_from_name(h.at("scheme").get<std::string>());
        ds.spec.snr_db_list = h.at("snr_db").get<std::vector<double>>();
        ds.spec.rho = h.at("rho").get<double>();
        ds.spec.block_period = h.at("block_period").get<std::size_t>();
        if (h.at("np_ep").is_string()) {
            if (h.at("np_ep").get<std::string>() != "perfect")
                throw FormatError("dataset file: bad np_ep value");
            ds.spec.np_ep = std::numeric_limits<double>::infinity();
        } else {
            ds.spec.np_ep = h.at("np_ep").get<double>();
        }
        ds.spec.seed = h.at("seed").get<std::uint64_t>();
        ds.feature_width = h.at("feature_width").get<std::size_t>();
        ds.target_width = h.at("target_width").get<std::size_t>();
        const auto count = h.at("sample_count").get<std::uint64_t>();

        validate_dataset_spec(ds.spec);
        if (ds.feature_width != ds.spec.feature_width() || ds.target_width != ds.spec.target_width())
            throw FormatError("dataset file: width fields disagree with dimensions");
        if (count == 0) throw FormatError("dataset file: empty dataset");

        const std::size_t record =
            ds.feature_width * 8 + ds.target_width + 24;  // features, bits, three meta fields
        ds.features = RealMatrix(count, ds.feature_width);
        ds.targets.resize(count * ds.target_width);
        ds.meta.resize(count);
        std::vector<char> buf(record);
        for (std::uint64_t i = 0; i < count; ++i) {
            in.read(buf.data(), static_cast<std::streamsize>(record));
            if (in.gcount() != static_cast<std::streamsize>(record))
                throw FormatError("dataset file: truncated records");
            const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
            for (std::size_t f = 0; f < ds.feature_width; ++f)
                ds.features(i, f) = detail::read_f64_le(p + f * 8);
            p += ds.feature_width * 8;
            for (std::size_t b = 0; b < ds.target_width; ++b) {
                const unsigned char bit = p[b];
                if (bit > 1) throw FormatError("dataset file: target bits must be 0 or 1");
                ds.targets[i * ds.target_width + b] = bit;
            }
            p += ds.target_width;
            ds.meta[i].snr_db = detail::read_f64_le(p);
            ds.meta[i].csi_error_variance = detail::read_f64_le(p + 8);
            ds.meta[i].channel_index = detail::read_u64_le(p + 16);
        }
        char extra;
        if (in.read(&extra, 1).gcount() != 0)
            throw FormatError("dataset file: trailing bytes after declared records");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset file: ") + e.what());
    }
    return ds;
}

}  // namespace mimo
