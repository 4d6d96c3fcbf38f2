#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "nn.hpp"
#include "textio.hpp"

namespace mimo::nn {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline const char* activation_name(Activation act) {
    switch (act) {
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        default: return "none";
    }
}

inline Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::ReLU;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "none") return Activation::None;
    throw FormatError("model file: unknown activation '" + name + "'");
}

inline void require_finite(const RVec& values, const char* what) {
    for (const double v : values)
        if (!std::isfinite(v)) throw FormatError(std::string("model file: non-finite ") + what);
}

inline RVec vec_from_json(const nlohmann::json& j, const char* what, std::size_t expected) {
    if (!j.is_array() || j.size() != expected)
        throw FormatError(std::string("model file: bad array size for ") + what);
    RVec out;
    out.reserve(expected);
    for (const auto& v : j) {
        if (!v.is_number()) throw FormatError(std::string("model file: non-numeric entry in ") + what);
        out.push_back(v.get<double>());
    }
    require_finite(out, what);
    return out;
}

}  // namespace detail

/// Versioned JSON form of a model. Parameters are written as plain JSON
/// numbers in shortest round-trip notation, so save followed by load restores
/// every double bit for bit.
inline nlohmann::json model_to_json(const NetworkModel& model) {
    validate_model(model);
    nlohmann::json j;
    j["format"] = "mimo-dnn";
    j["format_version"] = kModelFormatVersion;
    j["n_t"] = model.n_t;
    j["n_r"] = model.n_r;
    j["scheme"] = scheme_name(model.scheme);
    j["input_width"] = model.input_width;
    j["output_width"] = model.output_width;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : model.layers) {
        nlohmann::json lj;
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            for (const double w : dense->weights.data)
                if (!std::isfinite(w)) throw ParameterError("model has non-finite weights");
            detail::require_finite(dense->biases, "biases");
            lj["type"] = "dense";
            lj["in"] = dense->in_width();
            lj["out"] = dense->out_width();
            lj["activation"] = detail::activation_name(dense->activation);
            lj["weights"] = dense->weights.data;  // row-major out x in
            lj["biases"] = dense->biases;
        } else {
            const auto& bn = std::get<BatchNormLayer>(layer);
            lj["type"] = "batch_norm";
            lj["width"] = bn.width();
            lj["epsilon"] = bn.epsilon;
            lj["momentum"] = bn.momentum;
            lj["gamma"] = bn.gamma;
            lj["beta"] = bn.beta;
            lj["running_mean"] = bn.running_mean;
            lj["running_var"] = bn.running_var;
        }
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

inline NetworkModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", "") != "mimo-dnn") throw FormatError("model file: wrong format tag");
        if (!j.contains("format_version") || !j["format_version"].is_number_integer() ||
            j["format_version"].get<int>() != kModelFormatVersion)
            throw FormatError("model file: unsupported format_version");

        NetworkModel model;
        model.n_t = j.at("n_t").get<std::size_t>();
        model.n_r = j.at("n_r").get<std::size_t>();
        model.scheme = scheme_from_name(j.at("scheme").get<std::string>());
        model.input_width = j.at("input_width").get<std::size_t>();
        model.output_width = j.at("output_width").get<std::size_t>();

        for (const auto& lj : j.at("layers")) {
            const std::string type = lj.at("type").get<std::string>();
            if (type == "dense") {
                DenseLayer dense;
                const auto in = lj.at("in").get<std::size_t>();
                const auto out = lj.at("out").get<std::size_t>();
                if (in == 0 || out == 0) throw FormatError("model file: zero dense width");
                dense.activation = detail::activation_from_name(lj.at("activation").get<std::string>());
                dense.weights = RealMatrix(out, in);
                dense.weights.data = detail::vec_from_json(lj.at("weights"), "weights", in * out);
                dense.biases = detail::vec_from_json(lj.at("biases"), "biases", out);
                model.layers.emplace_back(std::move(dense));
            } else if (type == "batch_norm") {
                BatchNormLayer bn;
                const auto width = lj.at("width").get<std::size_t>();
                if (width == 0) throw FormatError("model file: zero batch-norm width");
                bn.epsilon = lj.at("epsilon").get<double>();
                bn.momentum = lj.at("momentum").get<double>();
                if (!(bn.epsilon > 0.0) || !(bn.momentum >= 0.0 && bn.momentum < 1.0))
                    throw FormatError("model file: invalid batch-norm hyperparameters");
                bn.gamma = detail::vec_from_json(lj.at("gamma"), "gamma", width);
                bn.beta = detail::vec_from_json(lj.at("beta"), "beta", width);
                bn.running_mean = detail::vec_from_json(lj.at("running_mean"), "running_mean", width);
                bn.running_var = detail::vec_from_json(lj.at("running_var"), "running_var", width);
                for (const double v : bn.running_var)
                    if (v < 0.0) throw FormatError("model file: negative running variance");
                model.layers.emplace_back(std::move(bn));
            } else {
                throw FormatError("model file: unknown layer type '" + type + "'");
            }
        }

        try {
            validate_model(model);
        } catch (const ParameterError& e) {
            throw FormatError(std::string("model file: ") + e.what());
        }
        if (const auto* out_dense = std::get_if<DenseLayer>(&model.layers.back());
            out_dense == nullptr || out_dense->activation != Activation::Sigmoid)
            throw FormatError("model file: output layer must be a sigmoid dense layer");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
}

inline void save_model(const NetworkModel& model, const std::string& path) {
    write_text_file(path, model_to_json(model).dump());
}

/// Loads and fully validates a model file. A truncated or otherwise malformed
/// file raises FormatError before anything is returned.
inline NetworkModel load_model(const std::string& path) {
    const std::string text = read_text_file(path);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw FormatError("model file: malformed JSON: " + path);
    return model_from_json(j);
}

}  // namespace mimo::nn
