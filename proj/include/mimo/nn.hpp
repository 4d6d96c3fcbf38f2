#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "modem.hpp"
#include "rng.hpp"

namespace mimo::nn {

enum class Activation { None, ReLU, Sigmoid };

/// Fully connected layer: y = act(x W^T + b), weights stored row-major with
/// one row per output unit.
struct DenseLayer {
    RealMatrix weights;  // out x in
    RVec biases;         // out
    Activation activation = Activation::None;

    std::size_t in_width() const { return weights.cols; }
    std::size_t out_width() const { return weights.rows; }
};

/// Batch normalization over features. Training mode normalizes with the
/// biased batch statistics and folds them into the running estimates as
/// running = momentum * running + (1 - momentum) * batch. Inference mode
/// uses the running estimates only, so it is deterministic per sample.
struct BatchNormLayer {
    RVec gamma;
    RVec beta;
    RVec running_mean;
    RVec running_var;
    double epsilon = 1e-5;
    double momentum = 0.99;

    std::size_t width() const { return gamma.size(); }
};

using Layer = std::variant<DenseLayer, BatchNormLayer>;

struct NetworkModel {
    std::vector<Layer> layers;
    std::size_t input_width = 0;
    std::size_t output_width = 0;
    // Link configuration the model was built for; carried into the model file.
    std::size_t n_t = 0;
    std::size_t n_r = 0;
    ModulationScheme scheme = ModulationScheme::BPSK;
};

/// Sigmoid outputs are clamped into the open interval (0, 1) so downstream
/// logs stay finite even for saturated units.
inline constexpr double kSigmoidFloor = std::numeric_limits<double>::min();
inline constexpr double kSigmoidCeil = 1.0 - 0x1.0p-53;

/// Predictions are clamped to [kLossClamp, 1 - kLossClamp] inside the loss.
inline constexpr double kLossClamp = 1e-12;

inline double sigmoid(double z) {
    double s;
    if (z >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    if (s < kSigmoidFloor) s = kSigmoidFloor;
    if (s > kSigmoidCeil) s = kSigmoidCeil;
    return s;
}

namespace detail {

/// Dot product with four independent accumulators; keeps the dependency
/// chains short enough for the compiler to vectorize without relaxing IEEE
/// semantics.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline double apply_activation(Activation act, double z) {
    switch (act) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return sigmoid(z);
        default: return z;
    }
}

}  // namespace detail

/// Checks that layer widths chain from input_width to output_width and that
/// every parameter array has the declared size.
inline void validate_model(const NetworkModel& model) {
    if (model.input_width == 0 || model.output_width == 0 || model.layers.empty())
        throw ParameterError("network model is empty");
    std::size_t width = model.input_width;
    for (const auto& layer : model.layers) {
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            if (dense->in_width() != width) throw ParameterError("dense layer width mismatch");
            if (dense->biases.size() != dense->out_width())
                throw ParameterError("dense bias width mismatch");
            width = dense->out_width();
        } else {
            const auto& bn = std::get<BatchNormLayer>(layer);
            if (bn.width() != width || bn.beta.size() != width || bn.running_mean.size() != width ||
                bn.running_var.size() != width)
                throw ParameterError("batch-norm layer width mismatch");
            if (!(bn.epsilon > 0.0)) throw ParameterError("batch-norm epsilon must be positive");
        }
    }
    if (width != model.output_width) throw ParameterError("model output width mismatch");
}

namespace detail {

inline RealMatrix dense_forward(const DenseLayer& layer, const RealMatrix& x) {
    const std::size_t batch = x.rows;
    const std::size_t out = layer.out_width();
    const std::size_t in = layer.in_width();
    RealMatrix z(batch, out);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.row(b);
        double* zb = z.row(b);
        for (std::size_t o = 0; o < out; ++o)
            zb[o] = dot(xb, layer.weights.row(o), in) + layer.biases[o];
    }
    return z;
}

inline RealMatrix activate(const RealMatrix& z, Activation act) {
    if (act == Activation::None) return z;
    RealMatrix y(z.rows, z.cols);
    for (std::size_t i = 0; i < z.data.size(); ++i)
        y.data[i] = apply_activation(act, z.data[i]);
    return y;
}

}  // namespace detail

struct DenseCache {
    RealMatrix input;           // batch x in
    RealMatrix pre_activation;  // batch x out
};

struct BatchNormCache {
    RealMatrix centered;    // x - mu, batch x width
    RealMatrix normalized;  // x_hat, batch x width
    RVec inv_std;           // 1 / sqrt(var + eps)
};

using LayerCache = std::variant<DenseCache, BatchNormCache>;

struct ForwardCache {
    std::vector<LayerCache> layers;
    RealMatrix output;
    std::size_t batch = 0;
};

/// Inference pass. Batch normalization uses the running statistics, so the
/// result for a sample does not depend on what else is in the batch.
inline RealMatrix forward_infer(const NetworkModel& model, const RealMatrix& batch) {
    validate_model(model);
    if (batch.rows == 0) throw ParameterError("forward_infer: empty batch");
    if (batch.cols != model.input_width) throw ParameterError("forward_infer: input width mismatch");
    RealMatrix x = batch;
    for (const auto& layer : model.layers) {
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            x = detail::activate(detail::dense_forward(*dense, x), dense->activation);
        } else {
            const auto& bn = std::get<BatchNormLayer>(layer);
            RealMatrix y(x.rows, x.cols);
            for (std::size_t j = 0; j < bn.width(); ++j) {
                const double scale = bn.gamma[j] / std::sqrt(bn.running_var[j] + bn.epsilon);
                const double shift = bn.beta[j] - scale * bn.running_mean[j];
                for (std::size_t b = 0; b < x.rows; ++b) y(b, j) = scale * x(b, j) + shift;
            }
            x = std::move(y);
        }
    }
    return x;
}

struct TrainForward {
    RealMatrix output;
    ForwardCache cache;
};

/// Training pass: caches everything backward() needs and updates the
/// batch-norm running statistics as a side effect.
inline TrainForward forward_train(NetworkModel& model, const RealMatrix& batch) {
    validate_model(model);
    if (batch.rows < 2) throw ParameterError("forward_train: batch must hold at least 2 samples");
    if (batch.cols != model.input_width) throw ParameterError("forward_train: input width mismatch");

    ForwardCache cache;
    cache.batch = batch.rows;
    cache.layers.reserve(model.layers.size());
    RealMatrix x = batch;
    for (auto& layer : model.layers) {
        if (auto* dense = std::get_if<DenseLayer>(&layer)) {
            DenseCache dc;
            dc.input = x;
            dc.pre_activation = detail::dense_forward(*dense, x);
            x = detail::activate(dc.pre_activation, dense->activation);
            cache.layers.emplace_back(std::move(dc));
        } else {
            auto& bn = std::get<BatchNormLayer>(layer);
            const std::size_t width = bn.width();
            const std::size_t rows = x.rows;
            BatchNormCache bc;
            bc.centered = RealMatrix(rows, width);
            bc.normalized = RealMatrix(rows, width);
            bc.inv_std.resize(width);
            RealMatrix y(rows, width);
            for (std::size_t j = 0; j < width; ++j) {
                double mean = 0.0;
                for (std::size_t b = 0; b < rows; ++b) mean += x(b, j);
                mean /= static_cast<double>(rows);
                double var = 0.0;
                for (std::size_t b = 0; b < rows; ++b) {
                    const double c = x(b, j) - mean;
                    bc.centered(b, j) = c;
                    var += c * c;
                }
                var /= static_cast<double>(rows);
                const double inv_std = 1.0 / std::sqrt(var + bn.epsilon);
                bc.inv_std[j] = inv_std;
                for (std::size_t b = 0; b < rows; ++b) {
                    const double xhat = bc.centered(b, j) * inv_std;
                    bc.normalized(b, j) = xhat;
                    y(b, j) = bn.gamma[j] * xhat + bn.beta[j];
                }
                bn.running_mean[j] = bn.momentum * bn.running_mean[j] + (1.0 - bn.momentum) * mean;
                bn.running_var[j] = bn.momentum * bn.running_var[j] + (1.0 - bn.momentum) * var;
            }
            x = std::move(y);
            cache.layers.emplace_back(std::move(bc));
        }
    }
    cache.output = x;
    return {std::move(x), std::move(cache)};
}

/// Mean binary cross-entropy over every (sample, output) cell:
///
///   L = -mean( t * ln p + (1 - t) * ln(1 - p) )
///
/// with p clamped to [kLossClamp, 1 - kLossClamp].
inline double cross_entropy_loss(const RealMatrix& pred, const RealMatrix& target) {
    if (pred.rows != target.rows || pred.cols != target.cols)
        throw ParameterError("cross_entropy_loss: shape mismatch");
    if (pred.rows == 0 || pred.cols == 0) throw ParameterError("cross_entropy_loss: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        double p = pred.data[i];
        if (p < kLossClamp) p = kLossClamp;
        if (p > 1.0 - kLossClamp) p = 1.0 - kLossClamp;
        const double t = target.data[i];
        acc += t * std::log(p) + (1.0 - t) * std::log1p(-p);
    }
    return -acc / static_cast<double>(pred.data.size());
}

struct DenseGrads {
    RealMatrix d_weights;
    RVec d_biases;
};

struct BatchNormGrads {
    RVec d_gamma;
    RVec d_beta;
};

using LayerGrads = std::variant<DenseGrads, BatchNormGrads>;

struct Gradients {
    std::vector<LayerGrads> layers;
};

/// Backpropagation for the cached forward pass. The final layer must be a
/// sigmoid dense layer trained against cross-entropy; its pre-activation
/// gradient collapses to (pred - target) / (batch * width). Batch-norm
/// gradients include the dependence of the batch statistics on the inputs.
/// Hidden activations may be ReLU or None.
inline Gradients backward(const NetworkModel& model, const ForwardCache& cache,
                          const RealMatrix& target) {
    if (cache.batch == 0 || cache.layers.size() != model.layers.size())
        throw StateError("backward: forward cache does not match the model");
    if (target.rows != cache.batch || target.cols != model.output_width)
        throw ParameterError("backward: target shape mismatch");

    const std::size_t n_layers = model.layers.size();
    Gradients grads;
    grads.layers.resize(n_layers);

    RealMatrix grad;  // dL/d(output of the layer below)
    for (std::size_t idx = n_layers; idx-- > 0;) {
        const auto& layer = model.layers[idx];
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            const auto& dc = std::get<DenseCache>(cache.layers[idx]);
            const std::size_t batch = dc.input.rows;
            const std::size_t out = dense->out_width();
            const std::size_t in = dense->in_width();

            RealMatrix dz(batch, out);
            if (idx == n_layers - 1) {
                if (dense->activation != Activation::Sigmoid)
                    throw ParameterError("backward: output layer must use sigmoid");
                const double scale =
                    1.0 / static_cast<double>(cache.output.data.size());
                for (std::size_t i = 0; i < dz.data.size(); ++i)
                    dz.data[i] = (cache.output.data[i] - target.data[i]) * scale;
            } else {
                switch (dense->activation) {
                    case Activation::ReLU:
                        for (std::size_t i = 0; i < dz.data.size(); ++i)
                            dz.data[i] = dc.pre_activation.data[i] > 0.0 ? grad.data[i] : 0.0;
                        break;
                    case Activation::None:
                        dz = grad;
                        break;
                    default:
                        throw ParameterError("backward: sigmoid is only supported at the output");
                }
            }

            DenseGrads dg;
            dg.d_weights = RealMatrix(out, in);
            dg.d_biases.assign(out, 0.0);
            for (std::size_t b = 0; b < batch; ++b) {
                const double* xb = dc.input.row(b);
                const double* dzb = dz.row(b);
                for (std::size_t o = 0; o < out; ++o) {
                    const double d = dzb[o];
                    if (d != 0.0) detail::axpy(d, xb, dg.d_weights.row(o), in);
                    dg.d_biases[o] += d;
                }
            }
            if (idx > 0) {
                RealMatrix dx(batch, in);
                for (std::size_t b = 0; b < batch; ++b) {
                    const double* dzb = dz.row(b);
                    double* dxb = dx.row(b);
                    for (std::size_t o = 0; o < out; ++o) {
                        const double d = dzb[o];
                        if (d != 0.0) detail::axpy(d, dense->weights.row(o), dxb, in);
                    }
                }
                grad = std::move(dx);
            }
            grads.layers[idx] = std::move(dg);
        } else {
            const auto& bn = std::get<BatchNormLayer>(layer);
            const auto& bc = std::get<BatchNormCache>(cache.layers[idx]);
            const std::size_t batch = bc.normalized.rows;
            const std::size_t width = bn.width();
            const double inv_batch = 1.0 / static_cast<double>(batch);

            BatchNormGrads bg;
            bg.d_gamma.assign(width, 0.0);
            bg.d_beta.assign(width, 0.0);
            RealMatrix dx(batch, width);
            for (std::size_t j = 0; j < width; ++j) {
                double d_gamma = 0.0;
                double d_beta = 0.0;
                double d_var = 0.0;
                double d_mean = 0.0;
                const double inv_std = bc.inv_std[j];
                for (std::size_t b = 0; b < batch; ++b) {
                    const double dy = grad(b, j);
                    d_gamma += dy * bc.normalized(b, j);
                    d_beta += dy;
                    const double dxhat = dy * bn.gamma[j];
                    d_var += dxhat * bc.centered(b, j);
                    d_mean += dxhat;
                }
                d_var *= -0.5 * inv_std * inv_std * inv_std;
                d_mean *= -inv_std;
                for (std::size_t b = 0; b < batch; ++b) {
                    const double dxhat = grad(b, j) * bn.gamma[j];
                    dx(b, j) = dxhat * inv_std +
                               (2.0 * d_var * bc.centered(b, j) + d_mean) * inv_batch;
                }
                bg.d_gamma[j] = d_gamma;
                bg.d_beta[j] = d_beta;
            }
            grad = std::move(dx);
            grads.layers[idx] = std::move(bg);
        }
    }
    return grads;
}

/// Feature width of the detector input [embedded y | embedded H], flattened
/// row by row.
inline std::size_t dnn_input_width(std::size_t n_t, std::size_t n_r) {
    return 2 * n_r * (2 * n_t + 1);
}

/// The detection network: Dense 512 (ReLU), BatchNorm, Dense 256/128/64
/// (ReLU), then one sigmoid unit per transmitted bit. ReLU layers use
/// He-uniform initialization, the sigmoid output Xavier-uniform; biases start
/// at zero.
inline NetworkModel build_dnn(std::size_t n_t, std::size_t n_r, ModulationScheme scheme,
                              SeededRng& rng) {
    if (n_t == 0 || n_r == 0) throw ParameterError("build_dnn: dimensions must be positive");
    const std::size_t input = dnn_input_width(n_t, n_r);
    const std::size_t output = static_cast<std::size_t>(bits_per_symbol(scheme)) * n_t;

    NetworkModel model;
    model.input_width = input;
    model.output_width = output;
    model.n_t = n_t;
    model.n_r = n_r;
    model.scheme = scheme;

    auto make_dense = [&rng](std::size_t in, std::size_t out, Activation act) {
        DenseLayer layer;
        layer.weights = RealMatrix(out, in);
        layer.biases.assign(out, 0.0);
        layer.activation = act;
        const double limit = act == Activation::Sigmoid
                                 ? std::sqrt(6.0 / static_cast<double>(in + out))
                                 : std::sqrt(6.0 / static_cast<double>(in));
        for (auto& w : layer.weights.data) w = (2.0 * rng.uniform01() - 1.0) * limit;
        return layer;
    };
    auto make_bn = [](std::size_t width) {
        BatchNormLayer bn;
        bn.gamma.assign(width, 1.0);
        bn.beta.assign(width, 0.0);
        bn.running_mean.assign(width, 0.0);
        bn.running_var.assign(width, 1.0);
        return bn;
    };

    model.layers.emplace_back(make_dense(input, 512, Activation::ReLU));
    model.layers.emplace_back(make_bn(512));
    model.layers.emplace_back(make_dense(512, 256, Activation::ReLU));
    model.layers.emplace_back(make_dense(256, 128, Activation::ReLU));
    model.layers.emplace_back(make_dense(128, 64, Activation::ReLU));
    model.layers.emplace_back(make_dense(64, output, Activation::Sigmoid));
    validate_model(model);
    return model;
}

/// Hard decision on sigmoid outputs: probability >= 0.5 maps to bit 1.
inline BitBlock threshold_bits(const double* probs, std::size_t n) {
    BitBlock bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = probs[i] >= 0.5 ? 1 : 0;
    return bits;
}

/// Trainable parameter count (batch-norm running statistics excluded).
inline std::size_t trainable_parameter_count(const NetworkModel& model) {
    std::size_t count = 0;
    for (const auto& layer : model.layers) {
        if (const auto* dense = std::get_if<DenseLayer>(&layer))
            count += dense->weights.data.size() + dense->biases.size();
        else
            count += 2 * std::get<BatchNormLayer>(layer).width();
    }
    return count;
}

}  // namespace mimo::nn
