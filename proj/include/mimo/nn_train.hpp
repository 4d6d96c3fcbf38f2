#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "nn.hpp"
#include "rng.hpp"

namespace mimo::nn {

struct ParamView {
    double* data = nullptr;
    std::size_t size = 0;
};

/// Trainable parameter arrays in a fixed order: per layer, weights then
/// biases for dense, gamma then beta for batch norm. Running statistics are
/// not trainable and do not appear here.
inline std::vector<ParamView> parameter_views(NetworkModel& model) {
    std::vector<ParamView> views;
    for (auto& layer : model.layers) {
        if (auto* dense = std::get_if<DenseLayer>(&layer)) {
            views.push_back({dense->weights.data.data(), dense->weights.data.size()});
            views.push_back({dense->biases.data(), dense->biases.size()});
        } else {
            auto& bn = std::get<BatchNormLayer>(layer);
            views.push_back({bn.gamma.data(), bn.gamma.size()});
            views.push_back({bn.beta.data(), bn.beta.size()});
        }
    }
    return views;
}

/// Gradient arrays in the same order as parameter_views.
inline std::vector<ParamView> gradient_views(Gradients& grads) {
    std::vector<ParamView> views;
    for (auto& layer : grads.layers) {
        if (auto* dense = std::get_if<DenseGrads>(&layer)) {
            views.push_back({dense->d_weights.data.data(), dense->d_weights.data.size()});
            views.push_back({dense->d_biases.data(), dense->d_biases.size()});
        } else {
            auto& bn = std::get<BatchNormGrads>(layer);
            views.push_back({bn.d_gamma.data(), bn.d_gamma.size()});
            views.push_back({bn.d_beta.data(), bn.d_beta.size()});
        }
    }
    return views;
}

/// Adam optimizer state: first/second moment estimates per parameter array
/// plus the shared step counter and hyperparameters.
struct AdamState {
    std::vector<RVec> first_moment;
    std::vector<RVec> second_moment;
    std::uint64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;

    static AdamState for_model(NetworkModel& model, double lr) {
        AdamState state;
        state.lr = lr;
        for (const auto& view : parameter_views(model)) {
            state.first_moment.emplace_back(view.size, 0.0);
            state.second_moment.emplace_back(view.size, 0.0);
        }
        return state;
    }
};

/// One Adam update over a single parameter array (exposed for unit testing).
inline void adam_step_array(double* params, const double* grads, std::size_t n, RVec& m, RVec& v,
                            std::uint64_t t, double lr, double beta1, double beta2, double eps_hat) {
    const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_hat);
    }
}

/// One Adam update over the whole model. Increments the step counter once.
inline void adam_step(AdamState& state, NetworkModel& model, Gradients& grads) {
    auto params = parameter_views(model);
    auto gradients = gradient_views(grads);
    if (params.size() != state.first_moment.size() || params.size() != gradients.size())
        throw StateError("adam_step: state does not match the model");
    ++state.step;
    for (std::size_t s = 0; s < params.size(); ++s) {
        if (params[s].size != gradients[s].size || params[s].size != state.first_moment[s].size())
            throw StateError("adam_step: parameter array size mismatch");
        adam_step_array(params[s].data, gradients[s].data, params[s].size, state.first_moment[s],
                        state.second_moment[s], state.step, state.lr, state.beta1, state.beta2,
                        state.eps_hat);
    }
}

struct TrainingConfig {
    std::size_t batch_size = 256;
    std::size_t max_epochs = 100;
    double lr = 1e-3;
    std::size_t early_stop_patience = 10;
    std::uint64_t seed = 1;
    double training_snr_db = 8.0;
    /// Optional extra stop: end training once the epoch training loss drops
    /// below this value. 0 disables the check.
    double target_train_loss = 0.0;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    NetworkModel model;  // parameters with the best validation loss
    std::vector<EpochStats> history;
    double best_val_loss = 0.0;
};

/// Validation loss in inference mode, evaluated in chunks.
inline double evaluate_loss(const NetworkModel& model, const RealMatrix& x, const RealMatrix& y,
                            std::size_t chunk = 1024) {
    if (x.rows == 0) throw ParameterError("evaluate_loss: empty dataset");
    if (x.rows != y.rows) throw ParameterError("evaluate_loss: feature/target count mismatch");
    double acc = 0.0;
    for (std::size_t start = 0; start < x.rows; start += chunk) {
        const std::size_t n = std::min(chunk, x.rows - start);
        RealMatrix xb(n, x.cols);
        RealMatrix yb(n, y.cols);
        std::copy_n(x.row(start), n * x.cols, xb.data.data());
        std::copy_n(y.row(start), n * y.cols, yb.data.data());
        acc += cross_entropy_loss(forward_infer(model, xb), yb) * static_cast<double>(n * y.cols);
    }
    return acc / static_cast<double>(x.rows * y.cols);
}

/// Minibatch training with Adam and early stopping on validation loss.
/// Single-threaded and fully deterministic for a fixed config seed: epochs
/// shuffle via a dedicated Fisher-Yates stream and updates are sequential.
/// A trailing shuffle slice of one sample is skipped (batch statistics need
/// at least two). Returns the parameters from the epoch with the lowest
/// validation loss together with the full loss history.
inline TrainResult train(NetworkModel model, const RealMatrix& x_train, const RealMatrix& y_train,
                         const RealMatrix& x_val, const RealMatrix& y_val,
                         const TrainingConfig& config) {
    validate_model(model);
    if (x_train.rows < 2) throw ParameterError("train: need at least 2 training samples");
    if (x_train.rows != y_train.rows) throw ParameterError("train: training set size mismatch");
    if (x_val.rows == 0 || x_val.rows != y_val.rows)
        throw ParameterError("train: invalid validation set");
    if (x_train.cols != model.input_width || x_val.cols != model.input_width)
        throw ParameterError("train: feature width mismatch");
    if (y_train.cols != model.output_width || y_val.cols != model.output_width)
        throw ParameterError("train: target width mismatch");
    if (config.batch_size < 2) throw ParameterError("train: batch_size must be at least 2");
    if (config.max_epochs == 0 || config.early_stop_patience == 0 || !(config.lr > 0.0))
        throw ParameterError("train: invalid training configuration");

    const std::size_t n = x_train.rows;
    const std::size_t in_width = x_train.cols;
    const std::size_t out_width = y_train.cols;
    SeededRng shuffle_rng(config.seed);
    AdamState adam = AdamState::for_model(model, config.lr);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    NetworkModel best = model;
    std::size_t epochs_since_best = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        deterministic_shuffle(order, shuffle_rng);
        double loss_sum = 0.0;
        std::uint64_t cells = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t b = std::min(config.batch_size, n - start);
            if (b < 2) continue;
            RealMatrix xb(b, in_width);
            RealMatrix yb(b, out_width);
            for (std::size_t i = 0; i < b; ++i) {
                const std::size_t src = order[start + i];
                std::copy_n(x_train.row(src), in_width, xb.row(i));
                std::copy_n(y_train.row(src), out_width, yb.row(i));
            }
            auto fwd = forward_train(model, xb);
            loss_sum += cross_entropy_loss(fwd.output, yb) * static_cast<double>(b * out_width);
            cells += b * out_width;
            auto grads = backward(model, fwd.cache, yb);
            adam_step(adam, model, grads);
        }
        const double train_loss = loss_sum / static_cast<double>(cells);
        const double val_loss = evaluate_loss(model, x_val, y_val);
        result.history.push_back({epoch, train_loss, val_loss});

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            best = model;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
        }
        if (config.target_train_loss > 0.0 && train_loss < config.target_train_loss) break;
        if (epochs_since_best >= config.early_stop_patience) break;
    }
    result.model = std::move(best);
    return result;
}

}  // namespace mimo::nn
