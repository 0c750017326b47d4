#include "pnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pnn/error.hpp"

namespace pnn {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Identity: return "identity";
    }
    throw UsageError("unknown activation code " + std::to_string(static_cast<int>(a)));
}

std::string arch_to_string(const MlpSpec& spec) {
    std::string out = std::to_string(spec.input_size) + ":";
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        if (l) out += ",";
        out += std::to_string(spec.layers[l].out_size);
        out += spec.layers[l].activation == Activation::ReLU ? "R" : "I";
    }
    return out;
}

MlpSpec arch_from_string(const std::string& text) {
    const auto bad = [&](const std::string& why) {
        return UsageError("bad architecture \"" + text + "\": " + why +
                          " (expected e.g. 784:80R,60R,47I)");
    };
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) throw bad("missing ':'");

    MlpSpec spec;
    try {
        std::size_t used = 0;
        spec.input_size = std::stoull(text.substr(0, colon), &used);
        if (used != colon) throw bad("malformed input width");
    } catch (const std::logic_error&) {
        throw bad("malformed input width");
    }

    std::size_t pos = colon + 1;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos) end = text.size();
        const std::string token = text.substr(pos, end - pos);
        if (token.size() < 2) throw bad("layer token \"" + token + "\" too short");
        const char act = token.back();
        if (act != 'R' && act != 'I') {
            throw bad("layer token \"" + token + "\" must end in R or I");
        }
        LayerSpec layer;
        try {
            std::size_t used = 0;
            layer.out_size = std::stoull(token.substr(0, token.size() - 1), &used);
            if (used != token.size() - 1) throw bad("malformed width in \"" + token + "\"");
        } catch (const std::logic_error&) {
            throw bad("malformed width in \"" + token + "\"");
        }
        layer.activation = act == 'R' ? Activation::ReLU : Activation::Identity;
        spec.layers.push_back(layer);
        pos = end + 1;
    }
    spec.validate();
    return spec;
}

void MlpSpec::validate() const {
    if (input_size == 0) throw UsageError("network input size must be at least 1");
    if (layers.empty()) throw UsageError("network needs at least one layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].out_size == 0) {
            throw UsageError("layer " + std::to_string(l) + " has zero width");
        }
    }
}

std::size_t MlpSpec::in_size(std::size_t layer) const {
    if (layer >= layers.size()) {
        throw UsageError("layer index " + std::to_string(layer) + " out of range");
    }
    return layer == 0 ? input_size : layers[layer - 1].out_size;
}

Mlp init_mlp(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    Mlp mlp{spec, {}, {}};
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::size_t in = spec.in_size(l);
        const std::size_t out = spec.layers[l].out_size;
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        mlp.weights.push_back(uniform(rng, -bound, bound, out, in));
        mlp.biases.push_back(uniform(rng, -bound, bound, out, 1));
    }
    return mlp;
}

namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }

Matrix apply_activation(const Matrix& pre, Activation act) {
    if (act == Activation::Identity) return pre;
    return elementwise(pre, relu);
}

void check_batch(const Mlp& mlp, const Matrix& batch) {
    if (batch.cols() != mlp.spec.input_size) {
        throw UsageError("batch width " + std::to_string(batch.cols()) +
                         " does not match network input size " +
                         std::to_string(mlp.spec.input_size));
    }
}

} // namespace

Matrix forward(const Mlp& mlp, const Matrix& batch) {
    check_batch(mlp, batch);
    Matrix act = batch;
    for (std::size_t l = 0; l < mlp.spec.layers.size(); ++l) {
        Matrix pre = add_row_broadcast(matmul(act, transpose(mlp.weights[l])),
                                       mlp.biases[l]);
        act = apply_activation(pre, mlp.spec.layers[l].activation);
    }
    return act;
}

ForwardCache forward_cached(const Mlp& mlp, const Matrix& batch) {
    check_batch(mlp, batch);
    ForwardCache cache{batch, {}, {}};
    const Matrix* act = &cache.input;
    for (std::size_t l = 0; l < mlp.spec.layers.size(); ++l) {
        cache.pre.push_back(add_row_broadcast(matmul(*act, transpose(mlp.weights[l])),
                                              mlp.biases[l]));
        cache.post.push_back(
            apply_activation(cache.pre.back(), mlp.spec.layers[l].activation));
        act = &cache.post.back();
    }
    return cache;
}

LossGrad mse_loss(const Matrix& output, const Matrix& targets) {
    if (!output.same_shape(targets)) {
        throw UsageError("regression targets must be " + std::to_string(output.rows()) +
                         "x" + std::to_string(output.cols()) + ", got " +
                         std::to_string(targets.rows()) + "x" +
                         std::to_string(targets.cols()));
    }
    const double inv_n = 1.0 / static_cast<double>(output.size());
    LossGrad out{0.0, Matrix(output.rows(), output.cols())};
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = output.data()[i] - targets.data()[i];
        out.loss += d * d * inv_n;
        out.grad.data()[i] = 2.0 * d * inv_n;
    }
    return out;
}

LossGrad softmax_cross_entropy_loss(const Matrix& output, const std::vector<int>& labels) {
    if (labels.size() != output.rows()) {
        throw UsageError("label count " + std::to_string(labels.size()) +
                         " does not match batch size " + std::to_string(output.rows()));
    }
    const std::size_t batch = output.rows(), classes = output.cols();
    const double inv_b = 1.0 / static_cast<double>(batch);
    LossGrad out{0.0, Matrix(batch, classes)};
    for (std::size_t i = 0; i < batch; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw UsageError("label " + std::to_string(label) + " out of range for " +
                             std::to_string(classes) + " classes");
        }
        const double* o = output.row_ptr(i);
        double* g = out.grad.row_ptr(i);
        const double m = *std::max_element(o, o + classes);
        double sum_exp = 0.0;
        for (std::size_t j = 0; j < classes; ++j) sum_exp += std::exp(o[j] - m);
        const double log_sum = m + std::log(sum_exp);
        out.loss += (log_sum - o[label]) * inv_b;
        for (std::size_t j = 0; j < classes; ++j) {
            g[j] = std::exp(o[j] - log_sum) * inv_b;
        }
        g[label] -= inv_b;
    }
    return out;
}

LossGrad loss_and_grad(const Matrix& output, const TrainTargets& targets, LossKind kind) {
    if (kind == LossKind::MseOnOutputs) {
        const auto* values = std::get_if<Matrix>(&targets);
        if (!values) throw UsageError("squared-error loss needs matrix targets");
        return mse_loss(output, *values);
    }
    const auto* labels = std::get_if<std::vector<int>>(&targets);
    if (!labels) throw UsageError("cross-entropy loss needs class-index targets");
    return softmax_cross_entropy_loss(output, *labels);
}

Gradients backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& d_output) {
    const std::size_t n_layers = mlp.spec.layers.size();
    if (cache.pre.size() != n_layers || cache.post.size() != n_layers) {
        throw UsageError("forward cache holds " + std::to_string(cache.pre.size()) +
                         " layers but the network has " + std::to_string(n_layers));
    }
    if (!d_output.same_shape(cache.post.back())) {
        throw UsageError("output gradient shape does not match cached output");
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        if (cache.pre[l].cols() != mlp.spec.layers[l].out_size) {
            throw UsageError("cache layer " + std::to_string(l) +
                             " width does not match the network; stale cache?");
        }
    }

    Gradients grads;
    grads.weights.reserve(n_layers);
    grads.biases.reserve(n_layers);

    Matrix d_act = d_output;
    std::vector<Matrix> dw_rev, db_rev;
    for (std::size_t li = n_layers; li-- > 0;) {
        Matrix d_pre = d_act;
        if (mlp.spec.layers[li].activation == Activation::ReLU) {
            const Matrix& pre = cache.pre[li];
            for (std::size_t i = 0; i < d_pre.size(); ++i) {
                if (!(pre.data()[i] > 0.0)) d_pre.data()[i] = 0.0;
            }
        }
        const Matrix& below = li == 0 ? cache.input : cache.post[li - 1];
        dw_rev.push_back(matmul_transpose_a(d_pre, below));
        db_rev.push_back(col_sums_to_column(d_pre));
        if (li > 0) d_act = matmul(d_pre, mlp.weights[li]);
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        grads.weights.push_back(std::move(dw_rev[n_layers - 1 - l]));
        grads.biases.push_back(std::move(db_rev[n_layers - 1 - l]));
    }
    return grads;
}

OptimizerState OptimizerState::zeros_like(const Mlp& mlp) {
    OptimizerState state;
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        state.vel_weights.emplace_back(mlp.weights[l].rows(), mlp.weights[l].cols());
        state.vel_biases.emplace_back(mlp.biases[l].rows(), 1);
    }
    return state;
}

void sgd_momentum_step(Mlp& mlp, OptimizerState& state, const Gradients& grads,
                       double lr, double momentum,
                       const std::vector<bool>& freeze_mask) {
    const std::size_t n_layers = mlp.weights.size();
    if (grads.weights.size() != n_layers || state.vel_weights.size() != n_layers) {
        throw UsageError("optimizer step with mismatched layer counts");
    }
    if (!freeze_mask.empty() && freeze_mask.size() != n_layers) {
        throw UsageError("freeze mask has " + std::to_string(freeze_mask.size()) +
                         " entries for " + std::to_string(n_layers) + " layers");
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        if (!freeze_mask.empty() && freeze_mask[l]) continue;
        scale_in_place(state.vel_weights[l], momentum);
        axpy_in_place(state.vel_weights[l], 1.0, grads.weights[l]);
        axpy_in_place(mlp.weights[l], -lr, state.vel_weights[l]);
        scale_in_place(state.vel_biases[l], momentum);
        axpy_in_place(state.vel_biases[l], 1.0, grads.biases[l]);
        axpy_in_place(mlp.biases[l], -lr, state.vel_biases[l]);
    }
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw UsageError("batch size must be at least 1");
    if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw UsageError("momentum must lie in [0, 1)");
    }
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                              std::size_t batch_size) {
    if (n == 0) throw UsageError("cannot batch an empty dataset");
    if (batch_size == 0) throw UsageError("batch size must be at least 1");
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t start = 0; start < n; start += batch_size) {
        ranges.emplace_back(start, std::min(n, start + batch_size));
    }
    return ranges;
}

namespace {

std::size_t target_count(const TrainTargets& targets) {
    if (const auto* m = std::get_if<Matrix>(&targets)) return m->rows();
    return std::get<std::vector<int>>(targets).size();
}

TrainTargets slice_targets(const TrainTargets& targets, std::size_t begin,
                           std::size_t count) {
    if (const auto* m = std::get_if<Matrix>(&targets)) {
        return row_slice(*m, begin, count);
    }
    const auto& labels = std::get<std::vector<int>>(targets);
    return std::vector<int>(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                            labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
}

TrainTargets gather_targets(const TrainTargets& targets,
                            const std::vector<std::size_t>& indices) {
    if (const auto* m = std::get_if<Matrix>(&targets)) {
        return gather_rows(*m, indices);
    }
    const auto& labels = std::get<std::vector<int>>(targets);
    std::vector<int> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
    return out;
}

} // namespace

std::vector<double> train_epochs(Mlp& mlp, const Matrix& inputs,
                                 const TrainTargets& targets,
                                 const TrainConfig& config,
                                 const std::vector<bool>& freeze_mask,
                                 const EpochCallback& on_epoch_end) {
    return train_epochs(mlp, inputs, targets, config, freeze_mask,
                        TrainHooks{on_epoch_end, {}});
}

std::vector<double> train_epochs(Mlp& mlp, const Matrix& inputs,
                                 const TrainTargets& targets,
                                 const TrainConfig& config,
                                 const std::vector<bool>& freeze_mask,
                                 const TrainHooks& hooks) {
    config.validate();
    const std::size_t n = inputs.rows();
    if (target_count(targets) != n) {
        throw UsageError("target count " + std::to_string(target_count(targets)) +
                         " does not match sample count " + std::to_string(n));
    }
    if (!freeze_mask.empty() && freeze_mask.size() != mlp.spec.layers.size()) {
        throw UsageError("freeze mask has " + std::to_string(freeze_mask.size()) +
                         " entries for " + std::to_string(mlp.spec.layers.size()) +
                         " layers");
    }

    OptimizerState state = OptimizerState::zeros_like(mlp);
    Rng shuffle_rng(Rng::stream(config.seed, stream_id::shuffle));
    const auto ranges = batch_ranges(n, config.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> epoch_losses;
    epoch_losses.reserve(config.epochs);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (config.shuffle) {
            // Fisher-Yates over the sample order; one pass per epoch.
            for (std::size_t i = n - 1; i > 0; --i) {
                const std::size_t j = shuffle_rng.next_u64() % (i + 1);
                std::swap(order[i], order[j]);
            }
        }
        double loss_sum = 0.0;
        for (const auto& [begin, end] : ranges) {
            const std::size_t count = end - begin;
            auto [batch, batch_targets] = [&]() -> std::pair<Matrix, TrainTargets> {
                if (!config.shuffle) {
                    return {row_slice(inputs, begin, count),
                            slice_targets(targets, begin, count)};
                }
                std::vector<std::size_t> idx(
                    order.begin() + static_cast<std::ptrdiff_t>(begin),
                    order.begin() + static_cast<std::ptrdiff_t>(end));
                return {gather_rows(inputs, idx), gather_targets(targets, idx)};
            }();
            ForwardCache cache = forward_cached(mlp, batch);
            LossGrad lg = loss_and_grad(cache.output(), batch_targets, config.loss);
            if (hooks.on_batch_output) {
                std::vector<std::size_t> indices;
                if (config.shuffle) {
                    indices.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
                } else {
                    indices.resize(count);
                    std::iota(indices.begin(), indices.end(), begin);
                }
                hooks.on_batch_output(epoch, indices, cache.output());
            }
            Gradients grads = backward(mlp, cache, lg.grad);
            sgd_momentum_step(mlp, state, grads, config.lr, config.momentum, freeze_mask);
            loss_sum += lg.loss * static_cast<double>(count);
        }
        epoch_losses.push_back(loss_sum / static_cast<double>(n));
        if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, mlp, epoch_losses.back());
    }
    return epoch_losses;
}

double accuracy(const Matrix& output, const std::vector<int>& labels) {
    if (labels.size() != output.rows()) {
        throw UsageError("label count " + std::to_string(labels.size()) +
                         " does not match output rows " + std::to_string(output.rows()));
    }
    const std::vector<std::size_t> pred = argmax_rows(output);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0 && pred[i] == static_cast<std::size_t>(labels[i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

} // namespace pnn
