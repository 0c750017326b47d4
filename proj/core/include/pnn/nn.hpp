#ifndef PNN_NN_HPP
#define PNN_NN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "pnn/matrix.hpp"
#include "pnn/rng.hpp"

namespace pnn {

enum class Activation : std::uint8_t { ReLU = 0, Identity = 1 };

std::string activation_name(Activation a);

struct MlpSpec;

/// Compact text form "784:80R,60R,60R,60R,47I" — input width, then one
/// <width><R|I> token per layer (R relu, I identity).
std::string arch_to_string(const MlpSpec& spec);
MlpSpec arch_from_string(const std::string& text);

struct LayerSpec {
    std::size_t out_size = 0;
    Activation activation = Activation::ReLU;

    bool operator==(const LayerSpec&) const = default;
};

/// Architecture of a fully-connected network: input width plus an ordered
/// list of layers. Weights live in Mlp; this is shape-only.
struct MlpSpec {
    std::size_t input_size = 0;
    std::vector<LayerSpec> layers;

    void validate() const; // throws UsageError on zero sizes or no layers
    std::size_t output_size() const { return layers.back().out_size; }
    /// Input width of layer l (the previous layer's output, or input_size).
    std::size_t in_size(std::size_t layer) const;

    bool operator==(const MlpSpec&) const = default;
};

struct Mlp {
    MlpSpec spec;
    std::vector<Matrix> weights; // layer l: out x in
    std::vector<Matrix> biases;  // layer l: out x 1
};

/// Initializes weights and biases i.i.d. uniform on
/// (-1/sqrt(fan_in), 1/sqrt(fan_in)). Per layer the weight matrix is drawn
/// first (row-major), then the bias, so the stream layout is reproducible.
Mlp init_mlp(const MlpSpec& spec, Rng& rng);

/// Everything backward() needs: the input batch and, per layer, the
/// pre-activation and post-activation values.
struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre;
    std::vector<Matrix> post;

    const Matrix& output() const { return post.back(); }
};

Matrix forward(const Mlp& mlp, const Matrix& batch);
ForwardCache forward_cached(const Mlp& mlp, const Matrix& batch);

enum class LossKind : std::uint8_t { MseOnOutputs = 0, SoftmaxCrossEntropy = 1 };

/// Regression targets are a matrix congruent with the output batch;
/// classification targets are class indices.
using TrainTargets = std::variant<Matrix, std::vector<int>>;

struct LossGrad {
    double loss = 0.0;
    Matrix grad; // dL/d(output), batch x out
};

/// Mean over batch and output dims of squared error.
LossGrad mse_loss(const Matrix& output, const Matrix& targets);
/// Mean over batch of -log softmax(output)[label]; log-sum-exp stabilized.
LossGrad softmax_cross_entropy_loss(const Matrix& output, const std::vector<int>& labels);
LossGrad loss_and_grad(const Matrix& output, const TrainTargets& targets, LossKind kind);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;
};

/// Reverse-mode pass. d_output is dL/d(output) for the batch recorded in
/// the cache; ReLU passes zero gradient at exactly zero input.
Gradients backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& d_output);

struct OptimizerState {
    std::vector<Matrix> vel_weights;
    std::vector<Matrix> vel_biases;

    static OptimizerState zeros_like(const Mlp& mlp);
};

/// Classic momentum: v <- momentum*v + g; p <- p - lr*v. Layers with
/// freeze_mask[l] set keep both parameters and velocity untouched.
void sgd_momentum_step(Mlp& mlp, OptimizerState& state, const Gradients& grads,
                       double lr, double momentum,
                       const std::vector<bool>& freeze_mask = {});

struct TrainConfig {
    double lr = 0.01;
    double momentum = 0.9;
    std::size_t batch_size = 1;
    std::size_t epochs = 0;
    bool shuffle = false;
    std::uint64_t seed = 0; // drives the shuffle stream only
    LossKind loss = LossKind::SoftmaxCrossEntropy;

    void validate() const;
};

/// Consecutive [start, end) index ranges covering n samples in chunks of
/// batch_size; the final range may be short.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                              std::size_t batch_size);

using EpochCallback =
    std::function<void(std::size_t epoch, const Mlp& mlp, double epoch_loss)>;

struct TrainHooks {
    /// Fires after each epoch with a 1-based index.
    EpochCallback on_epoch_end;
    /// Fires per batch with the model outputs computed before that batch's
    /// update; indices map output rows back to sample positions.
    std::function<void(std::size_t epoch, const std::vector<std::size_t>& indices,
                       const Matrix& outputs)>
        on_batch_output;
};

/// Runs config.epochs epochs of minibatch SGD over (inputs, targets) and
/// returns the per-epoch mean sample loss (batch losses weighted by batch
/// size). Optimizer state starts at zero and is private to this call.
std::vector<double> train_epochs(Mlp& mlp, const Matrix& inputs,
                                 const TrainTargets& targets,
                                 const TrainConfig& config,
                                 const std::vector<bool>& freeze_mask,
                                 const TrainHooks& hooks);
std::vector<double> train_epochs(Mlp& mlp, const Matrix& inputs,
                                 const TrainTargets& targets,
                                 const TrainConfig& config,
                                 const std::vector<bool>& freeze_mask = {},
                                 const EpochCallback& on_epoch_end = {});

/// Fraction of rows whose argmax matches the label.
double accuracy(const Matrix& output, const std::vector<int>& labels);

} // namespace pnn

#endif
