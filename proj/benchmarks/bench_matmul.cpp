#include <benchmark/benchmark.h>

#include "pnn/matrix.hpp"
#include "pnn/nn.hpp"
#include "pnn/rng.hpp"

namespace {

pnn::Matrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
    pnn::Rng rng(seed);
    return pnn::uniform(rng, -1.0, 1.0, rows, cols);
}

// Batch-times-transposed-weights product, the hot shape in training:
// activations (batch x in) against a weight matrix stored out x in.
void BM_forward_product(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto in = static_cast<std::size_t>(state.range(1));
    const auto out = static_cast<std::size_t>(state.range(2));
    const pnn::Matrix x = random_matrix(1, batch, in);
    const pnn::Matrix w = random_matrix(2, out, in);
    for (auto _ : state) {
        pnn::Matrix wt = pnn::transpose(w);
        pnn::Matrix z = pnn::matmul(x, wt);
        benchmark::DoNotOptimize(z.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(batch * in * out));
}

// Gradient-shape product: batch-major operands contracted over the batch.
void BM_gradient_product(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto in = static_cast<std::size_t>(state.range(1));
    const auto out = static_cast<std::size_t>(state.range(2));
    const pnn::Matrix dz = random_matrix(3, batch, out);
    const pnn::Matrix x = random_matrix(4, batch, in);
    for (auto _ : state) {
        pnn::Matrix dw = pnn::matmul_transpose_a(dz, x);
        benchmark::DoNotOptimize(dw.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(batch * in * out));
}

void BM_forward_pass(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const pnn::MlpSpec spec{784,
                            {{80, pnn::Activation::ReLU},
                             {60, pnn::Activation::ReLU},
                             {60, pnn::Activation::ReLU},
                             {60, pnn::Activation::ReLU},
                             {47, pnn::Activation::Identity}}};
    pnn::Rng rng(5);
    const pnn::Mlp mlp = pnn::init_mlp(spec, rng);
    const pnn::Matrix x = random_matrix(6, batch, 784);
    for (auto _ : state) {
        pnn::Matrix y = pnn::forward(mlp, x);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(batch));
}

void BM_train_step(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const pnn::MlpSpec spec{784,
                            {{80, pnn::Activation::ReLU},
                             {60, pnn::Activation::ReLU},
                             {60, pnn::Activation::ReLU},
                             {60, pnn::Activation::ReLU},
                             {47, pnn::Activation::Identity}}};
    pnn::Rng rng(7);
    pnn::Mlp mlp = pnn::init_mlp(spec, rng);
    pnn::OptimizerState opt = pnn::OptimizerState::zeros_like(mlp);
    const pnn::Matrix x = random_matrix(8, batch, 784);
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 47);
    for (auto _ : state) {
        pnn::ForwardCache cache = pnn::forward_cached(mlp, x);
        pnn::LossGrad lg = pnn::softmax_cross_entropy_loss(cache.output(), labels);
        pnn::Gradients grads = pnn::backward(mlp, cache, lg.grad);
        pnn::sgd_momentum_step(mlp, opt, grads, 0.01, 0.9);
        benchmark::DoNotOptimize(mlp.weights[0].data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(batch));
}

} // namespace

BENCHMARK(BM_forward_product)->Args({1410, 784, 80})->Args({1410, 60, 60});
BENCHMARK(BM_gradient_product)->Args({1410, 784, 80})->Args({1410, 60, 60});
BENCHMARK(BM_forward_pass)->Arg(1410)->Arg(18800);
BENCHMARK(BM_train_step)->Arg(1410);

BENCHMARK_MAIN();
