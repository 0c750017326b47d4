#include "pnn/macs.hpp"

#include <stdexcept>
#include <string>

namespace pnn {

namespace {

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out;
    if (__builtin_add_overflow(a, b, &out)) {
        throw std::overflow_error("cost counter overflowed 64 bits");
    }
    return out;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw std::overflow_error("cost counter overflowed 64 bits");
    }
    return out;
}

} // namespace

std::uint64_t macs_of(const MlpSpec& spec) {
    spec.validate();
    std::uint64_t total = 0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::uint64_t in = spec.in_size(l);
        const std::uint64_t out = spec.layers[l].out_size;
        total = checked_add(total, checked_mul(in + 1, out));
        if (spec.layers[l].activation == Activation::ReLU) {
            total = checked_add(total, out);
        }
    }
    return total;
}

std::uint64_t param_count(const MlpSpec& spec) {
    spec.validate();
    std::uint64_t total = 0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::uint64_t in = spec.in_size(l);
        const std::uint64_t out = spec.layers[l].out_size;
        total = checked_add(total, checked_mul(in + 1, out));
    }
    return total;
}

void CumulativeMacs::add(std::uint64_t per_sample, std::uint64_t samples) {
    total_ = checked_add(total_, checked_mul(per_sample, samples));
}

} // namespace pnn
