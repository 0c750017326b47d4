#ifndef PNN_MACS_HPP
#define PNN_MACS_HPP

#include <cstdint>

#include "pnn/nn.hpp"

namespace pnn {

/// Multiply-accumulate count of one forward pass through one sample:
/// (in+1)*out per layer (the +1 charges the bias add), plus out extra
/// operations for each ReLU layer.
std::uint64_t macs_of(const MlpSpec& spec);

/// Trainable parameter count: (in+1)*out per layer.
std::uint64_t param_count(const MlpSpec& spec);

/// Running training-cost total in MACs. Additions are overflow-checked;
/// exceeding 64 bits throws overflow_error rather than wrapping.
class CumulativeMacs {
public:
    /// total += per_sample * samples.
    void add(std::uint64_t per_sample, std::uint64_t samples);
    std::uint64_t total() const { return total_; }

private:
    std::uint64_t total_ = 0;
};

} // namespace pnn

#endif
