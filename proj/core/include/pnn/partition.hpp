#ifndef PNN_PARTITION_HPP
#define PNN_PARTITION_HPP

#include <vector>

#include "pnn/nn.hpp"

namespace pnn {

/// Where to split a network: 1-based cut positions counted after the given
/// layer, strictly increasing, each strictly inside the layer list. cuts
/// {2} on a 5-layer network yields parts with layers {0,1} and {2,3,4}.
struct PartitionPlan {
    std::vector<std::size_t> cuts;

    void validate(const MlpSpec& spec) const; // throws UsageError
    std::size_t part_count() const { return cuts.size() + 1; }
};

/// Shape-only split: the sub-architectures induced by the plan, in order.
std::vector<MlpSpec> split_spec(const MlpSpec& spec, const PartitionPlan& plan);

struct PartitionChain {
    std::vector<Mlp> parts;

    /// Output width of part i == input width of part i+1.
    std::size_t boundary_size(std::size_t i) const;
};

/// Copies layers into per-part networks. Activations are preserved
/// verbatim, so split followed by join reproduces the original bit for bit.
PartitionChain split(const Mlp& mlp, const PartitionPlan& plan);

/// Concatenates the parts back into one network; adjacent parts must agree
/// on the boundary width.
Mlp join(const PartitionChain& chain);

/// Per-layer freeze flags for the joined network: true for every layer
/// belonging to a partition listed in frozen_parts (0-based part indices).
std::vector<bool> freeze_mask_for(const MlpSpec& spec, const PartitionPlan& plan,
                                  const std::vector<std::size_t>& frozen_parts);

} // namespace pnn

#endif
