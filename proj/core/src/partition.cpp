#include "pnn/partition.hpp"

#include <string>

#include "pnn/error.hpp"

namespace pnn {

void PartitionPlan::validate(const MlpSpec& spec) const {
    spec.validate();
    if (cuts.empty()) {
        throw UsageError("partition plan needs at least one cut");
    }
    std::size_t prev = 0;
    for (std::size_t cut : cuts) {
        if (cut == 0 || cut >= spec.layers.size()) {
            throw UsageError("cut after layer " + std::to_string(cut) +
                             " is outside a " + std::to_string(spec.layers.size()) +
                             "-layer network");
        }
        if (cut <= prev) {
            throw UsageError("cuts must be strictly increasing");
        }
        prev = cut;
    }
}

std::vector<MlpSpec> split_spec(const MlpSpec& spec, const PartitionPlan& plan) {
    plan.validate(spec);
    std::vector<MlpSpec> parts;
    std::size_t begin = 0;
    for (std::size_t p = 0; p <= plan.cuts.size(); ++p) {
        const std::size_t end = p < plan.cuts.size() ? plan.cuts[p] : spec.layers.size();
        MlpSpec part;
        part.input_size = begin == 0 ? spec.input_size : spec.layers[begin - 1].out_size;
        part.layers.assign(spec.layers.begin() + static_cast<std::ptrdiff_t>(begin),
                           spec.layers.begin() + static_cast<std::ptrdiff_t>(end));
        parts.push_back(std::move(part));
        begin = end;
    }
    return parts;
}

std::size_t PartitionChain::boundary_size(std::size_t i) const {
    if (i + 1 >= parts.size()) {
        throw UsageError("boundary index " + std::to_string(i) + " out of range for " +
                         std::to_string(parts.size()) + " parts");
    }
    return parts[i].spec.output_size();
}

PartitionChain split(const Mlp& mlp, const PartitionPlan& plan) {
    const std::vector<MlpSpec> specs = split_spec(mlp.spec, plan);
    PartitionChain chain;
    std::size_t layer = 0;
    for (const MlpSpec& part_spec : specs) {
        Mlp part{part_spec, {}, {}};
        for (std::size_t l = 0; l < part_spec.layers.size(); ++l, ++layer) {
            part.weights.push_back(mlp.weights[layer]);
            part.biases.push_back(mlp.biases[layer]);
        }
        chain.parts.push_back(std::move(part));
    }
    return chain;
}

Mlp join(const PartitionChain& chain) {
    if (chain.parts.empty()) throw UsageError("cannot join an empty chain");
    for (std::size_t i = 0; i + 1 < chain.parts.size(); ++i) {
        const std::size_t out = chain.parts[i].spec.output_size();
        const std::size_t in = chain.parts[i + 1].spec.input_size;
        if (out != in) {
            throw UsageError("cannot join parts " + std::to_string(i) + " and " +
                             std::to_string(i + 1) + ": boundary widths " +
                             std::to_string(out) + " vs " + std::to_string(in));
        }
    }
    Mlp joined;
    joined.spec.input_size = chain.parts.front().spec.input_size;
    for (const Mlp& part : chain.parts) {
        part.spec.validate();
        for (std::size_t l = 0; l < part.spec.layers.size(); ++l) {
            joined.spec.layers.push_back(part.spec.layers[l]);
            joined.weights.push_back(part.weights[l]);
            joined.biases.push_back(part.biases[l]);
        }
    }
    return joined;
}

std::vector<bool> freeze_mask_for(const MlpSpec& spec, const PartitionPlan& plan,
                                  const std::vector<std::size_t>& frozen_parts) {
    plan.validate(spec);
    std::vector<bool> mask(spec.layers.size(), false);
    for (std::size_t part : frozen_parts) {
        if (part >= plan.part_count()) {
            throw UsageError("partition index " + std::to_string(part) +
                             " out of range for " + std::to_string(plan.part_count()) +
                             " parts");
        }
        const std::size_t begin = part == 0 ? 0 : plan.cuts[part - 1];
        const std::size_t end =
            part < plan.cuts.size() ? plan.cuts[part] : spec.layers.size();
        for (std::size_t l = begin; l < end; ++l) mask[l] = true;
    }
    return mask;
}

} // namespace pnn
