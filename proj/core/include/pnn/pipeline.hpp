#ifndef PNN_PIPELINE_HPP
#define PNN_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/nn.hpp"
#include "pnn/partition.hpp"
#include "pnn/sil.hpp"

namespace pnn {

/// How boundary outputs are captured once a non-final partition finishes
/// training: a clean forward pass over the whole training set (default),
/// or the per-batch outputs observed during the final training epoch
/// before each update.
enum class BoundaryCapture : std::uint8_t { AfterTraining = 0, DuringLastEpoch = 1 };

/// Per-partition training phase. kappa scales the random intermediate
/// targets and is ignored for the final partition, which trains against
/// the true labels. The loss is fixed by position: squared error for
/// non-final partitions, softmax cross-entropy for the final one.
struct PhaseConfig {
    TrainConfig train;
    double kappa = 10.0;
};

/// Optional end-to-end fine-tuning after joining: every partition except
/// the first is frozen.
struct RecoveryConfig {
    TrainConfig train;
};

struct PipelinePlan {
    PartitionPlan partition;
    std::vector<PhaseConfig> phases; // one per partition, in chain order
    std::optional<RecoveryConfig> recovery;
    BoundaryCapture capture = BoundaryCapture::AfterTraining;
    /// When set, intermediate-label seeds derive from this instead of the
    /// run seed, so every repetition shares the same label matrices.
    std::optional<std::uint64_t> sil_master;
    /// Charge test-set evaluation forwards to the cost counter (off by
    /// default: the counter tracks training computation only).
    bool include_eval_macs = false;

    void validate(const MlpSpec& spec) const;
};

/// One measurement point: written at epoch 0 of every phase (the state
/// before that phase's first update) and after each epoch.
struct RunRecord {
    std::string phase; // "left", "mid-1", ..., "right", "recovery", "baseline"
    std::size_t epoch = 0;
    std::uint64_t cum_macs = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;

    bool operator==(const RunRecord&) const = default;
};

struct PipelineResult {
    Mlp model;
    std::vector<RunRecord> records;
};

/// Phase name for partition k of n ("left", "mid-k", "right").
std::string phase_name(std::size_t part, std::size_t part_count);

/// Trains the partitioned chain: each non-final partition regresses onto
/// its boundary's synthetic targets, then its outputs over the training
/// set feed the next partition; the final partition trains on the true
/// labels. Joins the chain and, if configured, runs frozen-suffix recovery
/// epochs. Fully deterministic in (spec, plan, data, master_seed).
///
/// With checkpoint_dir set, the composite model and records are saved
/// after every phase; a rerun with the same configuration resumes at the
/// first unfinished phase and reproduces the exact same result.
PipelineResult pnn_train(const MlpSpec& spec, const PipelinePlan& plan,
                         const Dataset& train, const Dataset& test,
                         std::uint64_t master_seed,
                         const std::filesystem::path* checkpoint_dir = nullptr);

/// Conventional single-phase training of the whole network, recorded with
/// the same bookkeeping for comparison.
PipelineResult baseline_train(const MlpSpec& spec, const TrainConfig& config,
                              const Dataset& train, const Dataset& test,
                              std::uint64_t seed,
                              const std::filesystem::path* checkpoint_dir = nullptr);

/// End-to-end fine-tuning of an already-joined model with every partition
/// except the first frozen. start_macs continues the cost axis of the run
/// that produced the model.
PipelineResult recovery_train(Mlp joined, const PartitionPlan& plan,
                              const TrainConfig& config, const Dataset& train,
                              const Dataset& test, std::uint64_t master_seed,
                              std::uint64_t start_macs);

// Checkpoint record files round-trip RunRecords exactly.
void save_records(const std::filesystem::path& path,
                  const std::vector<RunRecord>& records);
std::vector<RunRecord> load_records(const std::filesystem::path& path);

/// Stable fingerprint of everything that determines a run's trajectory;
/// used to refuse resuming from a checkpoint written under a different
/// configuration.
std::string run_fingerprint(const MlpSpec& spec, const PipelinePlan& plan,
                            const Dataset& train, const Dataset& test,
                            std::uint64_t master_seed);

} // namespace pnn

#endif
