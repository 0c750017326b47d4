#ifndef PNN_EXPERIMENT_HPP
#define PNN_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pnn/pipeline.hpp"

namespace pnn {

enum class RunMode : std::uint8_t { Baseline = 0, Pnn = 1 };

struct DataConfig {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    std::size_t num_classes = 47;
    /// Per-class fraction of the training set to keep (stratified);
    /// 1 keeps everything.
    double train_fraction = 1.0;
    /// When set, every listed file is hash-checked before loading.
    std::optional<std::filesystem::path> manifest;
};

/// Everything needed to repeat one training configuration across seeds.
struct ExperimentConfig {
    RunMode mode = RunMode::Pnn;
    MlpSpec spec;
    PipelinePlan plan;    // used when mode == Pnn
    TrainConfig baseline; // used when mode == Baseline
    DataConfig data;
    std::size_t repetitions = 1;
    /// Explicit per-repetition seeds; when empty, repetition i runs with
    /// master_seed + i.
    std::vector<std::uint64_t> seeds;
    std::uint64_t master_seed = 0;
    /// Derive boundary-target seeds from master_seed for every repetition,
    /// so all repetitions share identical target matrices.
    bool shared_sil = false;
    std::filesystem::path out_dir = "runs/default";
    bool checkpoints = true;
    /// Worker threads for repetitions; 0 picks the hardware thread count.
    /// Result files are identical regardless of this setting.
    std::size_t jobs = 0;
};

/// The seed for each repetition, honoring explicit seeds when present.
/// Throws UsageError when explicit seeds contradict the repetition count.
std::vector<std::uint64_t> resolve_seeds(const ExperimentConfig& cfg);

/// Loads train and test sets, verifying the manifest first when one is
/// configured and applying the stratified training fraction.
std::pair<Dataset, Dataset> load_experiment_data(const DataConfig& data);

struct ExperimentRun {
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
};

struct ExperimentResult {
    std::vector<ExperimentRun> runs;
};

using RepCallback = std::function<void(std::size_t rep, std::uint64_t seed,
                                       const std::vector<RunRecord>& records)>;

/// Runs every repetition of the configured experiment. With checkpoints
/// enabled each repetition stores its phases under out_dir/rep-<i> and a
/// rerun resumes unfinished repetitions. The callback fires after each
/// repetition finishes.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& train,
                                const Dataset& test, const RepCallback& on_rep = {});

/// One cross-repetition point on the cost/accuracy curve.
struct AggregateRow {
    std::string phase;
    std::size_t epoch = 0;
    std::uint64_t cum_macs = 0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
    std::size_t n = 0;
};

/// Aligns runs record-by-record and averages test accuracy. All runs must
/// have identical (phase, epoch, cum_macs) sequences; throws UsageError
/// otherwise.
std::vector<AggregateRow> aggregate_accuracy(const std::vector<ExperimentRun>& runs);

double mean_of(const std::vector<double>& v);
double population_std(const std::vector<double>& v);

/// Squared Pearson correlation of two equal-length sequences. A pair of
/// identical constant sequences scores 1; a constant paired with anything
/// else scores 0. Throws UsageError on empty or mismatched input.
double r_squared(const std::vector<double>& a, const std::vector<double>& b);

/// Final test accuracy of each run (its last record).
std::vector<double> final_accuracies(const std::vector<ExperimentRun>& runs);

// CSV outputs. raw: run_id,phase,epoch,cum_macs,train_loss,test_accuracy.
// aggregate: cum_macs,mean_acc,std_acc,n.
void write_raw_csv(const std::filesystem::path& path,
                   const std::vector<ExperimentRun>& runs);
void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregateRow>& rows);

} // namespace pnn

#endif
