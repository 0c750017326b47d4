#include "pnn/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pnn/error.hpp"
#include "pnn/macs.hpp"
#include "pnn/model_io.hpp"
#include "pnn/rng.hpp"

namespace pnn {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_datasets(const MlpSpec& spec, const Dataset& train, const Dataset& test) {
    if (train.images.cols() != spec.input_size) {
        throw UsageError("training images are " + std::to_string(train.images.cols()) +
                         "-wide but the network expects " +
                         std::to_string(spec.input_size));
    }
    if (test.images.cols() != spec.input_size) {
        throw UsageError("test images are " + std::to_string(test.images.cols()) +
                         "-wide but the network expects " +
                         std::to_string(spec.input_size));
    }
    if (train.num_classes != spec.output_size()) {
        throw UsageError("network emits " + std::to_string(spec.output_size()) +
                         " classes but the dataset has " +
                         std::to_string(train.num_classes));
    }
    if (test.num_classes != train.num_classes) {
        throw UsageError("train/test class counts differ");
    }
}

/// Forward through the active partition and every later one (still at
/// their current weights), scoring against the test labels.
double composite_accuracy(const std::vector<Mlp>& parts, std::size_t active,
                          const Matrix& test_prefix,
                          const std::vector<int>& test_labels) {
    Matrix out = forward(parts[active], test_prefix);
    for (std::size_t s = active + 1; s < parts.size(); ++s) {
        out = forward(parts[s], out);
    }
    return accuracy(out, test_labels);
}

double full_set_loss(const Mlp& part, const Matrix& inputs,
                     const TrainTargets& targets, LossKind loss) {
    return loss_and_grad(forward(part, inputs), targets, loss).loss;
}

/// Per-phase checkpoint store under one run directory. Phase k's composite
/// model and the records accumulated so far are written together; the
/// model file is the completion marker, so it is renamed into place last.
class Checkpointer {
public:
    Checkpointer(const std::filesystem::path* dir, const std::string& fingerprint)
        : enabled_(dir != nullptr) {
        if (!enabled_) return;
        dir_ = *dir;
        std::filesystem::create_directories(dir_);
        const auto fp_path = dir_ / "fingerprint.txt";
        if (std::filesystem::exists(fp_path)) {
            std::ifstream in(fp_path);
            std::string existing((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
            if (existing != fingerprint) {
                throw UsageError("checkpoint directory " + dir_.string() +
                                 " was written under a different configuration; "
                                 "remove it or change the output directory");
            }
        } else {
            write_atomic(fp_path, fingerprint);
        }
    }

    bool enabled() const { return enabled_; }

    /// Highest phase index with a completed model file, or -1.
    int last_complete_phase(std::size_t max_phase) const {
        if (!enabled_) return -1;
        int last = -1;
        for (std::size_t k = 0; k <= max_phase; ++k) {
            if (std::filesystem::exists(model_path(k))) last = static_cast<int>(k);
        }
        return last;
    }

    void save_phase(std::size_t k, const Mlp& composite,
                    const std::vector<RunRecord>& records) const {
        if (!enabled_) return;
        save_records(dir_ / "records.csv", records);
        const auto tmp = model_path(k).string() + ".tmp";
        save_model(tmp, composite);
        std::filesystem::rename(tmp, model_path(k));
    }

    Mlp load_phase(std::size_t k) const { return load_model(model_path(k)); }

    std::vector<RunRecord> load_saved_records() const {
        return load_records(dir_ / "records.csv");
    }

    void save_sil_once(std::size_t boundary, const SilMatrix& sil) const {
        if (!enabled_) return;
        const auto path = dir_ / ("sil-" + std::to_string(boundary) + ".bin");
        if (!std::filesystem::exists(path)) save_sil(path, sil);
    }

    void save_boundary(std::size_t boundary, const Matrix& z) const {
        if (!enabled_) return;
        const auto tmp = boundary_path(boundary).string() + ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + tmp + " for writing");
        const std::uint64_t rows = z.rows(), cols = z.cols();
        out.write(reinterpret_cast<const char*>(&rows), 8);
        out.write(reinterpret_cast<const char*>(&cols), 8);
        out.write(reinterpret_cast<const char*>(z.data()),
                  static_cast<std::streamsize>(z.size() * 8));
        out.close();
        std::filesystem::rename(tmp, boundary_path(boundary));
    }

    Matrix load_boundary(std::size_t boundary) const {
        std::ifstream in(boundary_path(boundary), std::ios::binary);
        if (!in) {
            throw DataError("missing boundary-output checkpoint " +
                            boundary_path(boundary).string());
        }
        std::uint64_t rows = 0, cols = 0;
        in.read(reinterpret_cast<char*>(&rows), 8);
        in.read(reinterpret_cast<char*>(&cols), 8);
        if (!in || rows == 0 || cols == 0) {
            throw DataError("corrupt boundary-output checkpoint " +
                            boundary_path(boundary).string());
        }
        Matrix z(rows, cols);
        in.read(reinterpret_cast<char*>(z.data()),
                static_cast<std::streamsize>(z.size() * 8));
        if (static_cast<std::size_t>(in.gcount()) != z.size() * 8) {
            throw DataError("truncated boundary-output checkpoint " +
                            boundary_path(boundary).string());
        }
        return z;
    }

private:
    std::filesystem::path model_path(std::size_t k) const {
        return dir_ / ("phase-" + std::to_string(k) + ".model");
    }
    std::filesystem::path boundary_path(std::size_t b) const {
        return dir_ / ("boundary-" + std::to_string(b) + ".bin");
    }
    static void write_atomic(const std::filesystem::path& path,
                             const std::string& content) {
        const auto tmp = path.string() + ".tmp";
        std::ofstream out(tmp, std::ios::trunc);
        out << content;
        out.close();
        std::filesystem::rename(tmp, path);
    }

    bool enabled_;
    std::filesystem::path dir_;
};

std::string dataset_signature(const Dataset& ds) {
    std::uint64_t label_sum = 0;
    for (int label : ds.labels) label_sum += static_cast<std::uint64_t>(label);
    std::ostringstream out;
    out << ds.images.rows() << "x" << ds.images.cols() << "/" << ds.num_classes
        << "/labels" << label_sum;
    return out.str();
}

std::string train_config_signature(const TrainConfig& cfg) {
    std::ostringstream out;
    out << cfg.epochs << "," << fmt_double(cfg.lr) << "," << fmt_double(cfg.momentum)
        << "," << cfg.batch_size << "," << (cfg.shuffle ? 1 : 0);
    return out.str();
}

} // namespace

void PipelinePlan::validate(const MlpSpec& spec) const {
    partition.validate(spec);
    if (phases.size() != partition.part_count()) {
        throw UsageError("plan has " + std::to_string(phases.size()) +
                         " phase configs for " + std::to_string(partition.part_count()) +
                         " partitions");
    }
    for (std::size_t k = 0; k < phases.size(); ++k) {
        phases[k].train.validate();
        if (k + 1 < phases.size() && phases[k].kappa < 0.0) {
            throw UsageError("target scale for boundary " + std::to_string(k) +
                             " must be non-negative");
        }
    }
    if (recovery) recovery->train.validate();
}

std::string phase_name(std::size_t part, std::size_t part_count) {
    if (part + 1 == part_count) return "right";
    if (part == 0) return "left";
    return "mid-" + std::to_string(part);
}

std::string run_fingerprint(const MlpSpec& spec, const PipelinePlan& plan,
                            const Dataset& train, const Dataset& test,
                            std::uint64_t master_seed) {
    std::ostringstream out;
    out << "pnn-v1|arch=" << arch_to_string(spec) << "|cuts=";
    for (std::size_t c : plan.partition.cuts) out << c << ";";
    out << "|phases=";
    for (const PhaseConfig& p : plan.phases) {
        out << train_config_signature(p.train) << ",k=" << fmt_double(p.kappa) << ";";
    }
    out << "|recovery=";
    if (plan.recovery) out << train_config_signature(plan.recovery->train);
    out << "|capture=" << static_cast<int>(plan.capture);
    out << "|silmaster=" << (plan.sil_master ? std::to_string(*plan.sil_master) : "run");
    out << "|evalmacs=" << (plan.include_eval_macs ? 1 : 0);
    out << "|seed=" << master_seed;
    out << "|train=" << dataset_signature(train);
    out << "|test=" << dataset_signature(test);
    const std::string text = out.str();
    return sha256_hex_of_bytes(text.data(), text.size());
}

void save_records(const std::filesystem::path& path,
                  const std::vector<RunRecord>& records) {
    const auto tmp = path.string() + ".tmp";
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    out << "phase,epoch,cum_macs,train_loss,test_accuracy\n";
    for (const RunRecord& r : records) {
        out << r.phase << "," << r.epoch << "," << r.cum_macs << ","
            << fmt_double(r.train_loss) << "," << fmt_double(r.test_accuracy) << "\n";
    }
    out.close();
    if (!out) throw DataError("write to " + tmp + " failed");
    std::filesystem::rename(tmp, path);
}

std::vector<RunRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) ||
        line != "phase,epoch,cum_macs,train_loss,test_accuracy") {
        throw DataError(path.string() + ": unexpected header");
    }
    std::vector<RunRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        RunRecord r;
        char phase[32];
        unsigned long long epoch = 0, cum = 0;
        if (std::sscanf(line.c_str(), "%31[^,],%llu,%llu,%lg,%lg", phase, &epoch,
                        &cum, &r.train_loss, &r.test_accuracy) != 5) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": malformed record");
        }
        r.phase = phase;
        r.epoch = epoch;
        r.cum_macs = cum;
        records.push_back(std::move(r));
    }
    return records;
}

PipelineResult pnn_train(const MlpSpec& spec, const PipelinePlan& plan,
                         const Dataset& train, const Dataset& test,
                         std::uint64_t master_seed,
                         const std::filesystem::path* checkpoint_dir) {
    spec.validate();
    plan.validate(spec);
    check_datasets(spec, train, test);

    const std::vector<MlpSpec> part_specs = split_spec(spec, plan.partition);
    const std::size_t n_parts = part_specs.size();
    const std::size_t n_train = train.size();
    const std::size_t n_test = test.size();

    std::vector<Mlp> parts;
    parts.reserve(n_parts);
    for (std::size_t k = 0; k < n_parts; ++k) {
        Rng rng(Rng::stream(master_seed, stream_id::partition_init_base + k));
        parts.push_back(init_mlp(part_specs[k], rng));
    }

    const std::uint64_t sil_master = plan.sil_master.value_or(master_seed);
    std::vector<SilMatrix> sils;
    for (std::size_t b = 0; b + 1 < n_parts; ++b) {
        sils.push_back(generate_sil(part_specs[b].output_size(), train.num_classes,
                                    plan.phases[b].kappa,
                                    Rng::stream(sil_master, stream_id::sil_base + b)));
    }

    std::vector<std::uint64_t> part_macs;
    for (const MlpSpec& ps : part_specs) part_macs.push_back(macs_of(ps));
    const std::uint64_t full_macs = macs_of(spec);

    const Checkpointer ckpt(checkpoint_dir,
                            run_fingerprint(spec, plan, train, test, master_seed));
    for (std::size_t b = 0; b < sils.size(); ++b) ckpt.save_sil_once(b, sils[b]);

    // Recovery, when configured, is one more checkpointable phase.
    const std::size_t recovery_phase = n_parts;
    const std::size_t max_phase = plan.recovery ? recovery_phase : n_parts - 1;
    const int resumed = ckpt.last_complete_phase(max_phase);

    CumulativeMacs cum;
    std::vector<RunRecord> records;
    if (resumed >= 0) {
        Mlp composite = ckpt.load_phase(static_cast<std::size_t>(resumed));
        if (composite.spec != spec) {
            throw DataError("checkpointed model does not match the configured "
                            "architecture");
        }
        parts = split(composite, plan.partition).parts;
        // Keep only records from phases whose model file completed; an
        // interrupted save can leave records one phase ahead of the model.
        std::vector<std::string> done;
        for (std::size_t k = 0; k <= static_cast<std::size_t>(resumed); ++k) {
            done.push_back(k == recovery_phase ? "recovery" : phase_name(k, n_parts));
        }
        for (const RunRecord& r : ckpt.load_saved_records()) {
            if (std::find(done.begin(), done.end(), r.phase) != done.end()) {
                records.push_back(r);
            }
        }
        if (!records.empty()) cum.add(records.back().cum_macs, 1);
    }

    // Training-side inputs for the current phase and test-side outputs of
    // the trained prefix; both start at the raw images and advance to
    // boundary outputs as phases complete.
    const Matrix* inputs = &train.images;
    const Matrix* test_prefix = &test.images;
    std::optional<Matrix> inputs_store, test_store;

    // Phases after the last completed one still need their input matrices,
    // which are rebuilt by forwarding through the already-trained prefix.
    const bool any_phase_left = resumed < static_cast<int>(n_parts - 1);

    for (std::size_t k = 0; k < n_parts; ++k) {
        const bool final_part = k + 1 == n_parts;
        const std::string name = phase_name(k, n_parts);

        if (static_cast<int>(k) <= resumed) {
            if (!final_part && any_phase_left) {
                Matrix z = plan.capture == BoundaryCapture::DuringLastEpoch
                               ? ckpt.load_boundary(k)
                               : forward(parts[k], *inputs);
                inputs_store = std::move(z);
                inputs = &*inputs_store;
                test_store = forward(parts[k], *test_prefix);
                test_prefix = &*test_store;
            }
            continue;
        }

        TrainTargets targets = final_part
                                   ? TrainTargets{train.labels}
                                   : TrainTargets{sil_targets_for(sils[k], train.labels)};
        TrainConfig cfg = plan.phases[k].train;
        cfg.loss = final_part ? LossKind::SoftmaxCrossEntropy : LossKind::MseOnOutputs;
        cfg.seed = Rng::stream(master_seed, stream_id::phase_shuffle_base + k);

        records.push_back({name, 0, cum.total(),
                           full_set_loss(parts[k], *inputs, targets, cfg.loss),
                           composite_accuracy(parts, k, *test_prefix, test.labels)});

        std::optional<Matrix> live_z;
        TrainHooks hooks;
        hooks.on_epoch_end = [&](std::size_t epoch, const Mlp&, double loss) {
            cum.add(part_macs[k], n_train);
            if (plan.include_eval_macs) cum.add(full_macs, n_test);
            records.push_back({name, epoch, cum.total(), loss,
                               composite_accuracy(parts, k, *test_prefix,
                                                  test.labels)});
        };
        if (!final_part && plan.capture == BoundaryCapture::DuringLastEpoch &&
            cfg.epochs > 0) {
            live_z.emplace(n_train, part_specs[k].output_size());
            hooks.on_batch_output = [&](std::size_t epoch,
                                        const std::vector<std::size_t>& indices,
                                        const Matrix& outputs) {
                if (epoch != cfg.epochs) return;
                for (std::size_t r = 0; r < indices.size(); ++r) {
                    std::memcpy(live_z->row_ptr(indices[r]), outputs.row_ptr(r),
                                outputs.cols() * sizeof(double));
                }
            };
        }

        train_epochs(parts[k], *inputs, targets, cfg, {}, hooks);

        if (!final_part) {
            Matrix z = live_z ? std::move(*live_z) : forward(parts[k], *inputs);
            if (plan.capture == BoundaryCapture::DuringLastEpoch) {
                ckpt.save_boundary(k, z);
            }
            inputs_store = std::move(z);
            inputs = &*inputs_store;
            test_store = forward(parts[k], *test_prefix);
            test_prefix = &*test_store;
        }
        ckpt.save_phase(k, join(PartitionChain{parts}), records);
    }

    Mlp model = join(PartitionChain{parts});

    if (plan.recovery && resumed < static_cast<int>(recovery_phase)) {
        PipelineResult rec = recovery_train(std::move(model), plan.partition,
                                            plan.recovery->train, train, test,
                                            master_seed, cum.total());
        model = std::move(rec.model);
        records.insert(records.end(), rec.records.begin(), rec.records.end());
        ckpt.save_phase(recovery_phase, model, records);
    }

    return {std::move(model), std::move(records)};
}

PipelineResult baseline_train(const MlpSpec& spec, const TrainConfig& config,
                              const Dataset& train, const Dataset& test,
                              std::uint64_t seed,
                              const std::filesystem::path* checkpoint_dir) {
    spec.validate();
    config.validate();
    check_datasets(spec, train, test);

    std::ostringstream fp;
    fp << "baseline-v1|arch=" << arch_to_string(spec) << "|cfg="
       << train_config_signature(config) << "|seed=" << seed << "|train="
       << dataset_signature(train) << "|test=" << dataset_signature(test);
    const std::string fp_text = fp.str();
    const Checkpointer ckpt(checkpoint_dir,
                            sha256_hex_of_bytes(fp_text.data(), fp_text.size()));
    if (ckpt.last_complete_phase(0) == 0) {
        return {ckpt.load_phase(0), ckpt.load_saved_records()};
    }

    Rng rng(Rng::stream(seed, stream_id::baseline_init));
    Mlp model = init_mlp(spec, rng);

    TrainConfig cfg = config;
    cfg.loss = LossKind::SoftmaxCrossEntropy;
    cfg.seed = seed; // the in-loop shuffle stream derives from this

    const std::uint64_t spec_macs = macs_of(spec);
    CumulativeMacs cum;
    std::vector<RunRecord> records;
    const TrainTargets targets{train.labels};
    records.push_back({"baseline", 0, 0,
                       full_set_loss(model, train.images, targets, cfg.loss),
                       accuracy(forward(model, test.images), test.labels)});

    train_epochs(model, train.images, targets, cfg, {},
                 [&](std::size_t epoch, const Mlp& m, double loss) {
                     cum.add(spec_macs, train.size());
                     records.push_back({"baseline", epoch, cum.total(), loss,
                                        accuracy(forward(m, test.images),
                                                 test.labels)});
                 });

    ckpt.save_phase(0, model, records);
    return {std::move(model), std::move(records)};
}

PipelineResult recovery_train(Mlp joined, const PartitionPlan& plan,
                              const TrainConfig& config, const Dataset& train,
                              const Dataset& test, std::uint64_t master_seed,
                              std::uint64_t start_macs) {
    plan.validate(joined.spec);
    config.validate();
    check_datasets(joined.spec, train, test);

    std::vector<std::size_t> frozen;
    for (std::size_t p = 1; p < plan.part_count(); ++p) frozen.push_back(p);
    const std::vector<bool> freeze = freeze_mask_for(joined.spec, plan, frozen);

    TrainConfig cfg = config;
    cfg.loss = LossKind::SoftmaxCrossEntropy;
    cfg.seed = Rng::stream(master_seed, stream_id::recovery_shuffle);

    const std::uint64_t spec_macs = macs_of(joined.spec);
    CumulativeMacs cum;
    cum.add(start_macs, 1);

    std::vector<RunRecord> records;
    const TrainTargets targets{train.labels};
    records.push_back({"recovery", 0, cum.total(),
                       full_set_loss(joined, train.images, targets, cfg.loss),
                       accuracy(forward(joined, test.images), test.labels)});

    train_epochs(joined, train.images, targets, cfg, freeze,
                 [&](std::size_t epoch, const Mlp& m, double loss) {
                     cum.add(spec_macs, train.size());
                     records.push_back({"recovery", epoch, cum.total(), loss,
                                        accuracy(forward(m, test.images),
                                                 test.labels)});
                 });

    return {std::move(joined), std::move(records)};
}

} // namespace pnn
