#include "pnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "pnn/error.hpp"

namespace pnn {

namespace {

std::string fmt_g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

std::vector<std::uint64_t> resolve_seeds(const ExperimentConfig& cfg) {
    if (!cfg.seeds.empty()) {
        if (cfg.repetitions != 0 && cfg.repetitions != cfg.seeds.size()) {
            throw UsageError("got " + std::to_string(cfg.seeds.size()) +
                             " explicit seeds but " +
                             std::to_string(cfg.repetitions) + " repetitions");
        }
        return cfg.seeds;
    }
    if (cfg.repetitions == 0) throw UsageError("repetitions must be at least 1");
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < cfg.repetitions; ++i) {
        seeds.push_back(cfg.master_seed + i);
    }
    return seeds;
}

std::pair<Dataset, Dataset> load_experiment_data(const DataConfig& data) {
    if (data.manifest) {
        verify_manifest(*data.manifest, data.manifest->parent_path());
    }
    Dataset train = load_dataset(data.train_images, data.train_labels,
                                 data.num_classes);
    Dataset test = load_dataset(data.test_images, data.test_labels,
                                data.num_classes);
    if (data.train_fraction < 1.0) {
        train = stratified_fraction(train, data.train_fraction);
    }
    return {std::move(train), std::move(test)};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& train,
                                const Dataset& test, const RepCallback& on_rep) {
    const std::vector<std::uint64_t> seeds = resolve_seeds(cfg);
    const std::size_t n = seeds.size();
    ExperimentResult result;
    result.runs.resize(n);

    std::atomic<std::size_t> next{0};
    std::mutex callback_mutex;
    std::vector<std::exception_ptr> errors(n);

    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                const std::filesystem::path rep_dir =
                    cfg.out_dir / ("rep-" + std::to_string(i));
                const std::filesystem::path* ckpt =
                    cfg.checkpoints ? &rep_dir : nullptr;

                PipelineResult res = [&] {
                    if (cfg.mode == RunMode::Baseline) {
                        return baseline_train(cfg.spec, cfg.baseline, train, test,
                                              seeds[i], ckpt);
                    }
                    PipelinePlan plan = cfg.plan;
                    if (cfg.shared_sil) plan.sil_master = cfg.master_seed;
                    return pnn_train(cfg.spec, plan, train, test, seeds[i], ckpt);
                }();

                if (on_rep) {
                    const std::lock_guard<std::mutex> lock(callback_mutex);
                    on_rep(i, seeds[i], res.records);
                }
                result.runs[i] = {seeds[i], std::move(res.records)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    std::size_t jobs = cfg.jobs == 0 ? std::thread::hardware_concurrency()
                                     : cfg.jobs;
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return result;
}

std::vector<AggregateRow> aggregate_accuracy(const std::vector<ExperimentRun>& runs) {
    if (runs.empty()) throw UsageError("nothing to aggregate");
    const std::size_t len = runs.front().records.size();
    for (const ExperimentRun& run : runs) {
        if (run.records.size() != len) {
            throw UsageError("runs have different record counts (" +
                             std::to_string(run.records.size()) + " vs " +
                             std::to_string(len) + "); cannot aggregate");
        }
    }
    std::vector<AggregateRow> rows;
    rows.reserve(len);
    for (std::size_t r = 0; r < len; ++r) {
        const RunRecord& first = runs.front().records[r];
        std::vector<double> accs;
        for (const ExperimentRun& run : runs) {
            const RunRecord& rec = run.records[r];
            if (rec.phase != first.phase || rec.epoch != first.epoch ||
                rec.cum_macs != first.cum_macs) {
                throw UsageError("record " + std::to_string(r) +
                                 " differs across runs (phase/epoch/cost "
                                 "mismatch); cannot aggregate");
            }
            accs.push_back(rec.test_accuracy);
        }
        rows.push_back({first.phase, first.epoch, first.cum_macs, mean_of(accs),
                        population_std(accs), accs.size()});
    }
    return rows;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw UsageError("mean of empty sequence");
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
    const double m = mean_of(v);
    double sq = 0.0;
    for (double x : v) sq += (x - m) * (x - m);
    return std::sqrt(sq / static_cast<double>(v.size()));
}

double r_squared(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || a.size() != b.size()) {
        throw UsageError("correlation needs two equal-length non-empty sequences");
    }
    const double ma = mean_of(a), mb = mean_of(b);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return a == b ? 1.0 : 0.0;
    const double r2 = (sab * sab) / (saa * sbb);
    return std::min(r2, 1.0);
}

std::vector<double> final_accuracies(const std::vector<ExperimentRun>& runs) {
    std::vector<double> accs;
    for (const ExperimentRun& run : runs) {
        if (run.records.empty()) throw UsageError("run without records");
        accs.push_back(run.records.back().test_accuracy);
    }
    return accs;
}

void write_raw_csv(const std::filesystem::path& path,
                   const std::vector<ExperimentRun>& runs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "run_id,phase,epoch,cum_macs,train_loss,test_accuracy\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (const RunRecord& r : runs[i].records) {
            out << i << "," << r.phase << "," << r.epoch << "," << r.cum_macs << ","
                << fmt_g12(r.train_loss) << "," << fmt_g12(r.test_accuracy) << "\n";
        }
    }
    out.close();
    if (!out) throw DataError("write to " + path.string() + " failed");
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregateRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "cum_macs,mean_acc,std_acc,n\n";
    for (const AggregateRow& row : rows) {
        out << row.cum_macs << "," << fmt_g12(row.mean_acc) << ","
            << fmt_g12(row.std_acc) << "," << row.n << "\n";
    }
    out.close();
    if (!out) throw DataError("write to " + path.string() + " failed");
}

} // namespace pnn
