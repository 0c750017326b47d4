#include "pnn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pnn/error.hpp"

namespace pnn {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool is_mid_section(const std::string& name) {
    if (name.rfind("mid-", 0) != 0) return false;
    const std::string digits = name.substr(4);
    if (digits.empty() || digits[0] == '0') return false;
    return std::all_of(digits.begin(), digits.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool is_known_section(const std::string& name) {
    return name.empty() || name == "left" || name == "right" ||
           name == "recovery" || name == "baseline" || is_mid_section(name);
}

std::string describe(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

std::uint64_t parse_u64(const std::string& section, const std::string& key,
                        const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (errno != 0 || end == value.c_str() || *end != '\0' ||
        value.find('-') != std::string::npos) {
        throw UsageError(describe(section, key) + ": expected a non-negative "
                         "integer, got \"" + value + "\"");
    }
    return v;
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (errno != 0 || end == value.c_str() || *end != '\0') {
        throw UsageError(describe(section, key) + ": expected a number, got \"" +
                         value + "\"");
    }
    return v;
}

bool parse_bool(const std::string& section, const std::string& key,
                const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw UsageError(describe(section, key) + ": expected true or false, got \"" +
                     value + "\"");
}

std::vector<std::uint64_t> parse_u64_list(const std::string& section,
                                          const std::string& key,
                                          const std::string& value) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            throw UsageError(describe(section, key) + ": empty list entry");
        }
        out.push_back(parse_u64(section, key, item));
    }
    if (out.empty()) throw UsageError(describe(section, key) + ": empty list");
    return out;
}

/// Epochs/lr/momentum/batch-size/shuffle shared by every phase section.
void apply_train_key(TrainConfig& cfg, const std::string& section,
                     const std::string& key, const std::string& value) {
    if (key == "epochs") {
        cfg.epochs = parse_u64(section, key, value);
    } else if (key == "lr") {
        cfg.lr = parse_double(section, key, value);
    } else if (key == "momentum") {
        cfg.momentum = parse_double(section, key, value);
    } else if (key == "batch-size") {
        cfg.batch_size = parse_u64(section, key, value);
        if (cfg.batch_size == 0) {
            throw UsageError(describe(section, key) + ": must be at least 1");
        }
    } else if (key == "shuffle") {
        cfg.shuffle = parse_bool(section, key, value);
    }
}

TrainConfig default_train_config() {
    TrainConfig cfg;
    cfg.lr = 0.01;
    cfg.momentum = 0.9;
    cfg.batch_size = 1410;
    cfg.shuffle = false;
    return cfg;
}

std::string fmt_g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void dump_train_section(std::string& out, const std::string& name,
                        const TrainConfig& cfg) {
    out += "[" + name + "]\n";
    out += "epochs = " + std::to_string(cfg.epochs) + "\n";
    out += "lr = " + fmt_g12(cfg.lr) + "\n";
    out += "momentum = " + fmt_g12(cfg.momentum) + "\n";
    out += "batch-size = " + std::to_string(cfg.batch_size) + "\n";
    out += std::string("shuffle = ") + (cfg.shuffle ? "true" : "false") + "\n";
}

} // namespace

void ConfigMap::set(const std::string& section, const std::string& key,
                    const std::string& value) {
    for (Entry& e : entries_) {
        if (e.section == section && e.key == key) {
            e.value = value;
            return;
        }
    }
    entries_.push_back({section, key, value});
}

std::optional<std::string> ConfigMap::get(const std::string& section,
                                          const std::string& key) const {
    for (const Entry& e : entries_) {
        if (e.section == section && e.key == key) return e.value;
    }
    return std::nullopt;
}

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']' || stripped.size() < 3) {
                throw UsageError("config line " + std::to_string(line_no) +
                                 ": malformed section header \"" + stripped + "\"");
            }
            section = trim(stripped.substr(1, stripped.size() - 2));
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) +
                             ": expected key = value, got \"" + stripped + "\"");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw UsageError("config line " + std::to_string(line_no) +
                             ": empty key");
        }
        map.set(section, key, value);
    }
    return map;
}

ConfigMap parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

void apply_override(ConfigMap& map, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw UsageError("override \"" + assignment +
                         "\" is not of the form key=value");
    }
    std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    std::string section;
    const std::size_t dot = key.find('.');
    if (dot != std::string::npos) {
        section = key.substr(0, dot);
        key = key.substr(dot + 1);
    }
    if (key.empty()) throw UsageError("override \"" + assignment + "\": empty key");
    map.set(section, key, value);
}

const std::vector<std::string>& top_level_keys() {
    static const std::vector<std::string> keys = {
        "mode",           "arch",        "cuts",
        "train-images",   "train-labels", "test-images",
        "test-labels",    "num-classes", "repetitions",
        "seeds",          "master-seed", "out-dir",
        "train-fraction", "shared-sil",  "boundary-capture",
        "include-eval-macs", "checkpoints", "manifest", "jobs",
    };
    return keys;
}

const std::vector<std::string>& section_keys() {
    static const std::vector<std::string> keys = {
        "epochs", "lr", "momentum", "batch-size", "shuffle", "kappa",
    };
    return keys;
}

ExperimentConfig build_experiment(const ConfigMap& map) {
    for (const ConfigMap::Entry& e : map.entries()) {
        if (!is_known_section(e.section)) {
            throw UsageError("unknown config section \"" + e.section + "\"");
        }
        const auto& keys = e.section.empty() ? top_level_keys() : section_keys();
        if (std::find(keys.begin(), keys.end(), e.key) == keys.end()) {
            throw UsageError("unknown config key \"" + describe(e.section, e.key) +
                             "\"");
        }
    }

    ExperimentConfig cfg;

    const auto top = [&](const std::string& key) { return map.get("", key); };

    if (const auto v = top("mode")) {
        if (*v == "baseline") {
            cfg.mode = RunMode::Baseline;
        } else if (*v == "pnn") {
            cfg.mode = RunMode::Pnn;
        } else {
            throw UsageError("mode: expected baseline or pnn, got \"" + *v + "\"");
        }
    }

    cfg.spec = arch_from_string(top("arch").value_or("784:80R,60R,60R,60R,47I"));

    cfg.plan.partition.cuts.clear();
    for (std::uint64_t c : parse_u64_list("", "cuts", top("cuts").value_or("2"))) {
        cfg.plan.partition.cuts.push_back(c);
    }
    cfg.plan.partition.validate(cfg.spec);
    const std::size_t parts = cfg.plan.partition.part_count();

    cfg.data.train_images =
        top("train-images").value_or("data/emnist-balanced-train-images-idx3-ubyte.gz");
    cfg.data.train_labels =
        top("train-labels").value_or("data/emnist-balanced-train-labels-idx1-ubyte.gz");
    cfg.data.test_images =
        top("test-images").value_or("data/emnist-balanced-test-images-idx3-ubyte.gz");
    cfg.data.test_labels =
        top("test-labels").value_or("data/emnist-balanced-test-labels-idx1-ubyte.gz");
    cfg.data.num_classes = parse_u64("", "num-classes",
                                     top("num-classes").value_or("47"));
    cfg.data.train_fraction =
        parse_double("", "train-fraction", top("train-fraction").value_or("1"));
    if (cfg.data.train_fraction <= 0.0 || cfg.data.train_fraction > 1.0) {
        throw UsageError("train-fraction: must be in (0, 1]");
    }
    if (const auto v = top("manifest")) cfg.data.manifest = *v;

    if (const auto v = top("seeds")) cfg.seeds = parse_u64_list("", "seeds", *v);
    if (const auto v = top("repetitions")) {
        cfg.repetitions = parse_u64("", "repetitions", *v);
    } else {
        cfg.repetitions = cfg.seeds.empty() ? 1 : cfg.seeds.size();
    }
    cfg.master_seed = parse_u64("", "master-seed", top("master-seed").value_or("0"));
    cfg.shared_sil = parse_bool("", "shared-sil", top("shared-sil").value_or("false"));
    cfg.out_dir = top("out-dir").value_or("runs/default");
    cfg.checkpoints =
        parse_bool("", "checkpoints", top("checkpoints").value_or("true"));
    cfg.jobs = parse_u64("", "jobs", top("jobs").value_or("0"));
    if (const auto v = top("boundary-capture")) {
        if (*v == "after-training") {
            cfg.plan.capture = BoundaryCapture::AfterTraining;
        } else if (*v == "during-last-epoch") {
            cfg.plan.capture = BoundaryCapture::DuringLastEpoch;
        } else {
            throw UsageError("boundary-capture: expected after-training or "
                             "during-last-epoch, got \"" + *v + "\"");
        }
    }
    cfg.plan.include_eval_macs = parse_bool(
        "", "include-eval-macs", top("include-eval-macs").value_or("false"));

    // Phase sections. Every mid-k section must name an existing middle part.
    for (const ConfigMap::Entry& e : map.entries()) {
        if (is_mid_section(e.section)) {
            const std::size_t k = std::stoull(e.section.substr(4));
            if (k + 1 >= parts) {
                throw UsageError("section [" + e.section + "] names a middle "
                                 "partition, but the cut list makes only " +
                                 std::to_string(parts) + " partitions");
            }
        }
    }

    cfg.plan.phases.assign(parts, PhaseConfig{});
    for (std::size_t k = 0; k < parts; ++k) {
        PhaseConfig& phase = cfg.plan.phases[k];
        phase.train = default_train_config();
        const bool final_part = k + 1 == parts;
        const std::string section = phase_name(k, parts);
        phase.train.epochs = final_part ? 160 : 5;
        phase.kappa = 10.0;
        for (const std::string& key : section_keys()) {
            const auto v = map.get(section, key);
            if (!v) continue;
            if (key == "kappa") {
                if (final_part) {
                    throw UsageError("right.kappa: the final partition trains "
                                     "on true labels and takes no target scale");
                }
                phase.kappa = parse_double(section, key, *v);
            } else {
                apply_train_key(phase.train, section, key, *v);
            }
        }
    }

    if (map.get("recovery", "kappa")) {
        throw UsageError("recovery.kappa: recovery trains on true labels and "
                         "takes no target scale");
    }
    TrainConfig recovery = default_train_config();
    recovery.epochs = 0;
    bool recovery_keys = false;
    for (const std::string& key : section_keys()) {
        if (const auto v = map.get("recovery", key)) {
            recovery_keys = true;
            apply_train_key(recovery, "recovery", key, *v);
        }
    }
    if (recovery.epochs > 0) {
        cfg.plan.recovery = RecoveryConfig{recovery};
    } else if (recovery_keys && !map.get("recovery", "epochs")) {
        throw UsageError("recovery options are set but recovery.epochs is 0; "
                         "set recovery.epochs to enable recovery");
    }

    if (map.get("baseline", "kappa")) {
        throw UsageError("baseline.kappa: conventional training takes no "
                         "target scale");
    }
    cfg.baseline = default_train_config();
    cfg.baseline.epochs = 40;
    for (const std::string& key : section_keys()) {
        if (const auto v = map.get("baseline", key)) {
            apply_train_key(cfg.baseline, "baseline", key, *v);
        }
    }

    cfg.spec.validate();
    if (cfg.mode == RunMode::Pnn) {
        cfg.plan.validate(cfg.spec);
    } else {
        cfg.baseline.validate();
    }
    return cfg;
}

std::string dump_config(const ExperimentConfig& cfg) {
    std::string out;
    out += std::string("mode = ") +
           (cfg.mode == RunMode::Baseline ? "baseline" : "pnn") + "\n";
    out += "arch = " + arch_to_string(cfg.spec) + "\n";
    out += "cuts = ";
    for (std::size_t i = 0; i < cfg.plan.partition.cuts.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(cfg.plan.partition.cuts[i]);
    }
    out += "\n";
    out += "train-images = " + cfg.data.train_images.string() + "\n";
    out += "train-labels = " + cfg.data.train_labels.string() + "\n";
    out += "test-images = " + cfg.data.test_images.string() + "\n";
    out += "test-labels = " + cfg.data.test_labels.string() + "\n";
    if (cfg.data.manifest) {
        out += "manifest = " + cfg.data.manifest->string() + "\n";
    }
    out += "num-classes = " + std::to_string(cfg.data.num_classes) + "\n";
    out += "train-fraction = " + fmt_g12(cfg.data.train_fraction) + "\n";
    out += "repetitions = " + std::to_string(cfg.repetitions) + "\n";
    if (!cfg.seeds.empty()) {
        out += "seeds = ";
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
            if (i) out += ", ";
            out += std::to_string(cfg.seeds[i]);
        }
        out += "\n";
    }
    out += "master-seed = " + std::to_string(cfg.master_seed) + "\n";
    out += std::string("shared-sil = ") + (cfg.shared_sil ? "true" : "false") + "\n";
    out += std::string("boundary-capture = ") +
           (cfg.plan.capture == BoundaryCapture::DuringLastEpoch
                ? "during-last-epoch"
                : "after-training") +
           "\n";
    out += std::string("include-eval-macs = ") +
           (cfg.plan.include_eval_macs ? "true" : "false") + "\n";
    out += std::string("checkpoints = ") + (cfg.checkpoints ? "true" : "false") +
           "\n";
    out += "jobs = " + std::to_string(cfg.jobs) + "\n";
    out += "out-dir = " + cfg.out_dir.string() + "\n";

    const std::size_t parts = cfg.plan.phases.size();
    for (std::size_t k = 0; k < parts; ++k) {
        out += "\n";
        dump_train_section(out, phase_name(k, parts), cfg.plan.phases[k].train);
        if (k + 1 < parts) {
            out += "kappa = " + fmt_g12(cfg.plan.phases[k].kappa) + "\n";
        }
    }
    if (cfg.plan.recovery) {
        out += "\n";
        dump_train_section(out, "recovery", cfg.plan.recovery->train);
    }
    out += "\n";
    dump_train_section(out, "baseline", cfg.baseline);
    return out;
}

} // namespace pnn
