#ifndef PNN_CONFIG_HPP
#define PNN_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pnn/experiment.hpp"

namespace pnn {

/// Flat key-value configuration with named sections, last write wins.
/// Section "" holds top-level keys.
class ConfigMap {
public:
    void set(const std::string& section, const std::string& key,
             const std::string& value);
    std::optional<std::string> get(const std::string& section,
                                   const std::string& key) const;

    struct Entry {
        std::string section;
        std::string key;
        std::string value;
    };
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
};

/// Parses "key = value" lines with [section] headers. Lines whose first
/// non-blank character is '#' are comments. Throws UsageError with a line
/// number on malformed input.
ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::filesystem::path& path);

/// Applies one "key=value" or "section.key=value" override.
void apply_override(ConfigMap& map, const std::string& assignment);

/// Builds a validated experiment configuration, filling defaults for
/// everything absent. Rejects unknown sections and keys.
ExperimentConfig build_experiment(const ConfigMap& map);

/// Canonical text form of a fully-resolved configuration; parses back to
/// an equivalent configuration and is stable byte-for-byte.
std::string dump_config(const ExperimentConfig& cfg);

/// Key names accepted at top level and inside training-phase sections;
/// the fixed section names are "left", "mid-<k>", "right", "recovery",
/// "baseline".
const std::vector<std::string>& top_level_keys();
const std::vector<std::string>& section_keys();

} // namespace pnn

#endif
