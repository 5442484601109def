#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iml/geometry.hpp"

namespace iml {

// One value of the configuration subset: string, boolean, number, or a
// numeric array.
struct ConfigValue {
    enum class Kind { string, boolean, number, array };
    Kind kind = Kind::number;
    std::string str;
    bool flag = false;
    double num = 0.0;
    std::vector<double> arr;
};

// Flat document: "section.key" -> value.  The map ordering (lexicographic)
// is also the canonical serialization order, so the hash does not depend on
// the layout of the file.
using ConfigDoc = std::map<std::string, ConfigValue>;

// Parser for the configuration subset: [section] headers, key = value lines
// with "strings", booleans, numbers and [numeric, arrays], # comments.
// Malformed input throws input_error with the offending line number.
ConfigDoc parse_config_text(const std::string& text);
ConfigDoc parse_config_file(const std::string& path);

// Canonical line-per-key rendering of the resolved document; its FNV-1a
// digest identifies the run and lands in every output filename.
std::string canonical_config(const ConfigDoc& doc);
std::uint64_t fnv1a64(const std::string& bytes);
std::string config_hash12(const ConfigDoc& doc);

// Typed accessors; `require_*` throw input_error naming the missing key.
bool has_key(const ConfigDoc& doc, const std::string& key);
double require_num(const ConfigDoc& doc, const std::string& key);
double num_or(const ConfigDoc& doc, const std::string& key, double fallback);
std::string require_str(const ConfigDoc& doc, const std::string& key);
std::vector<double> require_arr(const ConfigDoc& doc, const std::string& key);
std::vector<double> arr_or(const ConfigDoc& doc, const std::string& key,
                           const std::vector<double>& fallback);

// The [domain] block: kind, d, and the kind-specific keys (a/b for boxes and
// intervals, axis/offset for half-spaces, center/radius for disks).
Domain domain_from_config(const ConfigDoc& doc);

// Shared run parameters with structural validation (positivity, dimensions).
// The admissibility gates are deliberately not checked here: a well-formed
// config with an inadmissible (d, p) pair is a different failure class.
struct ExperimentConfig {
    ConfigDoc doc;            // resolved document (seed override applied)
    std::string hash12;       // digest of the resolved document
    Domain domain;
    int p = 2;
    double t = 1.0;
    double dt = 1e-3;
    double eps = 0.05;
    double delta = 0.1;
    std::int64_t samples = 1000;
    std::uint64_t seed = 0;
    bool seed_from_env = false;
    Vec x0;
    double grid_h = 0.0;
    double grid_margin = 0.0;
    std::vector<double> t_list;
    std::vector<double> eps_list;
    std::vector<double> delta_list;
};

// Loads and validates the file; `env_seed` (the IML_SEED override) replaces
// run.seed in the resolved document before hashing, so overridden runs get
// their own artifact names.
ExperimentConfig load_experiment(const std::string& path, const std::string& env_seed);

}  // namespace iml
