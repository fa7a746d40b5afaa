#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "miai/common.hpp"
#include "miai/decision_tree.hpp"
#include "miai/ensemble.hpp"
#include "miai/mlp.hpp"

namespace miai {

// One attack entry from the experiment config. `name` keys the output files;
// `kind` picks the strategy (defaults to the name).
struct AttackSpec {
    std::string name;
    std::string kind;                                // naive | randga | fjrmia | csmia | lomia
    double randga_p_positive = 0.5;                  // randga over binary domains
    std::vector<std::string> unknown_attributes;     // csmia: enumerate these (partial knowledge)
    std::vector<std::string> withheld_at_inference;  // lomia: blank these when inferring
    int forest_trees = 32;                           // lomia attack-model size
};

struct ExperimentConfig {
    std::string name = "experiment";
    uint64_t seed = 1;
    int jobs = 1;
    std::string out_dir = "out";

    std::string csv_path;
    std::string schema_path;
    double split_fraction = 0.75;
    bool stratified = false;

    std::string target_kind = "decision_tree";  // decision_tree | mlp | ensemble
    std::string target_load;                    // load a saved model instead of training
    bool exposes_confidence = true;
    TreeConfig tree;
    MlpConfig mlp;
    ForestConfig forest;

    std::vector<AttackSpec> attacks;

    std::string positive_value;  // positive sensitive token; default: first domain value
    std::vector<std::string> grouping_attributes;
    bool distributional = false;
    bool per_class = true;
};

namespace detail {

struct IniSection {
    std::string header;
    std::vector<std::pair<std::string, std::string>> entries;
    int line = 0;
};

inline std::vector<IniSection> parse_ini(std::istream& in, const std::string& origin) {
    std::vector<IniSection> sections;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string s = trim(line);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ParseError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            sections.push_back({trim(s.substr(1, s.size() - 2)), {}, lineno});
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (sections.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) + ": key before any section");
        sections.back().entries.emplace_back(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    return sections;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ParseError("key '" + key + "': expected a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw ParseError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline int64_t parse_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        int64_t d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw ParseError("key '" + key + "': expected an integer, got '" + v + "'");
    }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& in,
                                                const std::string& origin = "<config>") {
    ExperimentConfig cfg;
    for (const auto& section : detail::parse_ini(in, origin)) {
        if (section.header == "experiment") {
            for (const auto& [k, v] : section.entries) {
                if (k == "name") cfg.name = v;
                else if (k == "seed") cfg.seed = static_cast<uint64_t>(detail::parse_int(v, k));
                else if (k == "jobs") cfg.jobs = static_cast<int>(detail::parse_int(v, k));
                else if (k == "out") cfg.out_dir = v;
                else throw ParseError(origin + ": unknown [experiment] key '" + k + "'");
            }
        } else if (section.header == "data") {
            for (const auto& [k, v] : section.entries) {
                if (k == "csv") cfg.csv_path = v;
                else if (k == "schema") cfg.schema_path = v;
                else if (k == "split_fraction") cfg.split_fraction = detail::parse_double(v, k);
                else if (k == "stratified") cfg.stratified = detail::parse_bool(v, k);
                else throw ParseError(origin + ": unknown [data] key '" + k + "'");
            }
        } else if (section.header == "target") {
            for (const auto& [k, v] : section.entries) {
                if (k == "kind") cfg.target_kind = v;
                else if (k == "load") cfg.target_load = v;
                else if (k == "exposes_confidence") cfg.exposes_confidence = detail::parse_bool(v, k);
                else if (k == "max_depth") cfg.tree.max_depth = static_cast<int>(detail::parse_int(v, k));
                else if (k == "min_leaf") cfg.tree.min_leaf = static_cast<int>(detail::parse_int(v, k));
                else if (k == "prune") cfg.tree.prune = detail::parse_bool(v, k);
                else if (k == "trees") cfg.forest.trees = static_cast<int>(detail::parse_int(v, k));
                else if (k == "hidden") {
                    cfg.mlp.hidden.clear();
                    for (const auto& h : split_list(v, ','))
                        cfg.mlp.hidden.push_back(static_cast<int>(detail::parse_int(h, k)));
                } else if (k == "epochs") cfg.mlp.epochs = static_cast<int>(detail::parse_int(v, k));
                else if (k == "batch") cfg.mlp.batch = static_cast<int>(detail::parse_int(v, k));
                else if (k == "learning_rate") cfg.mlp.learning_rate = detail::parse_double(v, k);
                else throw ParseError(origin + ": unknown [target] key '" + k + "'");
            }
        } else if (section.header.rfind("attack", 0) == 0) {
            auto parts = split_list(section.header, ' ');
            if (parts.size() != 2)
                throw ParseError(origin + ": attack sections are written as [attack <name>]");
            AttackSpec spec;
            spec.name = parts[1];
            spec.kind = parts[1];
            for (const auto& [k, v] : section.entries) {
                if (k == "kind") spec.kind = v;
                else if (k == "p_positive") spec.randga_p_positive = detail::parse_double(v, k);
                else if (k == "unknown") spec.unknown_attributes = split_list(v, ',');
                else if (k == "withhold") spec.withheld_at_inference = split_list(v, ',');
                else if (k == "trees") spec.forest_trees = static_cast<int>(detail::parse_int(v, k));
                else throw ParseError(origin + ": unknown [attack] key '" + k + "'");
            }
            cfg.attacks.push_back(std::move(spec));
        } else if (section.header == "analysis") {
            for (const auto& [k, v] : section.entries) {
                if (k == "positive") cfg.positive_value = v;
                else if (k == "grouping") cfg.grouping_attributes = split_list(v, ',');
                else if (k == "distributional") cfg.distributional = detail::parse_bool(v, k);
                else if (k == "per_class") cfg.per_class = detail::parse_bool(v, k);
                else throw ParseError(origin + ": unknown [analysis] key '" + k + "'");
            }
        } else {
            throw ParseError(origin + ": unknown section [" + section.header + "]");
        }
    }
    if (cfg.csv_path.empty()) throw ValidationError(origin + ": [data] csv is required");
    if (cfg.schema_path.empty()) throw ValidationError(origin + ": [data] schema is required");
    if (cfg.attacks.empty()) throw ValidationError(origin + ": at least one [attack] section is required");
    for (size_t i = 0; i < cfg.attacks.size(); ++i)
        for (size_t j = i + 1; j < cfg.attacks.size(); ++j)
            if (cfg.attacks[i].name == cfg.attacks[j].name)
                throw ValidationError(origin + ": duplicate attack name '" + cfg.attacks[i].name + "'");
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    return parse_experiment_config(in, path);
}

// Capability validation happens before any training or querying: an attack
// that cannot run with the configured facade fails the whole config.
inline void validate_config(const ExperimentConfig& cfg) {
    if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0))
        throw ValidationError("split_fraction must be in (0,1)");
    if (cfg.target_kind != "decision_tree" && cfg.target_kind != "mlp" && cfg.target_kind != "ensemble")
        throw ValidationError("unknown target kind '" + cfg.target_kind + "'");
    if (cfg.jobs < 1) throw ValidationError("jobs must be >= 1");
    for (const auto& a : cfg.attacks) {
        if (a.kind != "naive" && a.kind != "randga" && a.kind != "fjrmia" && a.kind != "csmia" &&
            a.kind != "lomia")
            throw ValidationError("unknown attack kind '" + a.kind + "'");
        if (a.kind == "csmia" && !cfg.exposes_confidence)
            throw ValidationError("attack '" + a.name +
                                  "': CSMIA needs confidence scores but the target is label-only");
        if (a.kind == "csmia" && a.unknown_attributes.size() > 2)
            throw ValidationError("attack '" + a.name + "': at most two unknown attributes");
        if (!a.unknown_attributes.empty() && a.kind != "csmia")
            throw ValidationError("attack '" + a.name + "': 'unknown' applies to CSMIA only");
        if (!a.withheld_at_inference.empty() && a.kind != "lomia")
            throw ValidationError("attack '" + a.name + "': 'withhold' applies to LOMIA only");
        if (a.kind == "randga" && (a.randga_p_positive < 0 || a.randga_p_positive > 1))
            throw ValidationError("attack '" + a.name + "': p_positive must be in [0,1]");
    }
}

}  // namespace miai
