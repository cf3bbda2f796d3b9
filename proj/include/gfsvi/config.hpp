#pragma once

#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "gfsvi/model.hpp"

namespace gfsvi {

// Run configuration shared by all CLI commands. Parsing is strict: unknown
// keys anywhere are rejected so hyperparameter typos cannot pass silently.
struct RunConfig {
    struct Paths {
        std::string dpm;
        std::string prior_ls;
        std::string prior_lf;
        std::string footprint;   // optional
        std::string truth_csv;   // optional
        std::string out_dir;
    } paths;

    HyperParams hyper;
    WeightSet weights;          // initial (infer) or generating (simulate) weights
    bool weights_given = false;

    struct Flags {
        bool assume_normalized = false;
        bool prune = false;
        bool deterministic = false;
        bool truncated_density = true;
    } flags;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw config_error("config: unknown key '" + it.key() + "' in " + where);
        }
    }
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    detail::reject_unknown_keys(j, {"paths", "hyper", "weights", "flags"}, "top level");

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        if (!p.is_object()) throw config_error("config: 'paths' must be an object");
        detail::reject_unknown_keys(
            p, {"dpm", "prior_ls", "prior_lf", "footprint", "truth_csv", "out_dir"}, "paths");
        detail::read_field(p, "dpm", cfg.paths.dpm);
        detail::read_field(p, "prior_ls", cfg.paths.prior_ls);
        detail::read_field(p, "prior_lf", cfg.paths.prior_lf);
        detail::read_field(p, "footprint", cfg.paths.footprint);
        detail::read_field(p, "truth_csv", cfg.paths.truth_csv);
        detail::read_field(p, "out_dir", cfg.paths.out_dir);
    }

    if (j.contains("hyper")) {
        const auto& hJ = j.at("hyper");
        if (!hJ.is_object()) throw config_error("config: 'hyper' must be an object");
        detail::reject_unknown_keys(hJ,
                                    {"sigma_xor", "delta", "rho", "batch_size", "e_sweeps_max",
                                     "e_tol", "max_epochs", "seed"},
                                    "hyper");
        detail::read_field(hJ, "sigma_xor", cfg.hyper.sigma_xor);
        detail::read_field(hJ, "delta", cfg.hyper.delta);
        detail::read_field(hJ, "rho", cfg.hyper.rho);
        detail::read_field(hJ, "batch_size", cfg.hyper.batch_size);
        detail::read_field(hJ, "e_sweeps_max", cfg.hyper.e_sweeps_max);
        detail::read_field(hJ, "e_tol", cfg.hyper.e_tol);
        detail::read_field(hJ, "max_epochs", cfg.hyper.max_epochs);
        detail::read_field(hJ, "seed", cfg.hyper.seed);
        cfg.hyper.validate();
    }

    if (j.contains("weights")) {
        const auto& wJ = j.at("weights");
        if (!wJ.is_object()) throw config_error("config: 'weights' must be an object");
        std::set<std::string> allowed;
        for (int i = 0; i < WeightSet::kCount; ++i) allowed.insert(WeightSet::field_name(i));
        detail::reject_unknown_keys(wJ, allowed, "weights");
        for (int i = 0; i < WeightSet::kCount; ++i) {
            double v = cfg.weights.get(i);
            detail::read_field(wJ, WeightSet::field_name(i), v);
            cfg.weights.set(i, v);
        }
        cfg.weights_given = true;
        try {
            cfg.weights.validate();
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("config: ") + e.what());
        }
    }

    if (j.contains("flags")) {
        const auto& f = j.at("flags");
        if (!f.is_object()) throw config_error("config: 'flags' must be an object");
        detail::reject_unknown_keys(
            f, {"assume_normalized", "prune", "deterministic", "truncated_density"}, "flags");
        detail::read_field(f, "assume_normalized", cfg.flags.assume_normalized);
        detail::read_field(f, "prune", cfg.flags.prune);
        detail::read_field(f, "deterministic", cfg.flags.deterministic);
        detail::read_field(f, "truncated_density", cfg.flags.truncated_density);
    }

    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config: top level must be a JSON object");
    return parse_config(j);
}

inline void require_path(const std::string& value, const char* key) {
    if (value.empty()) {
        throw config_error(std::string("config: missing required path '") + key + "'");
    }
}

inline nlohmann::ordered_json weights_to_json(const WeightSet& w) {
    nlohmann::ordered_json j;
    for (int i = 0; i < WeightSet::kCount; ++i) j[WeightSet::field_name(i)] = w.get(i);
    return j;
}

inline WeightSet weights_from_json(const nlohmann::json& j) {
    WeightSet w;
    std::set<std::string> allowed;
    for (int i = 0; i < WeightSet::kCount; ++i) allowed.insert(WeightSet::field_name(i));
    detail::reject_unknown_keys(j, allowed, "weights");
    for (int i = 0; i < WeightSet::kCount; ++i) {
        double v = w.get(i);
        detail::read_field(j, WeightSet::field_name(i), v);
        w.set(i, v);
    }
    return w;
}

}  // namespace gfsvi
