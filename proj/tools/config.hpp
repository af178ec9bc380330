#pragma once

// JSON run configuration. One document per run; keys outside the common
// set plus the subcommand's own parameters are rejected.
//
//   {
//     "spec":      {"alphabet_size": 2, "forbidden": [[1, 2]]},
//     "measure":   {"kind": "uniform"} | {"kind": "markov", "transition": [[..]]}
//                  | {"kind": "constant", "letter": 1},
//     "energies":  {"points": 50, "k_min": 0.3, "k_max": 2.8416} | {"k": [..]} | {"e_tilde": [..]},
//     "n": 5000, "samples": 100, "reference_samples": 0,
//     "seed": 1, "threads": 1,
//     "tolerances": {"decay_floor": 1e-10},
//     "out": "results", "strict": false,
//     ...subcommand parameters
//   }

#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphshift/lab.hpp"

namespace graphshift::cli {

using json = nlohmann::json;

inline const std::set<std::string>& common_keys() {
    static const std::set<std::string> keys{"spec",    "measure", "energies", "n",          "samples",
                                            "seed",    "threads", "tolerances", "reference_samples",
                                            "out",     "strict"};
    return keys;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::invalid_input, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_input, path + ": " + e.what());
    }
}

template <class T>
T get_or(const json& doc, const std::string& key, T fallback) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_input, "config key '" + key + "': " + e.what());
    }
}

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) fail(ErrorKind::invalid_input, where + " must be a JSON object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) fail(ErrorKind::invalid_input, "unknown key '" + key + "' in " + where);
}

inline SftSpec parse_spec(const json& j) {
    reject_unknown(j, {"alphabet_size", "forbidden"}, "spec");
    std::set<std::pair<Letter, Letter>> forbidden;
    for (const auto& p : get_or(j, "forbidden", json::array())) {
        if (!p.is_array() || p.size() != 2) fail(ErrorKind::invalid_input, "spec.forbidden entries are [i, j] pairs");
        forbidden.emplace(p[0].get<Letter>(), p[1].get<Letter>());
    }
    if (!j.contains("alphabet_size")) fail(ErrorKind::invalid_input, "spec.alphabet_size is required");
    return SftSpec(get_or(j, "alphabet_size", 0), std::move(forbidden));
}

inline json spec_to_json(const SftSpec& spec) {
    json f = json::array();
    for (auto [i, j] : spec.forbidden()) f.push_back({i, j});
    return {{"alphabet_size", spec.alphabet_size()}, {"forbidden", f}};
}

inline lab::Source parse_measure(const json& j, const SftSpec& spec) {
    const auto kind = get_or<std::string>(j, "kind", "uniform");
    if (kind == "uniform") {
        reject_unknown(j, {"kind"}, "measure");
        return from_spec_uniform(spec);
    }
    if (kind == "markov") {
        reject_unknown(j, {"kind", "transition"}, "measure");
        return MarkovMeasure(spec, get_or<Matrix>(j, "transition", {}));
    }
    if (kind == "constant") {
        reject_unknown(j, {"kind", "letter"}, "measure");
        return ConstantSource{get_or<Letter>(j, "letter", 1)};
    }
    fail(ErrorKind::invalid_input, "measure.kind must be uniform, markov or constant");
}

inline std::vector<EnergyTriple> parse_energies(const json& j) {
    reject_unknown(j, {"points", "k_min", "k_max", "k", "e_tilde", "margin"}, "energies");
    const double margin = get_or(j, "margin", EnergyTriple::kDefaultMargin);
    std::vector<EnergyTriple> out;
    if (j.contains("k")) {
        for (double k : get_or<std::vector<double>>(j, "k", {})) out.push_back(EnergyTriple::from_k(k, margin));
    } else if (j.contains("e_tilde")) {
        for (double e : get_or<std::vector<double>>(j, "e_tilde", {}))
            out.push_back(EnergyTriple::from_e_tilde(e, margin));
    } else {
        out = lab::k_grid(get_or<std::size_t>(j, "points", 50), get_or(j, "k_min", 0.3),
                          get_or(j, "k_max", std::numbers::pi - 0.3), margin);
    }
    for (const auto& en : out) en.require_regular();
    return out;
}

struct RunConfig {
    lab::ExperimentConfig experiment;
    json document;  // the full merged document, echoed into the output JSON
    std::string path;

    template <class T>
    T param(const std::string& key, T fallback) const { return get_or(document, key, fallback); }
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

// `extra` lists the subcommand's own keys. Flags override file values.
// Without `sampled` no measure is built unless one is given (spec-only commands).
inline RunConfig load_config(json doc, const std::set<std::string>& extra, const Overrides& ov, std::string path = {},
                             bool sampled = true) {
    if (doc.is_null()) doc = json::object();
    auto allowed = common_keys();
    allowed.insert(extra.begin(), extra.end());
    reject_unknown(doc, allowed, "config");
    if (ov.seed) doc["seed"] = *ov.seed;
    if (ov.threads) doc["threads"] = *ov.threads;

    const SftSpec spec = doc.contains("spec") ? parse_spec(doc["spec"]) : SftSpec::full_shift(2);
    const bool with_measure = sampled || doc.contains("measure");
    lab::ExperimentConfig cfg{spec, with_measure ? parse_measure(get_or(doc, "measure", json::object()), spec)
                                                 : lab::Source{ConstantSource{1}}};
    cfg.energies = parse_energies(get_or(doc, "energies", json::object()));
    cfg.n = get_or(doc, "n", 1000L);
    cfg.samples = get_or(doc, "samples", 100L);
    cfg.reference_samples = get_or(doc, "reference_samples", 0L);
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
    cfg.threads = get_or(doc, "threads", 1U);
    const json tolerances = get_or(doc, "tolerances", json::object());
    for (const auto& [name, value] : tolerances.items()) {
        if (!value.is_number()) fail(ErrorKind::invalid_input, "tolerances." + name + " must be a number");
        cfg.tolerances[name] = value.get<double>();
    }
    if (with_measure) cfg.validate();
    doc["seed"] = cfg.seed;
    return {std::move(cfg), std::move(doc), std::move(path)};
}

}  // namespace graphshift::cli
