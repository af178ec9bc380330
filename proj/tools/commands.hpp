#pragma once

// One function per subcommand: config in, (CSV table, summary JSON, pass flag) out.

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "config.hpp"
#include "output.hpp"

namespace graphshift::cli {

struct CommandResult {
    CsvTable table;
    json summary;
    bool pass = true;
};

struct Command {
    std::set<std::string> keys;  // subcommand-specific config keys
    std::function<CommandResult(const RunConfig&)> run;
    bool sampled = true;  // false: reads the spec only
};

inline CommandResult cmd_sample(const RunConfig& rc) {
    const auto& cfg = rc.experiment;
    const long count = rc.param("count", 1L);
    const long left = rc.param("n_left", 10L);
    const long right = rc.param("n_right", 10L);
    CommandResult r{CsvTable({"sample", "index", "letter"}), {}, true};
    bool admissible = true;
    for (long s = 0; s < count; ++s) {
        const Word w = lab::with_source(cfg.source, [&](const auto& src) {
            return src.sample(derive_seed(cfg.seed, static_cast<std::uint64_t>(s)), left, right);
        });
        admissible = admissible && is_admissible(w, cfg.spec);
        for (long i = w.first(); i <= w.last(); ++i) r.table.add(s, i, w[i]);
    }
    r.summary = {{"count", count}, {"n_left", left}, {"n_right", right}, {"admissible", admissible}};
    r.pass = admissible;
    return r;
}

inline CsvTable scan_csv(const lab::LyapunovTable& table) {
    CsvTable csv({"E", "k", "e_tilde", "L", "stderr", "n", "samples"});
    for (const auto& row : table) csv.add(row.E, row.k, row.e_tilde, row.L, row.stderr_, row.n, row.samples);
    return csv;
}

inline CommandResult cmd_scan(const RunConfig& rc) {
    const auto table = lab::scan_lyapunov(rc.experiment);
    const double sigmas = rc.param("sigmas", 5.0);
    const double min_fraction = rc.param("min_positive_fraction", 0.9);
    const auto pos = lab::positivity(table, sigmas);
    const auto zeros = lab::find_zero_candidates(table, rc.param("threshold", 0.01));
    CommandResult r{scan_csv(table), {}, false};
    r.summary = {{"rows", table.size()},
                 {"positive", pos.positive},
                 {"sigmas", sigmas},
                 {"failures_isolated", pos.failures_isolated},
                 {"zero_candidates", zeros}};
    r.pass = pos.failures_isolated &&
             static_cast<double>(pos.positive) >= min_fraction * static_cast<double>(pos.total);
    return r;
}

inline CommandResult cmd_ldt(const RunConfig& rc) {
    const auto& cfg = rc.experiment;
    std::vector<long> n_list = rc.param<std::vector<long>>("n_list", {50, 100, 200, 300, 400, 500, 600, 700, 800});
    const double fraction = rc.param("epsilon_fraction", 0.2);
    CommandResult r{CsvTable({"k", "E", "n", "tail", "binomial_se", "exceed", "epsilon", "reference_L"}),
                    json::array(), true};
    for (const auto& en : cfg.energies) {
        const auto ref = lab::reference_lyapunov(cfg, en);
        const double eps = rc.document.contains("epsilon") ? rc.param("epsilon", 0.0) : fraction * ref.estimate;
        const auto res = lab::ldt_tail(cfg, en, eps, n_list, ref);
        for (const auto& row : res.rows)
            r.table.add(en.k(), en.E(), row.n, row.tail, row.binomial_se, row.exceed, eps, res.reference_L);
        const bool decays = res.fit_ok && res.slope < 0.0 && std::abs(res.slope) > 2.0 * res.slope_stderr;
        const bool monotone = lab::tails_monotone(res, 3.0);
        r.summary.push_back({{"k", en.k()},
                             {"reference_L", res.reference_L},
                             {"reference_stderr", res.reference_stderr},
                             {"epsilon", eps},
                             {"slope", res.slope},
                             {"slope_stderr", res.slope_stderr},
                             {"fit_points", res.fit_points},
                             {"decays", decays},
                             {"monotone", monotone}});
        r.pass = r.pass && decays && monotone;
    }
    return r;
}

inline CommandResult cmd_avalanche(const RunConfig& rc) {
    const auto& cfg = rc.experiment;
    const auto family = rc.param<std::string>("family", "cocycle");
    const auto blocks = rc.param<std::size_t>("blocks", 10);
    const long draws = rc.param("draws", 1L);
    const double C = rc.param("C", 10.0);
    const double min_fraction = rc.param("min_precondition_fraction", 0.5);
    CommandResult r{CsvTable({"draw", "n", "lambda", "delta", "bound", "norms_ok", "lambda_exceeds_n",
                              "pair_violations", "max_pair_defect", "holds"}),
                    {}, true};
    long with_pre = 0, violations = 0;
    for (long d = 0; d < draws; ++d) {
        const auto seed = derive_seed(lab::stream_seed(cfg.seed, lab::Stream::avalanche), static_cast<std::uint64_t>(d));
        std::vector<Sl2> mats;
        double lam = 0.0;
        if (family == "diagonal") {
            lam = rc.param("lambda", std::exp(5.0));
            mats = lab::avalanche_diagonal_family(lam, blocks);
        } else if (family == "rotated") {
            lam = rc.param("lambda", std::exp(5.0));
            mats = lab::avalanche_rotated_family(lam, blocks, rc.param("max_angle", 0.1), seed);
            // the rotation does not change the norm; lambda stays the smallest ||A_j||
        } else if (family == "cocycle") {
            if (cfg.energies.empty()) fail(ErrorKind::invalid_input, "avalanche: no energy");
            mats = lab::avalanche_cocycle_family(cfg, cfg.energies.front(), rc.param("block_length", 50L), blocks, seed);
            lam = mats.front().norm();
            for (const auto& m : mats) lam = std::min(lam, m.norm());
        } else {
            fail(ErrorKind::invalid_input, "avalanche.family must be diagonal, rotated or cocycle");
        }
        const auto rep = lab::avalanche_verify(mats, lam, C);
        r.table.add(d, rep.n, rep.lambda, rep.delta, rep.bound, rep.norms_ok, rep.lambda_exceeds_n,
                    rep.pair_violations, rep.max_pair_defect, rep.holds());
        if (rep.preconditions_hold()) {
            ++with_pre;
            if (!rep.holds()) ++violations;
        }
    }
    const double fraction = static_cast<double>(with_pre) / static_cast<double>(draws);
    r.summary = {{"family", family},
                 {"draws", draws},
                 {"preconditions_hold", with_pre},
                 {"bound_violations", violations},
                 {"C", C}};
    r.pass = violations == 0 && fraction >= min_fraction;
    return r;
}

inline CommandResult cmd_doubling(const RunConfig& rc) {
    const auto& cfg = rc.experiment;
    const auto n_list = rc.param<std::vector<long>>("n_list", {25, 50, 100, 200});
    const long from = rc.param("from", n_list.front());
    const long to = rc.param("to", n_list.back());
    CommandResult r{CsvTable({"k", "E", "n", "L_n", "L_2n", "combination", "stderr", "reference_L"}), json::array(),
                    true};
    for (const auto& en : cfg.energies) {
        const auto res = lab::lyapunov_doubling(cfg, en, n_list);
        for (const auto& row : res.rows)
            r.table.add(en.k(), en.E(), row.n, row.L_n, row.L_2n, row.combination, row.stderr_, res.reference_L);
        const bool dec = lab::doubling_decreases(res, from, to);
        r.summary.push_back({{"k", en.k()},
                             {"reference_L", res.reference_L},
                             {"reference_stderr", res.reference_stderr},
                             {"reference_n", res.reference_n},
                             {"decreases", dec}});
        r.pass = r.pass && dec;
    }
    return r;
}

inline CommandResult cmd_holder(const RunConfig& rc) {
    const auto table = lab::scan_lyapunov(rc.experiment);
    const auto fit = lab::holder_fit(table);
    CommandResult r{scan_csv(table), {}, false};
    r.summary = {{"beta", fit.beta},
                 {"C", fit.C},
                 {"r_squared", fit.r_squared},
                 {"significant_pairs", fit.significant_pairs},
                 {"fraction_within_bound", fit.fraction_within_bound},
                 {"modulus_beta", fit.modulus_beta},
                 {"modulus_r_squared", fit.modulus_r_squared}};
    r.pass = fit.beta > 0.0 && fit.r_squared > rc.param("min_r_squared", 0.5) &&
             fit.fraction_within_bound >= 0.95;
    return r;
}

inline CommandResult cmd_localize(const RunConfig& rc) {
    const auto& cfg = rc.experiment;
    const long N = rc.param("N", 2000L);
    const auto window = rc.param<std::vector<double>>("window", {0.3, 1.0});
    if (window.size() != 2) fail(ErrorKind::invalid_input, "localize.window must be [lo, hi]");
    const auto loc = lab::localization_experiment(cfg, N, window[0], window[1]);
    std::vector<double> matched;
    if (rc.param("matched", true) && !loc.records.empty())
        matched = lab::matched_lyapunov(cfg, loc, rc.param<std::size_t>("matched_points", 8),
                                        rc.param("matched_n", 5000L), rc.param("matched_samples", 100L));
    const auto s = lab::summarize(loc, matched);
    CommandResult r{CsvTable({"sample", "e_tilde", "E", "decay_rate", "ipr", "center", "clamped", "matched_L"}), {},
                    false};
    for (std::size_t i = 0; i < loc.records.size(); ++i) {
        const auto& rec = loc.records[i];
        r.table.add(rec.sample, rec.e_tilde, rec.E, rec.decay_rate, rec.ipr, rec.center, rec.clamped,
                    matched.empty() ? 0.0 : matched[i]);
    }
    r.summary = {{"N", N},
                 {"window", window},
                 {"states", s.states},
                 {"median_decay", s.median_decay},
                 {"median_ipr", s.median_ipr},
                 {"clamp_fraction", s.clamp_fraction},
                 {"median_matched_L", s.median_matched_L},
                 {"relative_gap", s.relative_gap}};
    const double min_ipr = rc.param("min_ipr_factor", 10.0) / static_cast<double>(N);
    r.pass = s.states > 0 && !matched.empty() && s.relative_gap <= rc.param("max_gap", 0.3) && s.median_ipr > min_ipr;
    return r;
}

inline CommandResult cmd_green(const RunConfig& rc) {
    const auto res = lab::green_check(rc.experiment, rc.param("N", 30L), rc.param("instances", 50L),
                                      rc.param("corrupt_alpha", 0.0));
    const double tol = rc.param("tolerance", 1e-8);
    CommandResult r{CsvTable({"instance", "e_tilde", "green_deviation", "transfer_deviation", "resonant"}), {}, false};
    for (const auto& row : res.rows)
        r.table.add(row.instance, row.e_tilde, row.green_deviation, row.transfer_deviation, row.resonant);
    r.summary = {{"N", res.N},
                 {"max_green_deviation", res.max_green_deviation},
                 {"max_transfer_deviation", res.max_transfer_deviation},
                 {"tolerance", tol}};
    r.pass = res.max_green_deviation <= tol && res.max_transfer_deviation <= tol;
    return r;
}

inline CommandResult cmd_hypotheses(const RunConfig& rc) {
    const auto rep = check_theorem_hypotheses(rc.experiment.spec);
    CommandResult r{CsvTable({"fixed_point"}), {}, rep.pass};
    for (Letter j : rep.fixed_points) r.table.add(j);
    r.summary = {{"fixed_points", rep.fixed_points}, {"non_fixed_exists", rep.non_fixed_exists}, {"pass", rep.pass}};
    return r;
}

inline const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table{
        {"sample", {{"count", "n_left", "n_right"}, cmd_sample}},
        {"lyapunov-scan", {{"threshold", "sigmas", "min_positive_fraction"}, cmd_scan}},
        {"ldt", {{"n_list", "epsilon_fraction", "epsilon"}, cmd_ldt}},
        {"avalanche",
         {{"family", "lambda", "blocks", "block_length", "max_angle", "C", "draws", "min_precondition_fraction"},
          cmd_avalanche}},
        {"doubling", {{"n_list", "from", "to"}, cmd_doubling}},
        {"holder", {{"min_r_squared"}, cmd_holder}},
        {"localize",
         {{"N", "window", "matched", "matched_points", "matched_n", "matched_samples", "max_gap", "min_ipr_factor"},
          cmd_localize}},
        {"green-check", {{"N", "instances", "corrupt_alpha", "tolerance"}, cmd_green}},
        {"hypotheses", {{}, cmd_hypotheses, false}},
    };
    return table;
}

}  // namespace graphshift::cli
