#pragma once

// Experiment drivers: Lyapunov scans, large-deviation tails, the avalanche
// principle, the Lyapunov doubling combination, Hoelder fits of L(E), and
// finite-volume localization. Every driver is a pure function of its config
// (seed included); Monte-Carlo samples are keyed by index, so results do not
// depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "graphshift/cocycle.hpp"
#include "graphshift/error.hpp"
#include "graphshift/jacobi.hpp"
#include "graphshift/markov.hpp"
#include "graphshift/parallel.hpp"
#include "graphshift/rng.hpp"
#include "graphshift/stats.hpp"

namespace graphshift::lab {

using Source = std::variant<MarkovMeasure, ConstantSource>;

// Seed streams used inside one experiment, so that e.g. the reference
// Lyapunov exponent and the tail samples never share draws.
enum class Stream : std::uint64_t {
    scan = 0x5ca9,
    reference = 0x4ef,
    tails = 0x7a11,
    doubling = 0xd0b1,
    avalanche = 0xa7a1,
    localization = 0x10ca,
    matching = 0x3a7c,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
    return splitmix64(seed ^ (static_cast<std::uint64_t>(s) * 0xD1B54A32D192ED03ULL));
}

struct ExperimentConfig {
    ExperimentConfig(SftSpec spec_, Source source_) : spec(std::move(spec_)), source(std::move(source_)) {}

    SftSpec spec;
    Source source;
    std::vector<EnergyTriple> energies;
    long n = 1000;
    long samples = 100;
    long reference_samples = 0;  // 0: use `samples`
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::map<std::string, double> tolerances;

    double tolerance(const std::string& name, double fallback) const {
        const auto it = tolerances.find(name);
        return it == tolerances.end() ? fallback : it->second;
    }
    long ref_samples() const { return reference_samples > 0 ? reference_samples : samples; }

    void validate() const {
        if (n < 1 || samples < 1) fail(ErrorKind::invalid_input, "n and samples must be >= 1");
        for (const auto& en : energies) en.require_regular();
        if (const auto* m = std::get_if<MarkovMeasure>(&source)) {
            if (m->spec().alphabet_size() != spec.alphabet_size())
                fail(ErrorKind::invalid_input, "measure alphabet differs from spec");
        } else {
            const auto& c = std::get<ConstantSource>(source);
            if (!spec.in_range(c.letter) || !spec.allowed(c.letter, c.letter))
                fail(ErrorKind::invalid_input, "constant sequence is not a fixed point of the shift");
        }
    }
};

// k uniformly spaced at interval midpoints of (k_lo, k_hi).
inline std::vector<EnergyTriple> k_grid(std::size_t points, double k_lo = 0.3,
                                        double k_hi = std::numbers::pi - 0.3,
                                        double margin = EnergyTriple::kDefaultMargin) {
    if (points == 0 || !(k_hi > k_lo)) fail(ErrorKind::invalid_input, "k_grid: empty grid");
    std::vector<EnergyTriple> out;
    for (std::size_t i = 0; i < points; ++i)
        out.push_back(EnergyTriple::from_k(
            k_lo + (static_cast<double>(i) + 0.5) * (k_hi - k_lo) / static_cast<double>(points), margin));
    return out;
}

template <class Fn>
decltype(auto) with_source(const Source& s, Fn&& fn) {
    return std::visit([&](const auto& src) -> decltype(auto) { return fn(src); }, s);
}

// ---------------------------------------------------------------------------
// Lyapunov scans

struct LyapunovRow {
    double E = 0.0, k = 0.0, e_tilde = 0.0;
    double L = 0.0, stderr_ = 0.0;
    long n = 0, samples = 0;
};

using LyapunovTable = std::vector<LyapunovRow>;

inline LyapunovEstimate estimate_lyapunov(const ExperimentConfig& cfg, const EnergyTriple& en, long n,
                                          long samples, std::uint64_t seed) {
    return with_source(cfg.source, [&](const auto& src) {
        return lyapunov(src, en, n, samples, seed, cfg.threads);
    });
}

// One row per grid energy, grid point i sampled with derive_seed(scan stream, i).
inline LyapunovTable scan_lyapunov(const ExperimentConfig& cfg) {
    cfg.validate();
    LyapunovTable table;
    const auto base = stream_seed(cfg.seed, Stream::scan);
    for (std::size_t i = 0; i < cfg.energies.size(); ++i) {
        const auto& en = cfg.energies[i];
        const auto est = estimate_lyapunov(cfg, en, cfg.n, cfg.samples, derive_seed(base, i));
        table.push_back({en.E(), en.k(), en.e_tilde(), est.estimate, est.stderr_, cfg.n, cfg.samples});
    }
    std::stable_sort(table.begin(), table.end(), [](const auto& a, const auto& b) { return a.E < b.E; });
    return table;
}

// Grid energies whose estimate is below max(threshold, 3 stderr). Candidates only.
inline std::vector<double> find_zero_candidates(const LyapunovTable& table, double threshold) {
    if (!(threshold > 0.0)) fail(ErrorKind::invalid_input, "threshold must be > 0");
    std::vector<double> out;
    for (const auto& r : table)
        if (r.L < std::max(threshold, 3.0 * r.stderr_)) out.push_back(r.E);
    return out;
}

struct PositivitySummary {
    std::size_t positive = 0;  // rows with L > sigmas * stderr
    std::size_t total = 0;
    bool failures_isolated = true;  // no two adjacent rows fail
};

inline PositivitySummary positivity(const LyapunovTable& table, double sigmas = 5.0) {
    PositivitySummary s;
    s.total = table.size();
    bool prev_failed = false;
    for (const auto& r : table) {
        const bool ok = r.L > sigmas * r.stderr_;
        s.positive += ok ? 1 : 0;
        if (!ok && prev_failed) s.failures_isolated = false;
        prev_failed = !ok;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Products read at several lengths from one sample.

namespace detail {

// ln ||A_n(w)|| at each n of `checkpoints` (ascending, >= 1).
inline std::vector<double> log_norms_at(const Word& w, const StepTable& steps, const std::vector<long>& checkpoints) {
    std::vector<double> out;
    out.reserve(checkpoints.size());
    LogNormProduct p;
    long done = 0;
    for (long n : checkpoints) {
        for (; done < n; ++done) p.push_left(steps(w[done], w[done - 1]));
        out.push_back(p.log_norm);
    }
    return out;
}

// Matrix row s: ln ||A_{checkpoints[c]}(w_s)|| for samples s.
inline std::vector<std::vector<double>> sample_log_norms(const ExperimentConfig& cfg, const EnergyTriple& en,
                                                         const std::vector<long>& checkpoints, long samples,
                                                         std::uint64_t seed) {
    en.require_regular();
    const long top = checkpoints.back();
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(samples));
    with_source(cfg.source, [&](const auto& src) {
        parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
            const Word w = src.sample(derive_seed(seed, i), 1, top - 1);
            rows[i] = log_norms_at(w, StepTable(max_letter(w), en), checkpoints);
        });
        return 0;
    });
    return rows;
}

inline std::vector<long> sorted_unique(std::vector<long> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Large deviations

struct TailRow {
    long n = 0;
    double tail = 0.0;          // fraction of samples with |(1/n) ln||A_n|| - L| > epsilon
    double binomial_se = 0.0;   // sqrt(p (1 - p) / samples)
    long exceed = 0;
};

struct LdtResult {
    double reference_L = 0.0;
    double reference_stderr = 0.0;
    double epsilon = 0.0;
    long samples = 0;
    std::vector<TailRow> rows;
    // ln(tail) vs n over rows with tail > 0
    double slope = 0.0;
    double slope_stderr = 0.0;
    std::size_t fit_points = 0;
    bool fit_ok = false;
};

// Reference L at cfg.n with cfg.ref_samples() samples.
inline LyapunovEstimate reference_lyapunov(const ExperimentConfig& cfg, const EnergyTriple& en) {
    return estimate_lyapunov(cfg, en, cfg.n, cfg.ref_samples(), stream_seed(cfg.seed, Stream::reference));
}

// Tail probabilities for each n in n_list, from cfg.samples words shared by all n.
inline LdtResult ldt_tail(const ExperimentConfig& cfg, const EnergyTriple& en, double epsilon,
                          std::vector<long> n_list, std::optional<LyapunovEstimate> reference = std::nullopt) {
    cfg.validate();
    if (!(epsilon > 0.0)) fail(ErrorKind::invalid_input, "ldt_tail: epsilon must be > 0");
    n_list = detail::sorted_unique(std::move(n_list));
    if (n_list.empty() || n_list.front() < 1) fail(ErrorKind::invalid_input, "ldt_tail: n_list must be >= 1");
    const LyapunovEstimate ref = reference ? *reference : reference_lyapunov(cfg, en);
    LdtResult out;
    out.reference_L = ref.estimate;
    out.reference_stderr = ref.stderr_;
    out.epsilon = epsilon;
    out.samples = cfg.samples;
    const auto norms = detail::sample_log_norms(cfg, en, n_list, cfg.samples, stream_seed(cfg.seed, Stream::tails));
    const double S = static_cast<double>(cfg.samples);
    std::vector<double> xs, ys;
    for (std::size_t c = 0; c < n_list.size(); ++c) {
        TailRow row;
        row.n = n_list[c];
        for (const auto& s : norms)
            if (std::abs(s[c] / static_cast<double>(row.n) - ref.estimate) > epsilon) ++row.exceed;
        row.tail = static_cast<double>(row.exceed) / S;
        row.binomial_se = std::sqrt(row.tail * (1.0 - row.tail) / S);
        if (row.tail > 0.0) {
            xs.push_back(static_cast<double>(row.n));
            ys.push_back(std::log(row.tail));
        }
        out.rows.push_back(row);
    }
    out.fit_points = xs.size();
    if (xs.size() >= 3) {
        const auto fit = stats::fit_line(xs, ys);
        out.slope = fit.slope;
        out.slope_stderr = fit.slope_stderr;
        out.fit_ok = true;
    }
    return out;
}

// Tails non-increasing in n up to `sigmas` combined binomial standard errors.
inline bool tails_monotone(const LdtResult& r, double sigmas = 3.0) {
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
        const auto& a = r.rows[i - 1];
        const auto& b = r.rows[i];
        const double se = std::sqrt(a.binomial_se * a.binomial_se + b.binomial_se * b.binomial_se);
        if (b.tail > a.tail + sigmas * se) return false;
    }
    return true;
}

// ln Gamma with Gamma = max over letter pairs of ||A^E(w)||: |(1/n) ln||A_n||| <= ln Gamma.
inline double log_gamma(const SftSpec& spec, const EnergyTriple& en) {
    double g = 0.0;
    for (Letter a = 1; a <= spec.alphabet_size(); ++a)
        for (Letter b = 1; b <= spec.alphabet_size(); ++b)
            if (spec.allowed(b, a)) g = std::max(g, std::log(one_step(a, b, en).norm()));
    return g;
}

// ---------------------------------------------------------------------------
// Avalanche principle

struct AvalancheReport {
    std::size_t n = 0;
    double lambda = 0.0;
    double C = 0.0;
    double delta = 0.0;
    double bound = 0.0;                  // C n / lambda
    bool norms_ok = false;               // ||A_j|| >= lambda for all j
    bool lambda_exceeds_n = false;       // lambda > n
    std::size_t pair_violations = 0;     // pairs breaking the 1/2 ln(lambda) cancellation bound
    double max_pair_defect = 0.0;
    bool preconditions_hold() const { return norms_ok && lambda_exceeds_n && pair_violations == 0; }
    bool holds() const { return delta <= bound; }
};

// Delta = | ln||A_n...A_1|| + sum_{j=2}^{n-1} ln||A_j|| - sum_{j=1}^{n-1} ln||A_{j+1} A_j|| |.
inline AvalancheReport avalanche_verify(const std::vector<Sl2>& mats, double lam, double C) {
    AvalancheReport r;
    r.n = mats.size();
    r.lambda = lam;
    r.C = C;
    if (mats.empty()) fail(ErrorKind::invalid_input, "avalanche_verify: no matrices");
    std::vector<double> ln_norm;
    for (const auto& m : mats) {
        const double nm = m.norm();
        if (!m.finite() || !std::isfinite(nm) || !(nm > 0.0))
            fail(ErrorKind::invalid_input, "avalanche_verify: non-finite norm");
        ln_norm.push_back(std::log(nm));
    }
    r.norms_ok = std::all_of(ln_norm.begin(), ln_norm.end(), [&](double x) { return x >= std::log(lam); });
    r.lambda_exceeds_n = lam > static_cast<double>(r.n);

    LogNormProduct prod;
    for (const auto& m : mats) prod.push_left(m);
    double sum_single = 0.0, sum_pairs = 0.0;
    for (std::size_t j = 1; j + 1 < r.n; ++j) sum_single += ln_norm[j];
    for (std::size_t j = 0; j + 1 < r.n; ++j) {
        LogNormProduct pair;
        pair.push_left(mats[j]);
        pair.push_left(mats[j + 1]);
        sum_pairs += pair.log_norm;
        const double defect = std::abs(ln_norm[j + 1] + ln_norm[j] - pair.log_norm);
        r.max_pair_defect = std::max(r.max_pair_defect, defect);
        if (!(defect < 0.5 * std::log(lam))) ++r.pair_violations;
    }
    if (r.n == 1) sum_pairs = prod.log_norm;  // the single-factor product cancels itself
    r.delta = std::abs(prod.log_norm + sum_single - sum_pairs);
    r.bound = C * static_cast<double>(r.n) / lam;
    return r;
}

inline Sl2 rotation(double theta) { return {std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)}; }

// n copies of diag(lambda, 1/lambda).
inline std::vector<Sl2> avalanche_diagonal_family(double lambda, std::size_t n) {
    return std::vector<Sl2>(n, Sl2{lambda, 0.0, 0.0, 1.0 / lambda});
}

// diag(lambda, 1/lambda) composed with rotations by angles uniform in [-max_angle, max_angle].
inline std::vector<Sl2> avalanche_rotated_family(double lambda, std::size_t n, double max_angle, std::uint64_t seed) {
    Engine eng(seed);
    std::vector<Sl2> out;
    for (std::size_t j = 0; j < n; ++j)
        out.push_back(rotation(max_angle * (2.0 * uniform01(eng) - 1.0)) * Sl2{lambda, 0.0, 0.0, 1.0 / lambda});
    return out;
}

// Blocks A^{(j)} = A^E_K(T^{(j-1)K} w), j = 1..n, along one sampled sequence.
inline std::vector<Sl2> avalanche_cocycle_family(const ExperimentConfig& cfg, const EnergyTriple& en, long K,
                                                 std::size_t n, std::uint64_t seed) {
    if (K < 1 || n < 1) fail(ErrorKind::invalid_input, "avalanche_cocycle_family: K, n >= 1");
    const long total = K * static_cast<long>(n);
    return with_source(cfg.source, [&](const auto& src) {
        const Word w = src.sample(seed, 1, total - 1);
        std::vector<Sl2> out;
        for (std::size_t j = 0; j < n; ++j) {
            const Word block = shift(w, static_cast<long>(j) * K);
            out.push_back(product(block, en, K).reconstruct());
        }
        return out;
    });
}

// ---------------------------------------------------------------------------
// Lyapunov doubling

struct DoublingRow {
    long n = 0;
    double L_n = 0.0, L_2n = 0.0;
    double combination = 0.0;  // |L + L_n - 2 L_2n|
    double signed_combination = 0.0;
    double stderr_ = 0.0;      // includes the reference L uncertainty
};

struct DoublingResult {
    double reference_L = 0.0;
    double reference_stderr = 0.0;
    long reference_n = 0;
    std::vector<DoublingRow> rows;
};

// L_n and L_2n are read from the same cfg.samples words (prefix products);
// the reference L comes from cfg.n with cfg.ref_samples() independent words.
inline DoublingResult lyapunov_doubling(const ExperimentConfig& cfg, const EnergyTriple& en, std::vector<long> n_list,
                                        std::optional<LyapunovEstimate> reference = std::nullopt) {
    cfg.validate();
    n_list = detail::sorted_unique(std::move(n_list));
    if (n_list.empty() || n_list.front() < 1) fail(ErrorKind::invalid_input, "doubling: n_list must be >= 1");
    for (long n : n_list)
        if (2 * n > cfg.n)
            fail(ErrorKind::invalid_input, "doubling: 2n = " + std::to_string(2 * n) +
                                               " exceeds the reference length " + std::to_string(cfg.n));
    const LyapunovEstimate ref = reference ? *reference : reference_lyapunov(cfg, en);
    std::vector<long> checkpoints;
    for (long n : n_list) {
        checkpoints.push_back(n);
        checkpoints.push_back(2 * n);
    }
    checkpoints = detail::sorted_unique(checkpoints);
    const auto norms =
        detail::sample_log_norms(cfg, en, checkpoints, cfg.samples, stream_seed(cfg.seed, Stream::doubling));
    auto col = [&](long n) {
        return static_cast<std::size_t>(std::find(checkpoints.begin(), checkpoints.end(), n) - checkpoints.begin());
    };
    DoublingResult out{ref.estimate, ref.stderr_, ref.n, {}};
    for (long n : n_list) {
        std::vector<double> ln, l2n, diff;
        for (const auto& s : norms) {
            const double a = s[col(n)] / static_cast<double>(n);
            const double b = s[col(2 * n)] / static_cast<double>(2 * n);
            ln.push_back(a);
            l2n.push_back(b);
            diff.push_back(a - 2.0 * b);
        }
        const auto d = stats::mean_stderr(diff);
        DoublingRow row;
        row.n = n;
        row.L_n = stats::mean_stderr(ln).mean;
        row.L_2n = stats::mean_stderr(l2n).mean;
        row.signed_combination = ref.estimate + d.mean;
        row.combination = std::abs(row.signed_combination);
        row.stderr_ = std::sqrt(d.stderr_ * d.stderr_ + ref.stderr_ * ref.stderr_);
        out.rows.push_back(row);
    }
    return out;
}

// Combination at n_from exceeds `factor` times the one at n_to by more than
// `sigmas` combined standard errors.
inline bool doubling_decreases(const DoublingResult& r, long n_from, long n_to, double factor = 2.0,
                               double sigmas = 3.0) {
    const DoublingRow* a = nullptr;
    const DoublingRow* b = nullptr;
    for (const auto& row : r.rows) {
        if (row.n == n_from) a = &row;
        if (row.n == n_to) b = &row;
    }
    if (!a || !b) fail(ErrorKind::invalid_input, "doubling_decreases: n not in result");
    const double se = std::sqrt(a->stderr_ * a->stderr_ + factor * factor * b->stderr_ * b->stderr_);
    return a->combination - factor * b->combination > sigmas * se;
}

// ---------------------------------------------------------------------------
// Hoelder fit

struct HolderFit {
    double beta = 0.0;
    double C = 0.0;            // exp(intercept + 2 residual sd): upper envelope of the fit
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t significant_pairs = 0;
    double fraction_within_bound = 0.0;  // pairs with |dL| <= C |dE|^beta
    // Same regression on the empirical modulus of continuity: for each pair,
    // the largest significant |dL| among pairs no farther apart.
    double modulus_beta = 0.0;
    double modulus_r_squared = 0.0;
};

// Log-log regression of |L(E) - L(E')| on |E - E'| over pairs whose
// difference exceeds 3 combined standard errors.
inline HolderFit holder_fit(const LyapunovTable& table) {
    if (table.size() < 10) fail(ErrorKind::insufficient_data, "holder_fit: need >= 10 rows");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t j = i + 1; j < table.size(); ++j) {
            const auto& a = table[i];
            const auto& b = table[j];
            const double dl = std::abs(a.L - b.L);
            const double de = std::abs(a.E - b.E);
            const double se = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
            if (de > 0.0 && dl > 0.0 && dl > 3.0 * se) {
                x.push_back(std::log(de));
                y.push_back(std::log(dl));
            }
        }
    if (x.size() < 3) fail(ErrorKind::insufficient_data, "holder_fit: fewer than 3 significant pairs");
    const auto fit = stats::fit_line(x, y);
    HolderFit out;
    out.beta = fit.slope;
    out.intercept = fit.intercept;
    out.r_squared = fit.r_squared;
    out.significant_pairs = x.size();
    const double log_c = fit.intercept + 2.0 * fit.residual_sd;
    out.C = std::exp(log_c);
    std::size_t within = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (y[i] <= log_c + out.beta * x[i] + 1e-12) ++within;
    out.fraction_within_bound = static_cast<double>(within) / static_cast<double>(x.size());

    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> mx, my;
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
        running = std::max(running, y[i]);
        mx.push_back(x[i]);
        my.push_back(running);
    }
    const auto modulus = stats::fit_line(mx, my);
    out.modulus_beta = modulus.slope;
    out.modulus_r_squared = modulus.r_squared;
    return out;
}

// ---------------------------------------------------------------------------
// Localization

struct EigenRecord {
    long sample = 0;
    double e_tilde = 0.0;
    double E = 0.0;
    double decay_rate = 0.0;
    double ipr = 0.0;
    long center = 0;
    bool clamped = false;  // regression slope was positive and clamped to 0
};

inline double inverse_participation_ratio(std::span<const double> v) {
    double s2 = 0.0, s4 = 0.0;
    for (double x : v) {
        s2 += x * x;
        s4 += x * x * x * x;
    }
    return s4 / (s2 * s2);
}

struct DecayFit {
    double rate = 0.0;
    bool clamped = false;
    std::size_t points = 0;
};

// Exponential decay rate of |v| away from its maximum. On each side the
// decaying region runs until |v| first drops below floor * max|v| (or the
// box ends); ln|v| is regressed on the distance over the outer half of it.
inline DecayFit decay_rate(std::span<const double> v, long center, double floor) {
    const long N = static_cast<long>(v.size());
    const double vmax = std::abs(v[static_cast<std::size_t>(center)]);
    std::vector<double> xs, ys;
    for (int dir : {-1, 1}) {
        long extent = 0;
        for (long d = 1;; ++d) {
            const long i = center + dir * d;
            if (i < 0 || i >= N || std::abs(v[static_cast<std::size_t>(i)]) < floor * vmax) break;
            extent = d;
        }
        for (long d = (extent + 1) / 2; d <= extent; ++d) {
            if (d == 0) continue;
            xs.push_back(static_cast<double>(d));
            ys.push_back(std::log(std::abs(v[static_cast<std::size_t>(center + dir * d)]) / vmax));
        }
    }
    DecayFit out;
    out.points = xs.size();
    if (xs.size() < 3) return out;
    const double rate = -stats::fit_line(xs, ys).slope;
    out.clamped = rate < 0.0;
    out.rate = std::max(rate, 0.0);
    return out;
}

struct LocalizationResult {
    long N = 0;
    double window_lo = 0.0, window_hi = 0.0;
    std::vector<EigenRecord> records;
};

// Eigenstates of H_N with e_tilde in [lo, hi) for cfg.samples disorder draws.
inline LocalizationResult localization_experiment(const ExperimentConfig& cfg, long N, double lo, double hi) {
    cfg.validate();
    if (N < 2) fail(ErrorKind::invalid_input, "localization: N must be >= 2");
    if (!(lo < hi) || lo <= -2.0 || hi >= 2.0)
        fail(ErrorKind::invalid_input, "localization: window must lie strictly inside (-2, 2)");
    const double floor = cfg.tolerance("decay_floor", 1e-10);
    const auto base = stream_seed(cfg.seed, Stream::localization);
    std::vector<std::vector<EigenRecord>> per_sample(static_cast<std::size_t>(cfg.samples));
    with_source(cfg.source, [&](const auto& src) {
        parallel_for(per_sample.size(), cfg.threads, [&](std::size_t s) {
            const Word w = src.sample(derive_seed(base, s), 1, N - 1);
            const Tridiag t = build(w, N);
            const EigenSystem es = eigensolve_window(t, lo, hi);
            for (std::size_t i = 0; i < es.values.size(); ++i) {
                const auto& v = es.vectors[i];
                const auto big = std::max_element(v.begin(), v.end(),
                                                   [](double a, double b) { return std::abs(a) < std::abs(b); });
                EigenRecord rec;
                rec.sample = static_cast<long>(s);
                rec.e_tilde = es.values[i];
                const double k = std::acos(std::clamp(0.5 * rec.e_tilde, -1.0, 1.0));
                rec.E = k * k;
                rec.center = static_cast<long>(big - v.begin());
                rec.ipr = inverse_participation_ratio(v);
                const auto fit = decay_rate(v, rec.center, floor);
                rec.decay_rate = fit.rate;
                rec.clamped = fit.clamped;
                per_sample[s].push_back(rec);
            }
        });
        return 0;
    });
    LocalizationResult out{N, lo, hi, {}};
    for (auto& recs : per_sample) out.records.insert(out.records.end(), recs.begin(), recs.end());
    return out;
}

struct LocalizationSummary {
    std::size_t states = 0;
    double median_decay = 0.0;
    double median_ipr = 0.0;
    double clamp_fraction = 0.0;
    double median_matched_L = 0.0;  // independent L(E) at the state energies (0 if not computed)
    double relative_gap = 0.0;      // |median_decay - median_matched_L| / median_matched_L
};

// Independent Lyapunov estimates on `points` k values spanning the window,
// linearly interpolated in e_tilde at each state energy.
inline std::vector<double> matched_lyapunov(const ExperimentConfig& cfg, const LocalizationResult& loc,
                                            std::size_t points, long n, long samples) {
    const double k_hi = std::acos(0.5 * loc.window_lo);
    const double k_lo = std::acos(0.5 * loc.window_hi);
    std::vector<double> grid_e, grid_L;
    const auto base = stream_seed(cfg.seed, Stream::matching);
    for (std::size_t i = 0; i < points; ++i) {
        const double k = points == 1 ? 0.5 * (k_lo + k_hi)
                                     : k_lo + (k_hi - k_lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        const auto en = EnergyTriple::from_k(k);
        grid_e.push_back(en.e_tilde());
        grid_L.push_back(estimate_lyapunov(cfg, en, n, samples, derive_seed(base, i)).estimate);
    }
    // grid_e is descending in k; make it ascending.
    std::reverse(grid_e.begin(), grid_e.end());
    std::reverse(grid_L.begin(), grid_L.end());
    std::vector<double> out;
    for (const auto& r : loc.records) {
        if (grid_e.size() == 1) {
            out.push_back(grid_L.front());
            continue;
        }
        auto it = std::upper_bound(grid_e.begin(), grid_e.end(), r.e_tilde);
        std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - grid_e.begin()), 1, grid_e.size() - 1);
        const std::size_t lo = hi - 1;
        const double t = (r.e_tilde - grid_e[lo]) / (grid_e[hi] - grid_e[lo]);
        out.push_back(grid_L[lo] + t * (grid_L[hi] - grid_L[lo]));
    }
    return out;
}

inline LocalizationSummary summarize(const LocalizationResult& loc, const std::vector<double>& matched_L = {}) {
    LocalizationSummary s;
    s.states = loc.records.size();
    if (s.states == 0) return s;
    std::vector<double> decay, ipr;
    std::size_t clamped = 0;
    for (const auto& r : loc.records) {
        decay.push_back(r.decay_rate);
        ipr.push_back(r.ipr);
        clamped += r.clamped ? 1 : 0;
    }
    s.median_decay = stats::median(decay);
    s.median_ipr = stats::median(ipr);
    s.clamp_fraction = static_cast<double>(clamped) / static_cast<double>(s.states);
    if (!matched_L.empty()) {
        s.median_matched_L = stats::median(matched_L);
        s.relative_gap = std::abs(s.median_decay - s.median_matched_L) / s.median_matched_L;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Green's function and transfer-matrix cross-checks

struct GreenCheckRow {
    long instance = 0;
    double e_tilde = 0.0;
    double green_deviation = 0.0;     // determinant route vs direct solve, relative to the column max
    double transfer_deviation = 0.0;  // transfer_from_dets vs cocycle product
    bool resonant = false;
};

struct GreenCheckResult {
    long N = 0;
    std::vector<GreenCheckRow> rows;
    double max_green_deviation = 0.0;
    double max_transfer_deviation = 0.0;
};

// For `instances` sampled words: every resolvent entry from determinants
// against columns of (H_N - e)^{-1} from a tridiagonal solve, and the
// determinant form of A_N against the cocycle product. Energies cycle
// through cfg.energies. corrupt_alpha scales one coupling of the
// determinant route only (fault injection for the checker itself).
inline GreenCheckResult green_check(const ExperimentConfig& cfg, long N, long instances, double corrupt_alpha = 0.0) {
    cfg.validate();
    if (N < 1 || instances < 1) fail(ErrorKind::invalid_input, "green_check: N, instances >= 1");
    if (cfg.energies.empty()) fail(ErrorKind::invalid_input, "green_check: no energies");
    GreenCheckResult out;
    out.N = N;
    out.rows.resize(static_cast<std::size_t>(instances));
    const auto base = stream_seed(cfg.seed, Stream::scan);
    with_source(cfg.source, [&](const auto& src) {
        parallel_for(out.rows.size(), cfg.threads, [&](std::size_t i) {
            const auto& en = cfg.energies[i % cfg.energies.size()];
            const Word w = src.sample(derive_seed(base, i), 2, N);
            const Tridiag t = build(w, N);
            Tridiag routed = t;
            if (corrupt_alpha != 0.0 && N > 1) routed.offdiag[static_cast<std::size_t>((N - 1) / 2)] *= 1.0 + corrupt_alpha;
            GreenCheckRow row;
            row.instance = static_cast<long>(i);
            row.e_tilde = en.e_tilde();
            try {
                for (long k = 0; k < N; ++k) {
                    std::vector<double> unit(static_cast<std::size_t>(N), 0.0);
                    unit[static_cast<std::size_t>(k)] = 1.0;
                    const auto col = solve_shifted(t, en.e_tilde(), std::move(unit));
                    double scale = 0.0, dev = 0.0;
                    for (long j = 0; j < N; ++j) {
                        const double direct = col[static_cast<std::size_t>(j)];
                        scale = std::max(scale, std::abs(direct));
                        dev = std::max(dev, std::abs(green(routed, en.e_tilde(), j, k) - direct));
                    }
                    row.green_deviation = std::max(row.green_deviation, dev / scale);
                }
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::resonant_energy) throw;
                row.resonant = true;
                row.green_deviation = 0.0;
            }
            row.transfer_deviation = relative_difference(transfer_from_dets(w, N, en), product(w, en, N).reconstruct());
            out.rows[i] = row;
        });
        return 0;
    });
    for (const auto& r : out.rows) {
        out.max_green_deviation = std::max(out.max_green_deviation, r.green_deviation);
        out.max_transfer_deviation = std::max(out.max_transfer_deviation, r.transfer_deviation);
    }
    return out;
}

}  // namespace graphshift::lab
