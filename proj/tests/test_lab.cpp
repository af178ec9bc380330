#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "graphshift/lab.hpp"

using namespace graphshift;
using namespace graphshift::lab;
using std::numbers::pi;

namespace {

ExperimentConfig bernoulli(int l = 2) {
    const auto spec = SftSpec::full_shift(l);
    return ExperimentConfig(spec, from_spec_uniform(spec));
}

ExperimentConfig constant(int l = 2, Letter c = 1) { return ExperimentConfig(SftSpec::full_shift(l), ConstantSource{c}); }

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::invalid_input;
}

}  // namespace

TEST(Grid, MidpointsInsideRange) {
    const auto g = k_grid(4, 0.2, 1.0);
    ASSERT_EQ(g.size(), 4u);
    EXPECT_DOUBLE_EQ(g[0].k(), 0.3);
    EXPECT_DOUBLE_EQ(g[3].k(), 0.9);
    EXPECT_THROW(k_grid(0), Error);
    EXPECT_THROW(k_grid(3, 1.0, 1.0), Error);
}

TEST(Config, ConstantMustBeFixedPoint) {
    ExperimentConfig c(SftSpec(2, {{1, 1}}), ConstantSource{1});
    EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::invalid_input);
    ExperimentConfig bad = bernoulli(2);
    bad.spec = SftSpec::full_shift(3);
    EXPECT_EQ(kind_of([&] { bad.validate(); }), ErrorKind::invalid_input);
}

TEST(Scan, OnePointAndDeterminism) {
    auto cfg = bernoulli();
    cfg.n = 400;
    cfg.samples = 20;
    cfg.seed = 9;
    cfg.energies = {EnergyTriple::from_k(1.2)};
    const auto t = scan_lyapunov(cfg);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_DOUBLE_EQ(t[0].k, 1.2);
    EXPECT_GT(t[0].L, 0.0);
    cfg.threads = 3;
    EXPECT_EQ(scan_lyapunov(cfg)[0].L, t[0].L);
}

TEST(Scan, SortedByEnergy) {
    auto cfg = bernoulli();
    cfg.n = 50;
    cfg.samples = 4;
    cfg.energies = {EnergyTriple::from_k(2.0), EnergyTriple::from_k(0.5), EnergyTriple::from_k(1.0)};
    const auto t = scan_lyapunov(cfg);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LT(t[i - 1].E, t[i].E);
}

TEST(Scan, ConstantSequenceHasOnlyZeroCandidates) {
    auto cfg = constant();
    cfg.n = 2000;
    cfg.samples = 2;
    cfg.energies = k_grid(12);
    const auto t = scan_lyapunov(cfg);
    EXPECT_EQ(find_zero_candidates(t, 0.01).size(), t.size());
    EXPECT_THROW(find_zero_candidates(t, 0.0), Error);
}

TEST(Positivity, IsolatedFailures) {
    LyapunovTable t(5);
    for (auto& r : t) {
        r.L = 1.0;
        r.stderr_ = 0.01;
    }
    t[1].L = 0.0;
    t[3].L = 0.0;
    auto s = positivity(t);
    EXPECT_EQ(s.positive, 3u);
    EXPECT_TRUE(s.failures_isolated);
    t[2].L = 0.0;
    EXPECT_FALSE(positivity(t).failures_isolated);
}

TEST(Ldt, LargeEpsilonGivesNoExceedances) {
    auto cfg = bernoulli();
    cfg.n = 400;
    cfg.samples = 50;
    const auto en = EnergyTriple::from_k(1.2);
    // |(1/n) ln ||A_n|| - L| <= 2 ln Gamma always
    const auto r = ldt_tail(cfg, en, 2.0 * log_gamma(cfg.spec, en) + 1e-9, {20, 40, 80});
    for (const auto& row : r.rows) EXPECT_EQ(row.exceed, 0);
    EXPECT_FALSE(r.fit_ok);
}

TEST(Ldt, TailShrinksWithEpsilonAndN) {
    auto cfg = bernoulli(3);
    cfg.n = 2000;
    cfg.samples = 400;
    cfg.seed = 3;
    const auto en = EnergyTriple::from_k(1.2);
    const auto ref = reference_lyapunov(cfg, en);
    const auto a = ldt_tail(cfg, en, 0.01, {25, 50, 100, 200}, ref);
    const auto b = ldt_tail(cfg, en, 0.03, {25, 50, 100, 200}, ref);
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_GE(a.rows[i].tail, b.rows[i].tail);
    EXPECT_TRUE(tails_monotone(a));
    EXPECT_GT(a.rows.front().tail, a.rows.back().tail);
}

TEST(Ldt, ArgumentChecks) {
    auto cfg = bernoulli();
    const auto en = EnergyTriple::from_k(1.2);
    EXPECT_THROW(ldt_tail(cfg, en, 0.0, {10}), Error);
    EXPECT_THROW(ldt_tail(cfg, en, 0.1, {}), Error);
    EXPECT_THROW(ldt_tail(cfg, en, 0.1, {0, 5}), Error);
}

TEST(Ldt, LogGammaIsLargestStepNorm) {
    const auto en = EnergyTriple::from_k(1.0);
    const double g = log_gamma(SftSpec::full_shift(3), en);
    for (Letter a = 1; a <= 3; ++a)
        for (Letter b = 1; b <= 3; ++b) EXPECT_LE(std::log(one_step(a, b, en).norm()), g + 1e-15);
}

TEST(Avalanche, DiagonalIsExact) {
    const auto r = avalanche_verify(avalanche_diagonal_family(std::exp(5.0), 10), std::exp(5.0), 10.0);
    EXPECT_NEAR(r.delta, 0.0, 1e-9);
    EXPECT_TRUE(r.preconditions_hold());
    EXPECT_TRUE(r.holds());
}

TEST(Avalanche, RotatedWithinBound) {
    const double lam = std::exp(6.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = avalanche_verify(avalanche_rotated_family(lam, 12, 0.3, seed), lam, 10.0);
        EXPECT_TRUE(r.preconditions_hold());
        EXPECT_TRUE(r.holds()) << r.delta << " " << r.bound;
    }
}

TEST(Avalanche, TwoFactorsCancelExactly) {
    // n = 2: ln||A2 A1|| - ln||A2 A1|| with no single terms
    const std::vector<Sl2> m{rotation(0.4) * Sl2{30.0, 0.0, 0.0, 1.0 / 30.0}, Sl2{2.0, 1.0, 1.0, 1.0}};
    EXPECT_NEAR(avalanche_verify(m, 1.5, 1.0).delta, 0.0, 1e-12);
}

TEST(Avalanche, PreconditionsDetected) {
    const auto small = avalanche_verify(avalanche_diagonal_family(3.0, 10), 3.0, 1.0);
    EXPECT_FALSE(small.lambda_exceeds_n);
    // an almost anti-aligned pair: norms multiply to ~lambda^2 but the product is near 1
    const double lam = 100.0;
    const std::vector<Sl2> m{Sl2{lam, 0, 0, 1 / lam}, rotation(pi / 2) * Sl2{lam, 0, 0, 1 / lam}, Sl2{lam, 0, 0, 1 / lam}};
    EXPECT_GT(avalanche_verify(m, lam, 1.0).pair_violations, 0u);
}

TEST(Avalanche, NonFiniteRejected) {
    const std::vector<Sl2> m{Sl2{std::nan(""), 0, 0, 1}};
    EXPECT_EQ(kind_of([&] { avalanche_verify(m, 2.0, 1.0); }), ErrorKind::invalid_input);
    EXPECT_THROW(avalanche_verify({}, 2.0, 1.0), Error);
}

TEST(Avalanche, CocycleBlocksAreProducts) {
    auto cfg = bernoulli(3);
    const auto en = EnergyTriple::from_k(1.1);
    const auto blocks = avalanche_cocycle_family(cfg, en, 7, 4, 11);
    ASSERT_EQ(blocks.size(), 4u);
    const Word w = std::get<MarkovMeasure>(cfg.source).sample(11, 1, 27);
    Sl2 total = Sl2::identity();
    for (const auto& b : blocks) {
        EXPECT_NEAR(b.det(), 1.0, 1e-10);
        total = b * total;
    }
    EXPECT_LT(relative_difference(total, product(w, en, 28).reconstruct()), 1e-10);
}

TEST(Doubling, RejectsLengthBeyondReference) {
    auto cfg = bernoulli();
    cfg.n = 100;
    EXPECT_EQ(kind_of([&] { lyapunov_doubling(cfg, EnergyTriple::from_k(1.2), {25, 60}); }), ErrorKind::invalid_input);
}

TEST(Doubling, ConstantCombinationIsSmall) {
    // free cocycle: ln||A_n|| is bounded, so every term is O(1/n)
    auto cfg = constant();
    cfg.n = 4000;
    cfg.samples = 2;
    const auto r = lyapunov_doubling(cfg, EnergyTriple::from_k(1.2), {25, 100, 400});
    for (const auto& row : r.rows) EXPECT_LE(row.combination, 2.0 * std::log(2.0 / std::sin(1.2)) / row.n + 1e-12);
    EXPECT_THROW(doubling_decreases(r, 25, 50), Error);
}

TEST(Holder, SquareRootHasExponentOne) {
    // L(E) = sqrt(E) on E in [1, 4] is Lipschitz there: beta = 1
    LyapunovTable t;
    for (int i = 0; i < 30; ++i) {
        const double E = 1.0 + 3.0 * i / 29.0;
        t.push_back({E, std::sqrt(E), 0.0, std::sqrt(E), 1e-6, 1, 1});
    }
    const auto f = holder_fit(t);
    EXPECT_NEAR(f.beta, 1.0, 0.1);
    EXPECT_GT(f.r_squared, 0.95);
    EXPECT_GE(f.fraction_within_bound, 0.9);
}

TEST(Holder, PowerLaw) {
    LyapunovTable t;
    for (int i = 0; i < 40; ++i) {
        const double E = 0.01 + i * 0.05;
        t.push_back({E, 0, 0, std::pow(E, 0.5), 1e-9, 1, 1});
    }
    const auto f = holder_fit(t);
    EXPECT_GT(f.beta, 0.4);
    EXPECT_LE(f.beta, 1.0);
}

TEST(Holder, ConstantDataIsInsufficient) {
    LyapunovTable t(20);
    for (std::size_t i = 0; i < t.size(); ++i) t[i].E = static_cast<double>(i);
    EXPECT_EQ(kind_of([&] { holder_fit(t); }), ErrorKind::insufficient_data);
    EXPECT_EQ(kind_of([&] { holder_fit(LyapunovTable(5)); }), ErrorKind::insufficient_data);
}

TEST(Localization, IprBounds) {
    EXPECT_DOUBLE_EQ(inverse_participation_ratio(std::vector<double>{0, 3, 0}), 1.0);
    EXPECT_DOUBLE_EQ(inverse_participation_ratio(std::vector<double>(8, 0.5)), 1.0 / 8.0);
}

TEST(Localization, DecayOfExactExponential) {
    std::vector<double> v(201);
    for (long i = 0; i < 201; ++i) v[static_cast<std::size_t>(i)] = std::exp(-0.07 * std::abs(i - 80));
    const auto f = decay_rate(v, 80, 1e-10);
    EXPECT_NEAR(f.rate, 0.07, 1e-10);
    EXPECT_FALSE(f.clamped);
}

TEST(Localization, ConstantControlIsExtended) {
    auto cfg = constant();
    cfg.samples = 1;
    const long N = 400;
    const auto loc = localization_experiment(cfg, N, 0.3, 1.0);
    const auto s = summarize(loc);
    ASSERT_GT(s.states, 10u);
    for (const auto& r : loc.records) {
        EXPECT_GE(r.ipr, 1.0 / N);
        EXPECT_LE(r.ipr, 1.0);
        EXPECT_GE(r.decay_rate, 0.0);
        EXPECT_GE(r.e_tilde, 0.3);
        EXPECT_LT(r.e_tilde, 1.0);
    }
    // sine modes: IPR = 3 / (2 (N + 1))
    EXPECT_NEAR(s.median_ipr, 1.5 / (N + 1), 1e-6);
    EXPECT_LT(s.median_decay, 0.005);
}

TEST(Localization, DisorderLocalizes) {
    auto cfg = bernoulli(4);
    cfg.samples = 2;
    cfg.seed = 5;
    const long N = 600;
    const auto loc = localization_experiment(cfg, N, 0.3, 1.0);
    const auto s = summarize(loc);
    EXPECT_GT(s.median_ipr, 10.0 * 1.5 / N);
    EXPECT_GT(s.median_decay, 0.02);
    const auto m = matched_lyapunov(cfg, loc, 3, 1000, 10);
    ASSERT_EQ(m.size(), loc.records.size());
    for (double x : m) EXPECT_GT(x, 0.0);
}

TEST(Localization, WindowChecked) {
    auto cfg = constant();
    EXPECT_THROW(localization_experiment(cfg, 10, 1.0, 0.5), Error);
    EXPECT_THROW(localization_experiment(cfg, 10, -2.0, 0.5), Error);
    EXPECT_THROW(localization_experiment(cfg, 1, 0.0, 0.5), Error);
}

TEST(GreenCheck, CleanAndCorrupted) {
    auto cfg = bernoulli(3);
    cfg.energies = k_grid(5);
    const auto good = green_check(cfg, 25, 10);
    EXPECT_LT(good.max_green_deviation, 1e-8);
    EXPECT_LT(good.max_transfer_deviation, 1e-8);
    const auto bad = green_check(cfg, 25, 10, 0.01);
    EXPECT_GT(bad.max_green_deviation, 1e-4);
}
