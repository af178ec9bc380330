#include <cmath>

#include <gtest/gtest.h>

#include "graphshift/markov.hpp"

using namespace graphshift;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::invalid_input;
}

const SftSpec no11(2, {{1, 1}});

}  // namespace

TEST(Uniform, FullShiftTwo) {
    const auto m = from_spec_uniform(SftSpec::full_shift(2));
    for (Letter i = 1; i <= 2; ++i) {
        EXPECT_DOUBLE_EQ(m.pi(i), 0.5);
        for (Letter j = 1; j <= 2; ++j) EXPECT_DOUBLE_EQ(m.p(i, j), 0.5);
    }
}

TEST(Uniform, NoRepeatedOne) {
    // pi P = pi with P = [[0,1],[1/2,1/2]]: pi_1 = pi_2 / 2, so pi = (1/3, 2/3)
    const auto m = from_spec_uniform(no11);
    EXPECT_EQ(m.p(1, 1), 0.0);
    EXPECT_EQ(m.p(1, 2), 1.0);
    EXPECT_EQ(m.p(2, 1), 0.5);
    EXPECT_NEAR(m.pi(1), 1.0 / 3.0, 1e-13);
    EXPECT_NEAR(m.pi(2), 2.0 / 3.0, 1e-13);
}

TEST(Uniform, FullShiftThree) {
    const auto m = from_spec_uniform(SftSpec::full_shift(3));
    for (Letter i = 1; i <= 3; ++i) {
        EXPECT_NEAR(m.pi(i), 1.0 / 3.0, 1e-14);
        for (Letter j = 1; j <= 3; ++j) EXPECT_DOUBLE_EQ(m.p(i, j), 1.0 / 3.0);
    }
}

TEST(Uniform, PeriodicGraphIsUnsupported) {
    EXPECT_EQ(kind_of([] { from_spec_uniform(SftSpec(2, {{1, 1}, {2, 2}})); }), ErrorKind::unsupported_measure);
}

TEST(Uniform, ReducibleGraphIsUnsupported) {
    EXPECT_EQ(kind_of([] { from_spec_uniform(SftSpec(2, {{1, 2}, {2, 1}})); }), ErrorKind::unsupported_measure);
}

TEST(Markov, SupportMustMatchAdmissiblePairs) {
    EXPECT_EQ(kind_of([] { MarkovMeasure(no11, {{0.5, 0.5}, {0.5, 0.5}}); }), ErrorKind::invalid_input);
    EXPECT_EQ(kind_of([] { MarkovMeasure(SftSpec::full_shift(2), {{1.0, 0.0}, {0.5, 0.5}}); }),
              ErrorKind::invalid_input);
    EXPECT_EQ(kind_of([] { MarkovMeasure(SftSpec::full_shift(2), {{0.6, 0.6}, {0.5, 0.5}}); }),
              ErrorKind::invalid_input);
}

TEST(Markov, StationaryAndReversedChain) {
    const MarkovMeasure m(SftSpec::full_shift(3), {{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}, {0.25, 0.25, 0.5}});
    const auto& pi = m.stationary();
    for (std::size_t j = 0; j < 3; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) s += pi[i] * m.transition()[i][j];
        EXPECT_NEAR(s, pi[j], 1e-12);
    }
    for (std::size_t j = 0; j < 3; ++j) {
        double row = 0.0, back = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            row += m.reversed()[j][i];
            back += pi[j] * m.reversed()[j][i];
        }
        EXPECT_NEAR(row, 1.0, 1e-12);
        EXPECT_NEAR(back, pi[j], 1e-12);
    }
    // pi is also stationary for the reversed chain
    for (std::size_t i = 0; i < 3; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += pi[j] * m.reversed()[j][i];
        EXPECT_NEAR(s, pi[i], 1e-12);
    }
}

TEST(Cylinder, Examples) {
    const auto b = from_spec_uniform(SftSpec::full_shift(2));
    EXPECT_DOUBLE_EQ(cylinder_measure(b, Word(0, {1, 1})), 0.25);
    EXPECT_DOUBLE_EQ(cylinder_measure(b, Word(7, {1})), 0.5);
    EXPECT_DOUBLE_EQ(cylinder_measure(b, Word(0, {1})), 0.5);
    EXPECT_EQ(cylinder_measure(from_spec_uniform(no11), Word(0, {1, 1})), 0.0);
}

TEST(Cylinder, KolmogorovConsistency) {
    const MarkovMeasure m(SftSpec(3, {{1, 1}, {3, 2}}), {{0.0, 0.4, 0.6}, {0.3, 0.3, 0.4}, {0.5, 0.0, 0.5}});
    double total = 0.0;
    for (Letter j = 1; j <= 3; ++j) total += cylinder_measure(m, Word(0, {j}));
    EXPECT_NEAR(total, 1.0, 1e-12);
    const std::vector<std::vector<Letter>> words{{2, 3}, {1, 2, 1}, {3, 3, 1, 3}, {2}};
    for (const auto& s : words) {
        const double mass = cylinder_measure(m, Word(0, s));
        double right = 0.0, left = 0.0;
        for (Letter j = 1; j <= 3; ++j) {
            auto r = s, l = s;
            r.push_back(j);
            l.insert(l.begin(), j);
            right += cylinder_measure(m, Word(0, r));
            left += cylinder_measure(m, Word(-1, l));
        }
        EXPECT_NEAR(right, mass, 1e-14);
        EXPECT_NEAR(left, mass, 1e-14);
    }
}

TEST(Distortion, BernoulliIsExactlyOne) {
    const auto b = from_spec_uniform(SftSpec::full_shift(2));
    EXPECT_DOUBLE_EQ(distortion_ratio(b, Word(0, {1, 2}), Word(5, {2, 2, 1})), 1.0);
    EXPECT_DOUBLE_EQ(distortion_ratio(b, Word(-3, {2}), Word(-2, {1})), 1.0);
}

TEST(Distortion, TwoStateClosedForm) {
    // P = [[0,1],[1/2,1/2]] has eigenvalues 1 and -1/2, so
    // P^g[1][1] = 1/3 + (2/3)(-1/2)^g and the ratio is 1 + 2(-1/2)^g.
    const auto m = from_spec_uniform(no11);
    EXPECT_NEAR(distortion_ratio(m, Word(0, {1}), Word(1, {1})), 0.0, 1e-15);
    for (long g = 1; g <= 30; ++g) {
        const double expect = 1.0 + 2.0 * std::pow(-0.5, static_cast<double>(g));
        EXPECT_NEAR(distortion_ratio(m, Word(0, {1}), Word(g, {1})), expect, 1e-12) << g;
    }
    const double r10 = distortion_ratio(m, Word(0, {1}), Word(10, {1}));
    EXPECT_GT(r10, 0.99);
    EXPECT_LT(r10, 1.01);
}

TEST(Distortion, Errors) {
    const auto m = from_spec_uniform(no11);
    EXPECT_EQ(kind_of([&] { distortion_ratio(m, Word(0, {1, 2}), Word(1, {2})); }), ErrorKind::invalid_input);
    EXPECT_EQ(kind_of([&] { distortion_ratio(m, Word(0, {1, 1}), Word(4, {2})); }), ErrorKind::undefined_ratio);
}

TEST(Distortion, EmpiricalBoundConvergesGeometrically) {
    const auto m = from_spec_uniform(no11);
    const auto d = empirical_distortion(m, 64);
    ASSERT_EQ(d.max_deviation.size(), 64u);
    // ratios: [1][1] 1 + 2q, [1][2] and [2][1] 1 - q, [2][2] 1 + q/2 with q = (-1/2)^g;
    // at g = 1 the [1][1] entry is zero and excluded.
    EXPECT_NEAR(d.max_deviation[0], 0.5, 1e-12);
    for (std::size_t g = 2; g <= 40; ++g)
        EXPECT_NEAR(d.max_deviation[g - 1], 2.0 * std::pow(0.5, static_cast<double>(g)), 1e-12);
    EXPECT_NEAR(d.constant, 1.5, 1e-12);
}

TEST(Sample, Deterministic) {
    const auto m = from_spec_uniform(SftSpec::full_shift(3));
    EXPECT_EQ(m.sample(42, 5, 7), m.sample(42, 5, 7));
    EXPECT_NE(m.sample(42, 5, 7), m.sample(43, 5, 7));
    const Word w = m.sample(1, 5, 7);
    EXPECT_EQ(w.first(), -5);
    EXPECT_EQ(w.last(), 7);
}

TEST(Sample, BernoulliFrequency) {
    const auto m = from_spec_uniform(SftSpec::full_shift(2));
    const Word w = m.sample(2024, 0, 99'999);
    long ones = 0;
    for (Letter a : w.symbols()) ones += a == 1;
    EXPECT_NEAR(static_cast<double>(ones) / 1e5, 0.5, 0.01);
}

TEST(Sample, SingleLetterFollowsStationary) {
    const auto m = from_spec_uniform(no11);
    long ones = 0;
    const long n = 30'000;
    for (long s = 0; s < n; ++s) ones += m.sample(static_cast<std::uint64_t>(s), 0, 0).at(0) == 1;
    // binomial sd = sqrt(2/9 / n) ~ 0.0027
    EXPECT_NEAR(static_cast<double>(ones) / n, 1.0 / 3.0, 0.015);
}

TEST(Sample, RespectsSupportOnBothSides) {
    const auto m = from_spec_uniform(no11);
    for (std::uint64_t s = 0; s < 50; ++s) EXPECT_TRUE(is_admissible(m.sample(s, 200, 200), no11));
}

TEST(Sample, PairFrequenciesMatchCylinders) {
    // two-sided draws: the pair (w_{-1}, w_0) is distributed as the cylinder measure
    const MarkovMeasure m(SftSpec::full_shift(2), {{0.8, 0.2}, {0.4, 0.6}});
    const long n = 40'000;
    std::vector<double> counts(4, 0.0);
    for (long s = 0; s < n; ++s) {
        const Word w = m.sample(static_cast<std::uint64_t>(s), 1, 0);
        counts[static_cast<std::size_t>((w.at(-1) - 1) * 2 + (w.at(0) - 1))] += 1.0 / n;
    }
    for (Letter i = 1; i <= 2; ++i)
        for (Letter j = 1; j <= 2; ++j)
            EXPECT_NEAR(counts[static_cast<std::size_t>((i - 1) * 2 + (j - 1))], cylinder_measure(m, Word(0, {i, j})),
                        0.01);
}

TEST(ConstantSource, IsConstant) {
    const ConstantSource c{2};
    const Word w = c.sample(0, 3, 3);
    for (Letter a : w.symbols()) EXPECT_EQ(a, 2);
    EXPECT_EQ(w.first(), -3);
}
