#pragma once

// Stationary Markov measures on a subshift of finite type. A Markov chain
// whose transition matrix is positive exactly on the admissible pairs, and
// which is irreducible and aperiodic, gives an ergodic shift-invariant
// measure with full support, bounded distortion, and local product structure.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "graphshift/error.hpp"
#include "graphshift/rng.hpp"
#include "graphshift/sft.hpp"

namespace graphshift {

using Matrix = std::vector<std::vector<double>>;

namespace detail {

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.size();
    Matrix c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

// BFS distances from vertex 0 over edges with positive weight; -1 = unreachable.
inline std::vector<int> bfs_levels(const Matrix& p, bool reverse) {
    const std::size_t n = p.size();
    std::vector<int> level(n, -1);
    std::queue<std::size_t> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v) {
            const double w = reverse ? p[v][u] : p[u][v];
            if (w > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            }
        }
    }
    return level;
}

inline Letter draw_letter(const std::vector<double>& probs, Engine& eng) {
    const double u = uniform01(eng);
    double acc = 0.0;
    Letter last_positive = 1;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0) continue;
        last_positive = static_cast<Letter>(j + 1);
        acc += probs[j];
        if (u < acc) return last_positive;
    }
    return last_positive;
}

}  // namespace detail

class MarkovMeasure {
public:
    static constexpr double kStochasticTol = 1e-12;
    static constexpr double kPowerTol = 1e-14;
    static constexpr long kPowerCap = 1'000'000;

    MarkovMeasure(SftSpec spec, Matrix transition)
        : spec_(std::move(spec)), transition_(std::move(transition)) {
        const auto l = static_cast<std::size_t>(spec_.alphabet_size());
        if (transition_.size() != l)
            fail(ErrorKind::invalid_input, "transition matrix must be l x l");
        for (std::size_t i = 0; i < l; ++i) {
            if (transition_[i].size() != l)
                fail(ErrorKind::invalid_input, "transition matrix must be l x l");
            double row = 0.0;
            for (std::size_t j = 0; j < l; ++j) {
                const double p = transition_[i][j];
                const bool ok = spec_.allowed(static_cast<Letter>(i + 1), static_cast<Letter>(j + 1));
                if (!std::isfinite(p) || p < 0.0 || (p > 0.0) != ok)
                    fail(ErrorKind::invalid_input,
                         "transition[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) +
                             "] must be positive exactly on admissible pairs");
                row += p;
            }
            if (std::abs(row - 1.0) > kStochasticTol)
                fail(ErrorKind::invalid_input, "row " + std::to_string(i + 1) + " does not sum to 1");
        }
        check_irreducible_aperiodic();
        stationary_ = power_iterate();
        reversed_ = Matrix(l, std::vector<double>(l, 0.0));
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j < l; ++j)
                reversed_[j][i] = stationary_[i] * transition_[i][j] / stationary_[j];
    }

    const SftSpec& spec() const noexcept { return spec_; }
    const Matrix& transition() const noexcept { return transition_; }
    const std::vector<double>& stationary() const noexcept { return stationary_; }
    // reversed()[j][i] = P(omega_{n-1} = i | omega_n = j).
    const Matrix& reversed() const noexcept { return reversed_; }

    double p(Letter i, Letter j) const {
        return transition_[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
    }
    double pi(Letter i) const { return stationary_[static_cast<std::size_t>(i - 1)]; }

    // Exact draw from the measure restricted to [-n_left, n_right].
    Word sample(std::uint64_t seed, long n_left, long n_right) const {
        if (n_left < 0 || n_right < 0) fail(ErrorKind::invalid_input, "sample: negative extent");
        Engine eng(seed);
        std::vector<Letter> s(static_cast<std::size_t>(n_left + n_right + 1));
        const auto zero = static_cast<std::size_t>(n_left);
        s[zero] = detail::draw_letter(stationary_, eng);
        for (std::size_t t = zero + 1; t < s.size(); ++t)
            s[t] = detail::draw_letter(transition_[static_cast<std::size_t>(s[t - 1] - 1)], eng);
        for (std::size_t t = zero; t-- > 0;)
            s[t] = detail::draw_letter(reversed_[static_cast<std::size_t>(s[t + 1] - 1)], eng);
        return Word(-n_left, std::move(s));
    }

private:
    void check_irreducible_aperiodic() const {
        const auto fwd = detail::bfs_levels(transition_, false);
        const auto bwd = detail::bfs_levels(transition_, true);
        for (std::size_t v = 0; v < fwd.size(); ++v)
            if (fwd[v] < 0 || bwd[v] < 0)
                fail(ErrorKind::unsupported_measure, "allowed transition graph is reducible");
        // Period = gcd over edges u->v of level(u) + 1 - level(v).
        int period = 0;
        for (std::size_t u = 0; u < fwd.size(); ++u)
            for (std::size_t v = 0; v < fwd.size(); ++v)
                if (transition_[u][v] > 0.0) period = std::gcd(period, std::abs(fwd[u] + 1 - fwd[v]));
        if (period != 1)
            fail(ErrorKind::unsupported_measure,
                 "allowed transition graph is periodic (period " + std::to_string(period) + ")");
    }

    std::vector<double> power_iterate() const {
        const std::size_t l = transition_.size();
        std::vector<double> cur(l, 1.0 / static_cast<double>(l)), next(l);
        for (long it = 0; it < kPowerCap; ++it) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t j = 0; j < l; ++j) next[j] += cur[i] * transition_[i][j];
            const double total = std::accumulate(next.begin(), next.end(), 0.0);
            double delta = 0.0;
            for (std::size_t j = 0; j < l; ++j) {
                next[j] /= total;
                delta = std::max(delta, std::abs(next[j] - cur[j]));
            }
            cur.swap(next);
            if (delta < kPowerTol) {
                for (double x : cur)
                    if (!(x > 0.0)) fail(ErrorKind::unsupported_measure, "stationary vector not positive");
                return cur;
            }
        }
        fail(ErrorKind::unsupported_measure, "power iteration did not converge");
    }

    SftSpec spec_;
    Matrix transition_;
    std::vector<double> stationary_;
    Matrix reversed_;
};

// transition[i][j] = 1/outdeg(i) on admissible pairs.
inline MarkovMeasure from_spec_uniform(const SftSpec& spec) {
    const int l = spec.alphabet_size();
    Matrix p(static_cast<std::size_t>(l), std::vector<double>(static_cast<std::size_t>(l), 0.0));
    for (Letter i = 1; i <= l; ++i) {
        const int deg = spec.out_degree(i);
        if (deg == 0) fail(ErrorKind::unsupported_measure, "letter " + std::to_string(i) + " is a dead end");
        for (Letter j = 1; j <= l; ++j)
            if (spec.allowed(i, j))
                p[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] = 1.0 / deg;
    }
    return MarkovMeasure(spec, std::move(p));
}

inline Word sample(const MarkovMeasure& m, std::uint64_t seed, long n_left, long n_right) {
    return m.sample(seed, n_left, n_right);
}

// mu([n; w_0..w_k]) = pi(w_0) prod_t P[w_t][w_{t+1}], independent of n.
inline double cylinder_measure(const MarkovMeasure& m, const Word& word) {
    if (!is_admissible(word, m.spec())) return 0.0;
    const auto& s = word.symbols();
    double mass = m.pi(s.front());
    for (std::size_t t = 0; t + 1 < s.size(); ++t) mass *= m.p(s[t], s[t + 1]);
    return mass;
}

inline Matrix transition_power(const MarkovMeasure& m, long g) {
    const std::size_t l = m.transition().size();
    Matrix r(l, std::vector<double>(l, 0.0));
    for (std::size_t i = 0; i < l; ++i) r[i][i] = 1.0;
    for (long t = 0; t < g; ++t) r = detail::matmul(r, m.transition());
    return r;
}

// mu(C1 n C2) / (mu(C1) mu(C2)) for cylinders with w2 strictly right of w1:
// P^g[last(w1)][first(w2)] / pi(first(w2)), g = w2.first - w1.last.
inline double distortion_ratio(const MarkovMeasure& m, const Word& w1, const Word& w2) {
    if (w2.first() <= w1.last())
        fail(ErrorKind::invalid_input, "distortion_ratio: w2 must lie strictly to the right of w1");
    if (cylinder_measure(m, w1) == 0.0 || cylinder_measure(m, w2) == 0.0)
        fail(ErrorKind::undefined_ratio, "distortion_ratio: empty cylinder");
    const long gap = w2.first() - w1.last();
    const Matrix pg = transition_power(m, gap);
    const Letter a = w1.symbols().back();
    const Letter b = w2.symbols().front();
    return pg[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)] / m.pi(b);
}

struct DistortionBound {
    double constant = 1.0;              // max of r and 1/r over nonzero ratios
    std::vector<double> max_deviation;  // per gap g = 1..max_gap: max |r - 1|
};

// Empirical bounded-distortion constant over all letter pairs and gaps 1..max_gap.
inline DistortionBound empirical_distortion(const MarkovMeasure& m, long max_gap) {
    DistortionBound out;
    const std::size_t l = m.transition().size();
    Matrix pg = transition_power(m, 0);
    for (long g = 1; g <= max_gap; ++g) {
        pg = detail::matmul(pg, m.transition());
        double dev = 0.0;
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j < l; ++j) {
                if (pg[i][j] <= 0.0) continue;
                const double r = pg[i][j] / m.stationary()[j];
                out.constant = std::max({out.constant, r, 1.0 / r});
                dev = std::max(dev, std::abs(r - 1.0));
            }
        out.max_deviation.push_back(dev);
    }
    return out;
}

// Point mass on the constant sequence letter...letter (a fixed point of T).
struct ConstantSource {
    Letter letter = 1;

    Word sample(std::uint64_t /*seed*/, long n_left, long n_right) const {
        if (n_left < 0 || n_right < 0) fail(ErrorKind::invalid_input, "sample: negative extent");
        return Word(-n_left, std::vector<Letter>(static_cast<std::size_t>(n_left + n_right + 1), letter));
    }
};

template <class S>
concept WordSource = requires(const S& s, std::uint64_t seed, long n) {
    { s.sample(seed, n, n) } -> std::same_as<Word>;
};

}  // namespace graphshift
