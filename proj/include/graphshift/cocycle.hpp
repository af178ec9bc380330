#pragma once

// The SL(2,R) transfer-matrix cocycle over a subshift,
//
//   A^E(w) = sqrt(w_0 / w_{-1}) [[ (w_0 + w_{-1}) cos k / w_0, -w_{-1} / w_0 ],
//                                [ 1,                          0           ]],  E = k^2,
//
// whose products propagate solutions of the vertex equation
//
//   w_n u(n+1) + w_{n-1} u(n-1) - (w_n + w_{n-1}) cos(k) u(n) = 0.
//
// Long products are carried as (log-norm, unit-norm matrix) pairs.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "graphshift/error.hpp"
#include "graphshift/markov.hpp"
#include "graphshift/parallel.hpp"
#include "graphshift/rng.hpp"
#include "graphshift/sft.hpp"
#include "graphshift/stats.hpp"

namespace graphshift {

struct Sl2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    static constexpr Sl2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    double det() const { return a * d - b * c; }

    // Adjugate; equals the inverse when det = 1.
    Sl2 adjugate() const { return {d, -b, -c, a}; }

    Sl2 inverse() const {
        const double dt = det();
        return {d / dt, -b / dt, -c / dt, a / dt};
    }

    Sl2 scaled(double s) const { return {a * s, b * s, c * s, d * s}; }
    Sl2 divided(double s) const { return {a / s, b / s, c / s, d / s}; }

    // Largest singular value, closed form for 2x2.
    double norm() const {
        const double p = a + d, q = b - c, r = a - d, s = b + c;
        return 0.5 * (std::sqrt(p * p + q * q) + std::sqrt(r * r + s * s));
    }

    std::array<double, 2> apply(std::array<double, 2> v) const {
        return {a * v[0] + b * v[1], c * v[0] + d * v[1]};
    }

    bool finite() const {
        return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d);
    }

    friend Sl2 operator*(const Sl2& x, const Sl2& y) {
        return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
                x.c * y.b + x.d * y.d};
    }
};

// Entrywise max |x - y| / max(1, max|y|).
inline double relative_difference(const Sl2& x, const Sl2& y) {
    const double scale = std::max({1.0, std::abs(y.a), std::abs(y.b), std::abs(y.c), std::abs(y.d)});
    return std::max({std::abs(x.a - y.a), std::abs(x.b - y.b), std::abs(x.c - y.c),
                     std::abs(x.d - y.d)}) /
           scale;
}

class EnergyTriple {
public:
    static constexpr double kDefaultMargin = 1e-6;

    static EnergyTriple from_k(double k, double margin = kDefaultMargin) {
        if (!(k >= 0.0) || !std::isfinite(k)) fail(ErrorKind::invalid_input, "momentum k must be >= 0");
        return EnergyTriple(k, margin);
    }

    static EnergyTriple from_E(double energy, double margin = kDefaultMargin) {
        if (!(energy >= 0.0) || !std::isfinite(energy))
            fail(ErrorKind::invalid_input, "energy E must be >= 0");
        return EnergyTriple(std::sqrt(energy), margin);
    }

    // Principal branch: e_tilde in [-2, 2] -> k = arccos(e_tilde / 2) in [0, pi].
    static EnergyTriple from_e_tilde(double e_tilde, double margin = kDefaultMargin) {
        if (!(std::abs(e_tilde) <= 2.0)) fail(ErrorKind::invalid_input, "e_tilde must lie in [-2, 2]");
        return EnergyTriple(std::acos(0.5 * e_tilde), margin);
    }

    double E() const noexcept { return energy_; }
    double k() const noexcept { return k_; }
    double e_tilde() const noexcept { return e_tilde_; }
    double margin() const noexcept { return margin_; }
    double cos_k() const noexcept { return 0.5 * e_tilde_; }

    // Distance from k to the nearest multiple of pi.
    double distance_to_singular() const {
        const double r = std::fmod(k_, std::numbers::pi);
        return std::min(r, std::numbers::pi - r);
    }
    bool singular() const { return distance_to_singular() < margin_; }

    void require_regular() const {
        if (singular())
            fail(ErrorKind::singular_energy,
                 "k = " + std::to_string(k_) + " lies within the margin of pi*Z");
    }

private:
    EnergyTriple(double k, double margin)
        : energy_(k * k), k_(k), e_tilde_(2.0 * std::cos(k)), margin_(margin) {}

    double energy_, k_, e_tilde_, margin_;
};

inline Sl2 one_step(Letter omega0, Letter omega_m1, const EnergyTriple& en) {
    if (omega0 < 1 || omega_m1 < 1) fail(ErrorKind::invalid_input, "letters must be >= 1");
    en.require_regular();
    const double w0 = omega0, wm = omega_m1;
    const double s = std::sqrt(w0 / wm);
    Sl2 m{s * (w0 + wm) / w0 * en.cos_k(), -s * wm / w0, s, 0.0};
    if (std::abs(m.det() - 1.0) > 1e-9)
        fail(ErrorKind::invalid_input, "one_step: determinant drifted from 1");
    return m;
}

// One-step matrices for all letter pairs up to `max_letter`, so hot loops
// avoid recomputing square roots.
class StepTable {
public:
    StepTable(Letter max_letter, const EnergyTriple& en) : max_(max_letter) {
        table_.reserve(static_cast<std::size_t>(max_ * max_));
        for (Letter w0 = 1; w0 <= max_; ++w0)
            for (Letter wm = 1; wm <= max_; ++wm) table_.push_back(one_step(w0, wm, en));
    }

    const Sl2& operator()(Letter omega0, Letter omega_m1) const {
        return table_[static_cast<std::size_t>((omega0 - 1) * max_ + (omega_m1 - 1))];
    }

    Letter max_letter() const noexcept { return max_; }

private:
    Letter max_;
    std::vector<Sl2> table_;
};

inline Letter max_letter(const Word& w) {
    Letter m = 1;
    for (Letter a : w.symbols()) m = std::max(m, a);
    return m;
}

// exp(log_norm) * mat is the represented matrix; mat has unit operator norm.
struct LogNormProduct {
    double log_norm = 0.0;
    Sl2 mat = Sl2::identity();

    void push_left(const Sl2& factor) {
        mat = factor * mat;
        renormalize();
    }
    void push_right(const Sl2& factor) {
        mat = mat * factor;
        renormalize();
    }

    Sl2 reconstruct() const { return mat.scaled(std::exp(log_norm)); }

private:
    void renormalize() {
        const double n = mat.norm();
        if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::invalid_input, "non-finite product");
        log_norm += std::log(n);
        mat = mat.scaled(1.0 / n);
    }
};

// Window needed by A^E_n(w): each factor A^E(T^j w) reads w_{j-1}, w_j.
inline std::pair<long, long> product_window(long n) {
    if (n >= 1) return {-1, n - 1};
    if (n <= -1) return {n - 1, -1};
    return {0, -1};
}

namespace detail {

inline LogNormProduct product_with(const Word& word, const StepTable& steps, long n) {
    LogNormProduct out;
    if (n >= 1) {
        for (long j = 0; j < n; ++j) out.push_left(steps(word[j], word[j - 1]));
    } else {
        // A_n = A(T^n w)^{-1} ... A(T^{-1} w)^{-1}
        for (long j = -1; j >= n; --j) out.push_left(steps(word[j], word[j - 1]).adjugate());
    }
    return out;
}

}  // namespace detail

// A^E_n(w): A(T^{n-1}w)...A(w) for n >= 1, [A_{-n}(T^n w)]^{-1} for n <= -1, Id for n = 0.
inline LogNormProduct product(const Word& word, const EnergyTriple& en, long n) {
    en.require_regular();
    if (n == 0) return {};
    const auto [lo, hi] = product_window(n);
    word.require(lo, hi, "product");
    return detail::product_with(word, StepTable(max_letter(word), en), n);
}

// A real sequence indexed by integers starting at `first`.
struct Sequence {
    long first = 0;
    std::vector<double> values;

    long last() const { return first + static_cast<long>(values.size()) - 1; }
    double operator()(long n) const { return values[static_cast<std::size_t>(n - first)]; }
    double& operator()(long n) { return values[static_cast<std::size_t>(n - first)]; }
};

// w_n u(n+1) + w_{n-1} u(n-1) - (w_n + w_{n-1}) cos(k) u(n)
inline double trace_residual(const Sequence& u, const Word& word, long n, double k) {
    const double wn = word.at(n), wm = word.at(n - 1);
    return wn * u(n + 1) + wm * u(n - 1) - (wn + wm) * std::cos(k) * u(n);
}

// u(-1..n_max) from (u(n), u(n-1)) = sqrt(w_{-1}/w_{n-1}) A^E_n(w) (u0, u_m1).
inline Sequence solve_sequence(const Word& word, const EnergyTriple& en, double u0, double u_m1,
                               long n_max) {
    if (n_max < 0) fail(ErrorKind::invalid_input, "solve_sequence: n_max must be >= 0");
    en.require_regular();
    word.require(-1, std::max(0L, n_max - 1), "solve_sequence");
    Sequence u{-1, std::vector<double>(static_cast<std::size_t>(n_max + 2))};
    u(-1) = u_m1;
    u(0) = u0;
    const StepTable steps(max_letter(word), en);
    std::array<double, 2> x{u0, u_m1};
    const double wm1 = word[-1];
    for (long n = 1; n <= n_max; ++n) {
        x = steps(word[n - 1], word[n - 2]).apply(x);
        u(n) = std::sqrt(wm1 / word[n - 1]) * x[0];
    }
    return u;
}

struct LyapunovEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    long n = 0;
    long samples = 0;
    std::uint64_t seed = 0;
};

// Per-sample values (1/n) ln ||A^E_n(w_i)|| with w_i drawn using derive_seed(seed, i).
template <WordSource Source>
std::vector<double> lyapunov_samples(const Source& source, const EnergyTriple& en, long n, long samples,
                                     std::uint64_t seed, unsigned threads = 1) {
    if (n < 1 || samples < 1) fail(ErrorKind::invalid_input, "lyapunov: n and samples must be >= 1");
    en.require_regular();
    std::vector<double> values(static_cast<std::size_t>(samples));
    parallel_for(values.size(), threads, [&](std::size_t i) {
        const Word w = source.sample(derive_seed(seed, i), 1, n - 1);
        const StepTable steps(max_letter(w), en);
        values[i] = detail::product_with(w, steps, n).log_norm / static_cast<double>(n);
    });
    return values;
}

template <WordSource Source>
LyapunovEstimate lyapunov(const Source& source, const EnergyTriple& en, long n, long samples,
                          std::uint64_t seed, unsigned threads = 1) {
    const auto values = lyapunov_samples(source, en, n, samples, seed, threads);
    const auto me = stats::mean_stderr(values);
    if (me.mean < -1e-9) fail(ErrorKind::invalid_input, "lyapunov: negative estimate");
    return {me.mean, me.stderr_, n, samples, seed};
}

struct Holonomy {
    Sl2 matrix;
    long horizon = 0;            // n* used for the stabilization / identity check
    double max_deviation = 0.0;  // stable: max_n |H^{s,n} - H^{s,1}|; unstable: |H^u - Id|
};

namespace detail {

// [P_n]^{-1} Q_n with P_n = p_{n-1}...p_0 and Q_n = q_{n-1}...q_0, evaluated
// from the innermost pair outward so that coinciding factors cancel exactly.
inline Sl2 relative_product(const std::vector<Sl2>& p, const std::vector<Sl2>& q) {
    Sl2 x = Sl2::identity();
    for (std::size_t j = p.size(); j-- > 0;) x = (p[j].adjugate() * x * q[j]).divided(p[j].det());
    return x;
}

}  // namespace detail

// Stable holonomy [A(w')]^{-1} A(w) for w' in the local stable set of w, with
// the check that [A_n(w')]^{-1} A_n(w) does not depend on n for 1 <= n <= n*.
inline Holonomy stable_holonomy(const Word& w, const Word& w_prime, const EnergyTriple& en) {
    en.require_regular();
    const long hi = std::min(w.last(), w_prime.last());
    for (long n = 0; n <= hi; ++n)
        if (w.covers(n, n) && w_prime.covers(n, n) && w[n] != w_prime[n])
            fail(ErrorKind::not_in_stable_set, "words differ at index " + std::to_string(n));
    const long horizon = hi + 1;  // A_n reads up to index n - 1
    if (horizon < 1) fail(ErrorKind::invalid_input, "stable_holonomy: windows must cover [-1, 0]");
    w.require(-1, horizon - 1, "stable_holonomy");
    w_prime.require(-1, horizon - 1, "stable_holonomy");
    const StepTable steps(std::max(max_letter(w), max_letter(w_prime)), en);
    std::vector<Sl2> p, q;
    Holonomy out;
    out.horizon = horizon;
    for (long n = 1; n <= horizon; ++n) {
        p.push_back(steps(w_prime[n - 1], w_prime[n - 2]));
        q.push_back(steps(w[n - 1], w[n - 2]));
        const Sl2 h = detail::relative_product(p, q);
        if (n == 1) out.matrix = h;
        out.max_deviation = std::max(out.max_deviation, relative_difference(h, out.matrix));
    }
    return out;
}

// Unstable holonomy [A_{-n}(w')]^{-1} A_{-n}(w) at n = n*, for w' in the
// local unstable set of w; the deviation from the identity is reported.
inline Holonomy unstable_holonomy(const Word& w, const Word& w_prime, const EnergyTriple& en) {
    en.require_regular();
    const long lo = std::max(w.first(), w_prime.first());
    for (long n = lo; n <= 0; ++n)
        if (w.covers(n, n) && w_prime.covers(n, n) && w[n] != w_prime[n])
            fail(ErrorKind::not_in_unstable_set, "words differ at index " + std::to_string(n));
    const long horizon = -lo - 1;  // A_{-n} reads indices -n-1 .. -1
    if (horizon < 1) fail(ErrorKind::invalid_input, "unstable_holonomy: windows must cover [-2, 0]");
    w.require(-horizon - 1, 0, "unstable_holonomy");
    w_prime.require(-horizon - 1, 0, "unstable_holonomy");
    const StepTable steps(std::max(max_letter(w), max_letter(w_prime)), en);
    // A_{-n} = A(T^{-n})^{-1} ... A(T^{-1})^{-1}; its inverse is A(T^{-1}) ... A(T^{-n}).
    // [A_{-n}(w')]^{-1} A_{-n}(w) = A'(T^{-1}) ... A'(T^{-n}) A(T^{-n})^{-1} ... A(T^{-1})^{-1}.
    Sl2 x = Sl2::identity();
    for (long j = -horizon; j <= -1; ++j) {
        const Sl2& ap = steps(w_prime[j], w_prime[j - 1]);
        const Sl2& a = steps(w[j], w[j - 1]);
        x = (ap * x * a.adjugate()).divided(a.det());
    }
    return {x, horizon, relative_difference(x, Sl2::identity())};
}

struct ProjectiveHistogram {
    std::vector<double> mass;  // bins over [0, pi), summing to 1

    std::size_t bins() const { return mass.size(); }
};

inline std::size_t angle_bin(double angle, std::size_t bins) {
    double t = std::fmod(angle, std::numbers::pi);
    if (t < 0.0) t += std::numbers::pi;
    auto b = static_cast<std::size_t>(t / std::numbers::pi * static_cast<double>(bins));
    return std::min(b, bins - 1);
}

// Histogram of the directions A^E_j(w) v0, 0 <= j < n, pooled over `samples`
// draws of w.
template <WordSource Source>
ProjectiveHistogram cesaro_projective(const Source& source, const EnergyTriple& en, double v0_angle,
                                      long n, std::size_t bins, std::uint64_t seed, long samples = 64,
                                      unsigned threads = 1) {
    if (bins < 8) fail(ErrorKind::invalid_input, "cesaro_projective: bins must be >= 8");
    if (n < 1 || samples < 1) fail(ErrorKind::invalid_input, "cesaro_projective: n, samples >= 1");
    en.require_regular();
    std::vector<std::vector<double>> counts(static_cast<std::size_t>(samples));
    parallel_for(counts.size(), threads, [&](std::size_t i) {
        auto& c = counts[i];
        c.assign(bins, 0.0);
        const Word w = source.sample(derive_seed(seed, i), 1, std::max(0L, n - 2));
        const StepTable steps(max_letter(w), en);
        std::array<double, 2> v{std::cos(v0_angle), std::sin(v0_angle)};
        for (long j = 0; j < n; ++j) {
            c[angle_bin(std::atan2(v[1], v[0]), bins)] += 1.0;
            if (j + 1 == n) break;
            v = steps(w[j], w[j - 1]).apply(v);
            const double len = std::hypot(v[0], v[1]);
            v = {v[0] / len, v[1] / len};
        }
    });
    ProjectiveHistogram h{std::vector<double>(bins, 0.0)};
    double total = 0.0;
    for (const auto& c : counts)
        for (std::size_t b = 0; b < bins; ++b) h.mass[b] += c[b];
    for (double m : h.mass) total += m;
    for (double& m : h.mass) m /= total;
    return h;
}

inline double total_variation(const ProjectiveHistogram& p, const ProjectiveHistogram& q) {
    if (p.bins() != q.bins()) fail(ErrorKind::invalid_input, "histograms have different binning");
    double tv = 0.0;
    for (std::size_t b = 0; b < p.bins(); ++b) tv += std::abs(p.mass[b] - q.mass[b]);
    return 0.5 * tv;
}

}  // namespace graphshift
