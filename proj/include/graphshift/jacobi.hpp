#pragma once

// The Jacobi operator (H u)(n) = a_n u(n+1) + a_{n-1} u(n-1) on l^2(Z), with
//
//   a_n = 2 w_n / sqrt((w_{n-1} + w_n)(w_n + w_{n+1})),
//
// its restrictions to boxes {0..N-1}, the shifted determinants det(H_N - e),
// the boundary-determinant form of the resolvent, the transfer matrix
// rebuilt from determinants, a tridiagonal eigensolver, and the quantum-graph
// Kirchhoff check. Generalized eigenvalues e = 2 cos k of H correspond to
// energies E = k^2 of the graph Laplacian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "graphshift/cocycle.hpp"
#include "graphshift/error.hpp"
#include "graphshift/rng.hpp"
#include "graphshift/sft.hpp"

namespace graphshift {

inline double alpha(Letter om_km1, Letter om_k, Letter om_kp1) {
    const double a = om_km1, b = om_k, c = om_kp1;
    return 2.0 * b / std::sqrt((a + b) * (b + c));
}

// Symmetric tridiagonal matrix with zero diagonal; offdiag[i] couples i and i+1.
struct Tridiag {
    std::vector<double> offdiag;
    long n = 0;

    long size() const noexcept { return n; }
    double coupling(long i) const { return offdiag[static_cast<std::size_t>(i)]; }

    // max_i (a_{i-1} + a_i): Gershgorin bound on |eigenvalue|.
    double gershgorin() const {
        double g = 0.0;
        for (long i = 0; i < n; ++i) {
            const double left = i > 0 ? coupling(i - 1) : 0.0;
            const double right = i + 1 < n ? coupling(i) : 0.0;
            g = std::max(g, left + right);
        }
        return g;
    }
};

// H restricted to {0..N-1}: offdiag[k] = alpha(w_{k-1}, w_k, w_{k+1}).
inline Tridiag build(const Word& word, long N) {
    if (N < 1) fail(ErrorKind::invalid_input, "build: N must be >= 1");
    word.require(-1, N - 1, "build");
    Tridiag t;
    t.n = N;
    t.offdiag.reserve(static_cast<std::size_t>(N - 1));
    for (long k = 0; k + 1 < N; ++k) t.offdiag.push_back(alpha(word[k - 1], word[k], word[k + 1]));
    return t;
}

// Determinant as sign * exp(log_abs); zero is sign 0, log_abs = -inf.
struct DetValue {
    double log_abs = 0.0;
    int sign = 1;

    static DetValue zero() { return {-std::numeric_limits<double>::infinity(), 0}; }
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
    DetValue negated_if(bool flip) const { return {log_abs, flip ? -sign : sign}; }
};

namespace detail {

struct DetRun {
    DetValue det;
    // |D_m| / (|e D_{m-1}| + a^2 |D_{m-2}|) at the last step: how much the
    // final recurrence step cancelled. 1 when no subtraction occurred.
    double last_step_ratio = 1.0;
};

// det(H_block - e) for sites [begin, begin + len) via D_0 = 1, D_1 = -e,
// D_m = -e D_{m-1} - a_{begin+m-2}^2 D_{m-2}, rescaled every step.
inline DetRun det_run(const Tridiag& t, long begin, long len, double e_tilde) {
    if (len < -1 || begin < 0 || begin + std::max(len, 0L) > t.size())
        fail(ErrorKind::invalid_input, "determinant block out of range");
    if (len == -1) return {DetValue::zero(), 0.0};
    if (len == 0) return {{0.0, 1}, 1.0};
    double prev = 1.0, cur = -e_tilde, log_scale = 0.0;
    double ratio = 1.0;
    for (long m = 2; m <= len; ++m) {
        const double a = t.coupling(begin + m - 2);
        const double t1 = -e_tilde * cur, t2 = -a * a * prev;
        const double next = t1 + t2;
        const double denom = std::abs(t1) + std::abs(t2);
        ratio = denom > 0.0 ? std::abs(next) / denom : 0.0;
        prev = cur;
        cur = next;
        const double s = std::max(std::abs(prev), std::abs(cur));
        if (s > 0.0) {
            prev /= s;
            cur /= s;
            log_scale += std::log(s);
        }
    }
    if (len == 1) ratio = e_tilde == 0.0 ? 0.0 : 1.0;
    if (cur == 0.0) return {DetValue::zero(), 0.0};
    return {{log_scale + std::log(std::abs(cur)), cur > 0.0 ? 1 : -1}, ratio};
}

}  // namespace detail

// det(H_block - e) for the block of sites [begin, begin + len); len = 0 gives
// 1 and len = -1 gives 0 (the values continuing the three-term recurrence).
inline DetValue det_block(const Tridiag& t, long begin, long len, double e_tilde) {
    return detail::det_run(t, begin, len, e_tilde).det;
}

inline DetValue det_shifted(const Tridiag& t, double e_tilde) { return det_block(t, 0, t.size(), e_tilde); }

inline constexpr double kResonanceTol = 1e-12;

// Resolvent entry (H_N - e)^{-1}(j, k) from boundary determinants:
//   (-1)^{k-j} det(H_[0,j) - e) det(H_[k+1,N) - e) / det(H_N - e) * prod_{i=j}^{k-1} a_i.
inline double green(const Tridiag& t, double e_tilde, long j, long k) {
    const long N = t.size();
    if (j > k) std::swap(j, k);
    if (j < 0 || k >= N) fail(ErrorKind::invalid_input, "green: indices outside [0, N-1]");
    const auto full = detail::det_run(t, 0, N, e_tilde);
    if (full.det.sign == 0 || full.last_step_ratio < kResonanceTol)
        fail(ErrorKind::resonant_energy, "green: e_tilde is (numerically) an eigenvalue");
    const DetValue left = det_block(t, 0, j, e_tilde);
    const DetValue right = det_block(t, k + 1, N - k - 1, e_tilde);
    if (left.sign == 0 || right.sign == 0) return 0.0;
    double log_mag = left.log_abs + right.log_abs - full.det.log_abs;
    for (long i = j; i < k; ++i) log_mag += std::log(t.coupling(i));
    const int parity = ((k - j) % 2 == 0) ? 1 : -1;
    return parity * left.sign * right.sign * full.det.sign * std::exp(log_mag);
}

inline double green(const Word& word, long N, const EnergyTriple& en, long j, long k) {
    return green(build(word, N), en.e_tilde(), j, k);
}

// A^E_N(w) assembled from determinants:
//   A_N = sqrt(w_{N-1}/w_{-1}) diag(1/sqrt(w_N + w_{N-1}), 1/sqrt(w_{N-1} + w_{N-2}))
//         * Atilde * diag(sqrt(w_0 + w_{-1}), sqrt(w_{-1} + w_{-2})),
//   Atilde = [[ d(H_N) / P_N,     -a_{-1} d(H'_{N-1}) / P_N     ],
//             [ d(H_{N-1}) / P_{N-1}, -a_{-1} d(H'_{N-2}) / P_{N-1} ]],
// with d(X) = det(e - X), H' the box shifted by one site, P_m = prod_{i<m} a_i.
inline Sl2 transfer_from_dets(const Word& word, long N, const EnergyTriple& en) {
    if (N < 1) fail(ErrorKind::invalid_input, "transfer_from_dets: N must be >= 1");
    en.require_regular();
    word.require(-2, N, "transfer_from_dets");
    const Tridiag t = build(word, N);
    const double e = en.e_tilde();
    auto det_e_minus = [&](long begin, long len) {
        // det(e - X) = (-1)^len det(X - e)
        return det_block(t, begin, len, e).negated_if(len > 0 && len % 2 == 1);
    };
    const DetValue d1 = det_e_minus(0, N);
    const DetValue d2 = det_e_minus(1, N - 1);
    const DetValue d3 = det_e_minus(0, N - 1);
    const DetValue d4 = det_e_minus(1, N - 2);
    double log_p_nm1 = 0.0;
    for (long i = 0; i + 1 < N; ++i) log_p_nm1 += std::log(t.coupling(i));
    const double log_p_n = log_p_nm1 + std::log(alpha(word[N - 2], word[N - 1], word[N]));
    const double a_m1 = alpha(word[-2], word[-1], word[0]);

    auto om = [&](long i) { return static_cast<double>(word[i]); };
    const double pre = 0.5 * (std::log(om(N - 1)) - std::log(om(-1)));
    const double row0 = -0.5 * std::log(om(N) + om(N - 1));
    const double row1 = -0.5 * std::log(om(N - 1) + om(N - 2));
    const double col0 = 0.5 * std::log(om(0) + om(-1));
    const double col1 = 0.5 * std::log(om(-1) + om(-2));

    auto entry = [&](const DetValue& d, double log_p, double extra_log, int extra_sign, double row,
                     double col) {
        if (d.sign == 0) return 0.0;
        return extra_sign * d.sign * std::exp(pre + row + col + d.log_abs - log_p + extra_log);
    };
    const double la = std::log(a_m1);
    return {entry(d1, log_p_n, 0.0, 1, row0, col0), entry(d2, log_p_n, la, -1, row0, col1),
            entry(d3, log_p_nm1, 0.0, 1, row1, col0), entry(d4, log_p_nm1, la, -1, row1, col1)};
}

// ---------------------------------------------------------------------------
// Eigensolver: Sturm bisection for eigenvalues, inverse iteration for vectors.

// Number of eigenvalues of t strictly below x.
inline long sturm_count(const Tridiag& t, double x) {
    double max_a2 = 1.0;
    for (double a : t.offdiag) max_a2 = std::max(max_a2, a * a);
    const double pivmin = std::numeric_limits<double>::min() * max_a2;
    long count = 0;
    double q = -x;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
    for (long i = 1; i < t.size(); ++i) {
        const double a = t.coupling(i - 1);
        q = -x - a * a / q;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < 0.0) ++count;
    }
    return count;
}

// m-th smallest eigenvalue (0-based).
inline double bisect_eigenvalue(const Tridiag& t, long m) {
    const double g = t.gershgorin();
    const double abs_tol = std::numeric_limits<double>::epsilon() * std::max(g, 1.0);
    double lo = -g - abs_tol, hi = g + abs_tol;
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= abs_tol || mid <= lo || mid >= hi) break;
        if (sturm_count(t, mid) > m) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

// LU with partial pivoting of the tridiagonal matrix t - x I (LAPACK dgttrf
// layout); pivots smaller than `tiny` are replaced by +-tiny.
struct ShiftedLU {
    std::vector<double> dl, d, du, du2;
    std::vector<char> swapped;

    ShiftedLU(const Tridiag& t, double x, double tiny) {
        const auto n = static_cast<std::size_t>(t.size());
        d.assign(n, -x);
        dl.assign(t.offdiag.begin(), t.offdiag.end());
        du = dl;
        du2.assign(n > 2 ? n - 2 : 0, 0.0);
        swapped.assign(n > 0 ? n - 1 : 0, 0);
        auto guard = [tiny](double& p) {
            if (std::abs(p) < tiny) p = p < 0.0 ? -tiny : tiny;
        };
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(d[i]) >= std::abs(dl[i])) {
                guard(d[i]);
                const double fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                const double fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                const double temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if (i + 2 < n) {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = 1;
            }
        }
        if (n > 0) guard(d[n - 1]);
    }

    void solve(std::span<double> b) const {
        const std::size_t n = d.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!swapped[i]) {
                b[i + 1] -= dl[i] * b[i];
            } else {
                const double temp = b[i] - dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            }
        }
        if (n == 0) return;
        b[n - 1] /= d[n - 1];
        if (n < 2) return;
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for (std::size_t i = n - 2; i-- > 0;)
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
};

inline void normalize(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    for (double& x : v) x /= s;
}

}  // namespace detail

// Solves (t - x I) y = rhs by pivoted tridiagonal elimination.
inline std::vector<double> solve_shifted(const Tridiag& t, double x, std::vector<double> rhs) {
    if (static_cast<long>(rhs.size()) != t.size()) fail(ErrorKind::invalid_input, "solve_shifted: size");
    detail::ShiftedLU lu(t, x, 0.0);
    for (double p : lu.d)
        if (p == 0.0) fail(ErrorKind::resonant_energy, "solve_shifted: singular system");
    lu.solve(rhs);
    return rhs;
}

struct EigenSystem {
    std::vector<double> values;                // ascending
    std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

inline constexpr double kClusterTol = 1e-5;

// Eigenpairs with 0-based indices [first, last) in ascending order.
inline EigenSystem eigensolve_range(const Tridiag& t, long first, long last) {
    const long N = t.size();
    if (N < 1) fail(ErrorKind::invalid_input, "eigensolve: N must be >= 1");
    first = std::max(first, 0L);
    last = std::min(last, N);
    EigenSystem out;
    if (first >= last) return out;
    const double norm = std::max(t.gershgorin(), 1e-300);
    const double tiny = std::numeric_limits<double>::epsilon() * norm;
    for (long m = first; m < last; ++m) out.values.push_back(bisect_eigenvalue(t, m));

    std::size_t cluster_start = 0;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (i > 0 && out.values[i] - out.values[i - 1] > kClusterTol * norm) cluster_start = i;
        const detail::ShiftedLU lu(t, out.values[i], tiny);
        Engine eng(derive_seed(0x5eed, static_cast<std::uint64_t>(first) + i));
        std::vector<double> v(static_cast<std::size_t>(N));
        for (double& x : v) x = 2.0 * uniform01(eng) - 1.0;
        for (int iter = 0; iter < 3; ++iter) {
            lu.solve(v);
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t j = cluster_start; j < i; ++j) {
                    const auto& u = out.vectors[j];
                    double dot = 0.0;
                    for (std::size_t s = 0; s < v.size(); ++s) dot += u[s] * v[s];
                    for (std::size_t s = 0; s < v.size(); ++s) v[s] -= dot * u[s];
                }
            detail::normalize(v);
        }
        const auto big = std::max_element(v.begin(), v.end(),
                                           [](double a, double b) { return std::abs(a) < std::abs(b); });
        if (*big < 0.0)
            for (double& x : v) x = -x;
        out.vectors.push_back(std::move(v));
    }
    return out;
}

inline EigenSystem eigensolve(const Tridiag& t) { return eigensolve_range(t, 0, t.size()); }

// Eigenpairs with eigenvalue in [lo, hi).
inline EigenSystem eigensolve_window(const Tridiag& t, double lo, double hi) {
    return eigensolve_range(t, sturm_count(t, lo), sturm_count(t, hi));
}

// (t v)_i
inline std::vector<double> multiply(const Tridiag& t, std::span<const double> v) {
    const long N = t.size();
    std::vector<double> out(static_cast<std::size_t>(N), 0.0);
    for (long i = 0; i + 1 < N; ++i) {
        const auto a = t.coupling(i);
        out[static_cast<std::size_t>(i)] += a * v[static_cast<std::size_t>(i + 1)];
        out[static_cast<std::size_t>(i + 1)] += a * v[static_cast<std::size_t>(i)];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quantum-graph side.

// u(x) on one unit edge [x_left, x_left + 1] solving -u'' = k^2 u with the
// given endpoint values.
struct EdgeSolution {
    double x_left = 0.0;
    double u_left = 0.0;
    double u_right = 0.0;
    double k = 0.0;

    double value(double x) const {
        return (u_left * std::sin(k * (x_left + 1.0 - x)) + u_right * std::sin(k * (x - x_left))) /
               std::sin(k);
    }
    double derivative(double x) const {
        return k * (-u_left * std::cos(k * (x_left + 1.0 - x)) + u_right * std::cos(k * (x - x_left))) /
               std::sin(k);
    }
};

// Kirchhoff mismatch at vertex n: sum of u' at n over the w_n edges to the
// right minus the sum over the w_{n-1} edges to the left. Equals
// (k / sin k) times the vertex-equation residual.
inline double kirchhoff_residual(double u_nm1, double u_n, double u_np1, Letter om_nm1, Letter om_n, double k) {
    if (EnergyTriple::from_k(std::abs(k)).singular())
        fail(ErrorKind::singular_energy, "kirchhoff_residual: sin k too close to 0");
    const double vertex = 0.0;  // translation invariant; place vertex n at x = 0
    const EdgeSolution right{vertex, u_n, u_np1, k};
    const EdgeSolution left{vertex - 1.0, u_nm1, u_n, k};
    double out = 0.0;
    for (Letter j = 0; j < om_n; ++j) out += right.derivative(vertex);
    for (Letter j = 0; j < om_nm1; ++j) out -= left.derivative(vertex);
    return out;
}

// w(n) = sqrt(w_n + w_{n-1}) u(n) over the index range of u.
inline Sequence weighted_conjugation(const Sequence& u, const Word& word) {
    word.require(u.first - 1, u.last(), "weighted_conjugation");
    Sequence w{u.first, std::vector<double>(u.values.size())};
    for (long n = u.first; n <= u.last(); ++n)
        w(n) = std::sqrt(static_cast<double>(word[n] + word[n - 1])) * u(n);
    return w;
}

// For u solving the vertex equation with u(-1) = 0, returns
// max_i |((H_N - e) w + a_{N-1} w(N) e_{N-1})_i| / max|w|, which vanishes.
inline double boundary_identity_deviation(const Sequence& u, const Word& word, long N, const EnergyTriple& en) {
    if (u.first > -1 || u.last() < N) fail(ErrorKind::invalid_input, "boundary identity: u must cover [-1, N]");
    if (u(-1) != 0.0) fail(ErrorKind::invalid_input, "boundary identity requires u(-1) = 0");
    word.require(-1, N, "boundary identity");
    const Tridiag t = build(word, N);
    const Sequence w = weighted_conjugation(Sequence{0, {u.values.begin() + 1, u.values.begin() + N + 2}}, word);
    std::vector<double> box(w.values.begin(), w.values.begin() + N);
    auto r = multiply(t, box);
    double scale = 0.0, dev = 0.0;
    for (long i = 0; i < N; ++i) r[static_cast<std::size_t>(i)] -= en.e_tilde() * box[static_cast<std::size_t>(i)];
    r[static_cast<std::size_t>(N - 1)] += alpha(word[N - 2], word[N - 1], word[N]) * w(N);
    for (double x : w.values) scale = std::max(scale, std::abs(x));
    for (double x : r) dev = std::max(dev, std::abs(x));
    return scale > 0.0 ? dev / scale : dev;
}

// w on [a, b] rebuilt from w(a-1), w(b+1) through the box resolvent:
//   w(n) = -G_[a,b](n, a) a_{a-1} w(a-1) - G_[a,b](n, b) a_b w(b+1).
inline Sequence poisson_reconstruct(const Sequence& w, const Word& word, long a, long b, const EnergyTriple& en) {
    if (b < a) fail(ErrorKind::invalid_input, "poisson_reconstruct: empty interval");
    if (w.first > a - 1 || w.last() < b + 1) fail(ErrorKind::invalid_input, "poisson_reconstruct: w too short");
    word.require(a - 2, b + 1, "poisson_reconstruct");
    const Tridiag box = build(shift(word, a), b - a + 1);
    const double left = alpha(word[a - 2], word[a - 1], word[a]) * w(a - 1);
    const double right = alpha(word[b - 1], word[b], word[b + 1]) * w(b + 1);
    Sequence out{a, std::vector<double>(static_cast<std::size_t>(b - a + 1))};
    for (long n = a; n <= b; ++n)
        out(n) = -green(box, en.e_tilde(), n - a, 0) * left - green(box, en.e_tilde(), n - a, b - a) * right;
    return out;
}

}  // namespace graphshift
