#pragma once

// Subshifts of finite type over the alphabet {1..l}: admissibility, the shift,
// the sequence metric, and the fixed-point hypotheses required by the
// localization theorem. Infinite sequences are represented by finite windows
// (Word); operations that need more of a sequence than a window holds fail
// with invalid-input instead of truncating.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "graphshift/error.hpp"

namespace graphshift {

using Letter = int;

class SftSpec {
public:
    SftSpec(int alphabet_size, std::set<std::pair<Letter, Letter>> forbidden)
        : size_(alphabet_size), forbidden_(std::move(forbidden)) {
        if (size_ < 2) fail(ErrorKind::invalid_input, "alphabet size must be >= 2");
        for (auto [i, j] : forbidden_) {
            if (!in_range(i) || !in_range(j))
                fail(ErrorKind::invalid_input, "forbidden pair (" + std::to_string(i) + "," +
                                                   std::to_string(j) + ") out of range");
        }
        allowed_.assign(static_cast<std::size_t>(size_ * size_), 1);
        for (auto [i, j] : forbidden_) allowed_[index(i, j)] = 0;
        core_ = prune_to_core();
        if (std::none_of(core_.begin(), core_.end(), [](bool b) { return b; }))
            fail(ErrorKind::invalid_input, "no bi-infinite admissible sequence exists");
    }

    static SftSpec full_shift(int alphabet_size) { return SftSpec(alphabet_size, {}); }

    int alphabet_size() const noexcept { return size_; }
    const std::set<std::pair<Letter, Letter>>& forbidden() const noexcept { return forbidden_; }

    bool in_range(Letter a) const noexcept { return a >= 1 && a <= size_; }

    bool allowed(Letter i, Letter j) const {
        if (!in_range(i) || !in_range(j))
            fail(ErrorKind::invalid_input, "letter out of range 1.." + std::to_string(size_));
        return allowed_[index(i, j)] != 0;
    }

    // Letters that occur in some bi-infinite admissible sequence.
    bool in_core(Letter a) const { return in_range(a) && core_[static_cast<std::size_t>(a - 1)]; }

    int out_degree(Letter i) const {
        int d = 0;
        for (Letter j = 1; j <= size_; ++j) d += allowed(i, j) ? 1 : 0;
        return d;
    }

private:
    std::size_t index(Letter i, Letter j) const {
        return static_cast<std::size_t>((i - 1) * size_ + (j - 1));
    }

    // Repeatedly drop letters with no admissible successor or predecessor
    // among the surviving letters.
    std::vector<bool> prune_to_core() const {
        std::vector<bool> alive(static_cast<std::size_t>(size_), true);
        bool changed = true;
        while (changed) {
            changed = false;
            for (Letter v = 1; v <= size_; ++v) {
                if (!alive[static_cast<std::size_t>(v - 1)]) continue;
                bool has_in = false, has_out = false;
                for (Letter u = 1; u <= size_; ++u) {
                    if (!alive[static_cast<std::size_t>(u - 1)]) continue;
                    has_out = has_out || allowed_[index(v, u)];
                    has_in = has_in || allowed_[index(u, v)];
                }
                if (!has_in || !has_out) {
                    alive[static_cast<std::size_t>(v - 1)] = false;
                    changed = true;
                }
            }
        }
        return alive;
    }

    int size_;
    std::set<std::pair<Letter, Letter>> forbidden_;
    std::vector<char> allowed_;
    std::vector<bool> core_;
};

// A window of a two-sided sequence: symbols[t] is the letter at index offset + t.
class Word {
public:
    Word(long offset, std::vector<Letter> symbols) : offset_(offset), symbols_(std::move(symbols)) {
        if (symbols_.empty()) fail(ErrorKind::invalid_input, "word must have length >= 1");
        for (Letter a : symbols_)
            if (a < 1) fail(ErrorKind::invalid_input, "letters are positive integers");
    }

    long offset() const noexcept { return offset_; }
    long first() const noexcept { return offset_; }
    long last() const noexcept { return offset_ + static_cast<long>(symbols_.size()) - 1; }
    std::size_t size() const noexcept { return symbols_.size(); }
    const std::vector<Letter>& symbols() const noexcept { return symbols_; }

    bool covers(long lo, long hi) const noexcept { return lo >= first() && hi <= last(); }

    Letter at(long n) const {
        if (n < first() || n > last())
            fail(ErrorKind::invalid_input, "index " + std::to_string(n) + " outside window [" +
                                               std::to_string(first()) + "," +
                                               std::to_string(last()) + "]");
        return symbols_[static_cast<std::size_t>(n - offset_)];
    }

    // Unchecked access for hot loops whose window was validated up front.
    Letter operator[](long n) const noexcept { return symbols_[static_cast<std::size_t>(n - offset_)]; }

    void require(long lo, long hi, const char* who) const {
        if (!covers(lo, hi))
            fail(ErrorKind::invalid_input, std::string(who) + ": window [" + std::to_string(first()) +
                                               "," + std::to_string(last()) + "] must cover [" +
                                               std::to_string(lo) + "," + std::to_string(hi) + "]");
    }

    friend bool operator==(const Word&, const Word&) = default;

private:
    long offset_;
    std::vector<Letter> symbols_;
};

inline bool is_admissible(const Word& word, const SftSpec& spec) {
    const auto& s = word.symbols();
    for (Letter a : s)
        if (!spec.in_range(a))
            fail(ErrorKind::invalid_input, "letter " + std::to_string(a) + " out of range 1.." +
                                               std::to_string(spec.alphabet_size()));
    for (std::size_t t = 0; t + 1 < s.size(); ++t)
        if (!spec.allowed(s[t], s[t + 1])) return false;
    return true;
}

// (T^m w)_n = w_{n+m}: the letter at index m moves to index 0.
inline Word shift(const Word& word, long m) { return Word(word.offset() - m, word.symbols()); }

// e^{-N}, N the largest integer with a_n = b_n for all |n| < N inside the
// common symmetric window. Full agreement on that window gives 0.
inline double distance(const Word& a, const Word& b) {
    if (!a.covers(0, 0) || !b.covers(0, 0))
        fail(ErrorKind::invalid_input, "distance: both windows must contain index 0");
    const long radius = std::min({-a.first(), a.last(), -b.first(), b.last()});
    for (long n = 0; n <= radius; ++n) {
        if (a[n] != b[n] || a[-n] != b[-n]) return std::exp(-static_cast<double>(n));
    }
    return 0.0;
}

struct HypothesesReport {
    std::vector<Letter> fixed_points;
    bool non_fixed_exists = false;
    bool pass = false;
};

// Fixed points of T are the constant sequences j...j with (j,j) admissible.
// A non-constant sequence exists iff the pruned transition graph (every
// letter with a surviving predecessor and successor) has an edge i->j, i != j.
inline HypothesesReport check_theorem_hypotheses(const SftSpec& spec) {
    HypothesesReport report;
    const int l = spec.alphabet_size();
    for (Letter j = 1; j <= l; ++j)
        if (spec.allowed(j, j)) report.fixed_points.push_back(j);
    for (Letter i = 1; i <= l && !report.non_fixed_exists; ++i)
        for (Letter j = 1; j <= l; ++j)
            if (i != j && spec.in_core(i) && spec.in_core(j) && spec.allowed(i, j)) {
                report.non_fixed_exists = true;
                break;
            }
    report.pass = !report.fixed_points.empty() && report.non_fixed_exists;
    return report;
}

}  // namespace graphshift
