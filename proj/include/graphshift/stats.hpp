#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "graphshift/error.hpp"

namespace graphshift::stats {

struct MeanError {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// Sample mean and standard error of the mean (n-1 normalization; 0 for n = 1).
inline MeanError mean_stderr(std::span<const double> xs) {
    if (xs.empty()) fail(ErrorKind::insufficient_data, "mean of empty sample");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double n = static_cast<double>(xs.size());
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) fail(ErrorKind::insufficient_data, "median of empty sample");
    const auto mid = xs.begin() + static_cast<long>(xs.size() / 2);
    std::nth_element(xs.begin(), mid, xs.end());
    if (xs.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(xs.begin(), mid);
    return 0.5 * (lower + upper);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    double residual_sd = 0.0;
    std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorKind::invalid_input, "fit_line: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) fail(ErrorKind::insufficient_data, "fit_line: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) fail(ErrorKind::insufficient_data, "fit_line: degenerate abscissae");
    LineFit fit;
    fit.points = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        sse += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    if (n > 2) {
        fit.residual_sd = std::sqrt(sse / static_cast<double>(n - 2));
        fit.slope_stderr = fit.residual_sd / std::sqrt(sxx);
    }
    return fit;
}

}  // namespace graphshift::stats
