// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "wrsim/core.hpp"

namespace wrsim {

enum class Statistic { tdev, mtie, adev };

inline const char* statistic_name(Statistic s) {
    switch (s) {
        case Statistic::tdev: return "tdev";
        case Statistic::mtie: return "mtie";
        case Statistic::adev: return "adev";
    }
    return "?";
}

/// Time deviation sigma_x(m*tau0).
///
/// Evaluates the second-difference double sum with a prefix sum over
/// d_i = x_{i+2m} - 2 x_{i+m} + x_i, so each m costs O(N). The inner sums
/// are exact in 64-bit integer picoseconds; only the squared accumulation
/// is floating point. Immune to constant offsets and linear ramps.
inline double tdev(const TimeErrorSeries& series, int m) {
    if (m < 1)
        throw invalid_argument("tdev: m must be >= 1");
    const std::size_t n = series.size();
    const std::size_t mm = static_cast<std::size_t>(m);
    if (n < 3 * mm)
        throw insufficient_data("tdev: need N >= 3m samples");

    const auto& x = series.samples_ps;
    // prefix[k] = sum of d_i for i < k, d defined for i in [0, N-2m)
    const std::size_t d_count = n - 2 * mm;
    std::vector<std::int64_t> prefix(d_count + 1, 0);
    for (std::size_t i = 0; i < d_count; ++i)
        prefix[i + 1] = prefix[i] + (x[i + 2 * mm] - 2 * x[i + mm] + x[i]);

    const std::size_t terms = n - 3 * mm + 1;
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < terms; ++j) {
        const double s = static_cast<double>(prefix[j + mm] - prefix[j]);
        sum_sq += s * s;
    }
    const double denom = 6.0 * static_cast<double>(mm) * static_cast<double>(mm) *
                         static_cast<double>(terms);
    return std::sqrt(sum_sq / denom) / picoseconds_per_second;
}

namespace detail {

/// Sliding extrema over windows of `window + 1` consecutive samples, one
/// result per window start. Monotonic deques give O(N) total.
inline std::int64_t max_window_spread(const std::vector<std::int64_t>& x, std::size_t window) {
    std::deque<std::size_t> maxq;  // indices, values decreasing
    std::deque<std::size_t> minq;  // indices, values increasing
    std::int64_t best = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (!maxq.empty() && x[maxq.back()] <= x[i]) maxq.pop_back();
        maxq.push_back(i);
        while (!minq.empty() && x[minq.back()] >= x[i]) minq.pop_back();
        minq.push_back(i);
        if (i >= window) {
            const std::size_t start = i - window;
            if (maxq.front() < start) maxq.pop_front();
            if (minq.front() < start) minq.pop_front();
            best = std::max(best, x[maxq.front()] - x[minq.front()]);
        }
    }
    return best;
}

}  // namespace detail

/// Maximum time interval error at tau = n*tau0: the largest peak-to-peak
/// excursion within any window of n+1 consecutive samples.
inline double mtie(const TimeErrorSeries& series, int n) {
    if (n < 1)
        throw invalid_argument("mtie: n must be >= 1");
    const std::size_t nn = static_cast<std::size_t>(n);
    if (series.size() < nn + 1)
        throw insufficient_data("mtie: need N >= n + 1 samples");
    return static_cast<double>(detail::max_window_spread(series.samples_ps, nn)) /
           picoseconds_per_second;
}

/// Overlapping Allan deviation of the fractional frequency derived from the
/// phase series: sigma_y(m*tau0) from second phase differences.
inline double adev(const TimeErrorSeries& series, int m) {
    if (m < 1)
        throw invalid_argument("adev: m must be >= 1");
    const std::size_t n = series.size();
    const std::size_t mm = static_cast<std::size_t>(m);
    if (n < 2 * mm + 1)
        throw insufficient_data("adev: need N >= 2m + 1 samples");

    const auto& x = series.samples_ps;
    const std::size_t terms = n - 2 * mm;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < terms; ++i) {
        const double d = static_cast<double>(x[i + 2 * mm] - 2 * x[i + mm] + x[i]);
        sum_sq += d * d;
    }
    const double tau_ps = static_cast<double>(mm) * series.tau0_s * picoseconds_per_second;
    return std::sqrt(sum_sq / (2.0 * static_cast<double>(terms))) / tau_ps;
}

struct CurvePoint {
    double tau_s;
    double value_s;       // dimensionless for adev
    int window;           // m for tdev/adev, n for mtie
    std::size_t num_terms;
};

struct StabilityCurve {
    Statistic statistic = Statistic::tdev;
    std::vector<CurvePoint> points;
    std::vector<std::string> warnings;
};

inline std::size_t max_valid_window(Statistic stat, std::size_t n) {
    switch (stat) {
        case Statistic::tdev: return n / 3;
        case Statistic::mtie: return n >= 2 ? n - 1 : 0;
        case Statistic::adev: return n >= 3 ? (n - 1) / 2 : 0;
    }
    return 0;
}

/// Octave-spaced window list 1, 2, 4, ... up to max_window.
inline std::vector<int> octave_windows(std::size_t max_window) {
    std::vector<int> out;
    for (std::size_t w = 1; w <= max_window; w *= 2)
        out.push_back(static_cast<int>(w));
    return out;
}

/// Ten-per-decade list 1,2,...,9,10,20,... up to max_window.
inline std::vector<int> decade_windows(std::size_t max_window) {
    std::vector<int> out;
    for (std::size_t base = 1; base <= max_window; base *= 10)
        for (std::size_t k = 1; k <= 9; ++k) {
            const std::size_t w = k * base;
            if (w > max_window) return out;
            out.push_back(static_cast<int>(w));
        }
    return out;
}

inline std::size_t statistic_num_terms(Statistic stat, std::size_t n, std::size_t w) {
    switch (stat) {
        case Statistic::tdev: return n - 3 * w + 1;
        case Statistic::mtie: return n - w;  // window starts
        case Statistic::adev: return n - 2 * w;
    }
    return 0;
}

/// Batch evaluation of one statistic over a window list. Windows that fail
/// their precondition are skipped with a warning; throws only when no window
/// is valid. An empty window list requests the octave grid.
inline StabilityCurve stability_curve(const TimeErrorSeries& series, Statistic stat,
                                      std::vector<int> windows = {}) {
    StabilityCurve curve;
    curve.statistic = stat;
    const std::size_t max_w = max_valid_window(stat, series.size());
    if (windows.empty())
        windows = octave_windows(max_w);

    for (int w : windows) {
        if (w < 1 || static_cast<std::size_t>(w) > max_w) {
            curve.warnings.push_back(std::string(statistic_name(stat)) + ": window " +
                                     std::to_string(w) + " invalid for N = " +
                                     std::to_string(series.size()));
            continue;
        }
        double value = 0.0;
        switch (stat) {
            case Statistic::tdev: value = tdev(series, w); break;
            case Statistic::mtie: value = mtie(series, w); break;
            case Statistic::adev: value = adev(series, w); break;
        }
        curve.points.push_back(CurvePoint{static_cast<double>(w) * series.tau0_s, value, w,
                                          statistic_num_terms(stat, series.size(),
                                                              static_cast<std::size_t>(w))});
    }
    if (curve.points.empty())
        throw insufficient_data("stability_curve: no requested window is valid");
    return curve;
}

/// Non-rigorous 1/sqrt(num_terms) relative confidence half-width.
inline double heuristic_confidence(const CurvePoint& p) {
    return p.num_terms > 0 ? 1.0 / std::sqrt(static_cast<double>(p.num_terms)) : 1.0;
}

/// Least-squares slope of log(value) vs log(tau) over the curve's points.
/// Points with non-positive values are ignored.
inline double loglog_slope(const StabilityCurve& curve) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t k = 0;
    for (const auto& p : curve.points) {
        if (p.value_s <= 0.0 || p.tau_s <= 0.0)
            continue;
        const double lx = std::log(p.tau_s);
        const double ly = std::log(p.value_s);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++k;
    }
    if (k < 2)
        throw insufficient_data("loglog_slope: need at least two positive points");
    const double denom = static_cast<double>(k) * sxx - sx * sx;
    return (static_cast<double>(k) * sxy - sx * sy) / denom;
}

}  // namespace wrsim
