// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used only by tests. These are the
// literal textbook transcriptions of the statistics, kept deliberately
// unoptimized and structurally different from the library paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

/// Literal double-sum time deviation over phase values in seconds.
/// sigma_x^2(m tau0) = 1/(6 m^2 (N-3m+1)) * sum_j [ sum_{i=j}^{j+m-1}
///                     (x_{i+2m} - 2 x_{i+m} + x_i) ]^2
inline double tdev(const std::vector<double>& x, std::size_t m) {
    const std::size_t n = x.size();
    const std::size_t terms = n - 3 * m + 1;
    double outer = 0.0;
    for (std::size_t j = 0; j < terms; ++j) {
        double inner = 0.0;
        for (std::size_t i = j; i < j + m; ++i)
            inner += x[i + 2 * m] - 2.0 * x[i + m] + x[i];
        outer += inner * inner;
    }
    return std::sqrt(outer / (6.0 * static_cast<double>(m) * static_cast<double>(m) *
                              static_cast<double>(terms)));
}

/// Exhaustive window scan: spread of the worst (n+1)-sample window.
inline double mtie(const std::vector<double>& x, std::size_t n) {
    double worst = 0.0;
    for (std::size_t k = 0; k + n < x.size(); ++k) {
        double lo = x[k], hi = x[k];
        for (std::size_t i = k; i <= k + n; ++i) {
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
        }
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

/// Exhaustive scan filling MTIE for every n in [1, N-1] at once: each window
/// start extends to the right while tracking running extrema.
inline std::vector<double> mtie_all(const std::vector<double>& x) {
    const std::size_t n_samples = x.size();
    std::vector<double> out(n_samples, 0.0);  // index n, valid from 1
    for (std::size_t k = 0; k < n_samples; ++k) {
        double lo = x[k], hi = x[k];
        for (std::size_t i = k + 1; i < n_samples; ++i) {
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
            const std::size_t n = i - k;
            out[n] = std::max(out[n], hi - lo);
        }
    }
    // MTIE over all starts for window n; spreads only grow with n per start,
    // but out[n] currently holds the best spread of exactly-(n+1)-sample
    // windows, which is the definition. Nothing further needed.
    return out;
}

/// Overlapping Allan deviation computed through the fractional-frequency
/// route: y_i = (x_{i+1} - x_i)/tau0, then averaged frequency differences.
inline double adev_from_frequency(const std::vector<double>& x, std::size_t m, double tau0) {
    const std::size_t n = x.size();
    std::vector<double> y(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        y[i] = (x[i + 1] - x[i]) / tau0;
    const std::size_t m_count = y.size();
    const std::size_t terms = m_count - 2 * m + 1;
    double sum = 0.0;
    for (std::size_t j = 0; j < terms; ++j) {
        double diff = 0.0;
        for (std::size_t i = j; i < j + m; ++i)
            diff += y[i + m] - y[i];
        sum += diff * diff;
    }
    return std::sqrt(sum / (2.0 * static_cast<double>(m) * static_cast<double>(m) *
                            static_cast<double>(terms)));
}

/// Longest run length between gap positions, by linear scan over a boolean
/// present/absent epoch map.
inline std::size_t longest_run(const std::vector<bool>& present) {
    std::size_t best = 0, cur = 0;
    for (bool p : present) {
        cur = p ? cur + 1 : 0;
        best = std::max(best, cur);
    }
    return best;
}

}  // namespace oracles
