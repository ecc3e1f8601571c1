// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wrsim {

// ---------------------------------------------------------------------------
// Error hierarchy. Analysis and model functions report contract violations by
// throwing; the CLI maps these onto documented exit codes.
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_argument : error {
    using error::error;
};

struct insufficient_data : error {
    using error::error;
};

struct no_overlap : error {
    using error::error;
};

struct ambiguous_pairing : error {
    using error::error;
};

struct empty_input : error {
    using error::error;
};

struct empty_profile : error {
    using error::error;
};

struct pole_error : error {
    using error::error;
};

// Carries the integer that failed the range check so callers can still report it.
struct out_of_range : error {
    std::int64_t value;
    out_of_range(const std::string& msg, std::int64_t v) : error(msg), value(v) {}
};

struct ill_conditioned : error {
    using error::error;
};

struct invalid_chain : error {
    using error::error;
};

struct link_fails : error {
    using error::error;
};

struct invalid_scenario : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

struct parse_error : error {
    using error::error;
};

// ---------------------------------------------------------------------------
// Units. Phase errors and event times are held as integer picoseconds so that
// second differences and windowed extrema are exact; double precision enters
// only after differencing.
// ---------------------------------------------------------------------------

inline constexpr double picoseconds_per_second = 1e12;

inline std::int64_t ps_from_seconds(double seconds) {
    return static_cast<std::int64_t>(std::llround(seconds * picoseconds_per_second));
}

inline double seconds_from_ps(std::int64_t ps) {
    return static_cast<double>(ps) / picoseconds_per_second;
}

/// Uniformly sampled phase-error sequence x_i, sample i at origin + i*tau0.
struct TimeErrorSeries {
    std::vector<std::int64_t> samples_ps;
    double tau0_s = 1.0;
    std::optional<double> origin_s;

    std::size_t size() const { return samples_ps.size(); }
    double value_s(std::size_t i) const { return seconds_from_ps(samples_ps[i]); }
};

inline TimeErrorSeries make_series_ps(std::vector<std::int64_t> samples_ps, double tau0_s,
                                      std::optional<double> origin_s = std::nullopt) {
    if (samples_ps.empty())
        throw invalid_argument("TimeErrorSeries requires at least one sample");
    if (!(tau0_s > 0.0))
        throw invalid_argument("TimeErrorSeries requires tau0 > 0");
    return TimeErrorSeries{std::move(samples_ps), tau0_s, origin_s};
}

inline TimeErrorSeries make_series(const std::vector<double>& samples_s, double tau0_s,
                                   std::optional<double> origin_s = std::nullopt) {
    std::vector<std::int64_t> ps;
    ps.reserve(samples_s.size());
    for (double v : samples_s)
        ps.push_back(ps_from_seconds(v));
    return make_series_ps(std::move(ps), tau0_s, origin_s);
}

}  // namespace wrsim
