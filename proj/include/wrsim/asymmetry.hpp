// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "wrsim/core.hpp"

namespace wrsim {

// Two fixed-point encodings of the asymmetry parameter are in circulation.
// They agree on magnitude near alpha = 0 but differ in sign convention:
//   wr_len:      alpha_n = 2^40 * ((alpha - 1)/(alpha - 2) - 1/2), pole at alpha = +2
//   calibration: alpha_n = 2^40 * ((alpha + 1)/(alpha + 2) - 1/2), pole at alpha = -2
enum class AlphaMode { wr_len, calibration };

inline const char* alpha_mode_name(AlphaMode m) {
    return m == AlphaMode::wr_len ? "paper" : "conventional";
}

constexpr std::int64_t alpha_n_min = -(std::int64_t{1} << 31);
constexpr std::int64_t alpha_n_max = (std::int64_t{1} << 31) - 1;
constexpr double alpha_n_scale = 1099511627776.0;  // 2^40

/// alpha = delta_ms / delta_sm - 1 from the two directional latencies.
inline double alpha_from_latencies(double delta_ms_s, double delta_sm_s) {
    if (!(delta_ms_s > 0.0) || !(delta_sm_s > 0.0))
        throw invalid_argument("alpha_from_latencies: latencies must be > 0");
    return delta_ms_s / delta_sm_s - 1.0;
}

/// Raw fixed-point encoding, unchecked against the signed 32-bit window.
/// Saturates at the int64 limits when alpha sits close to the pole.
inline std::int64_t encode_alpha(double alpha, AlphaMode mode = AlphaMode::wr_len) {
    const double sign = (mode == AlphaMode::wr_len) ? -1.0 : 1.0;
    const double denom = alpha + sign * 2.0;
    if (std::abs(denom) < 1e-12)
        throw pole_error("encode_alpha: alpha at the encoding pole");
    const double ratio = (alpha + sign * 1.0) / denom;
    const double scaled = alpha_n_scale * (ratio - 0.5);
    constexpr double int64_bound = 9.2e18;
    if (!(std::abs(scaled) < int64_bound))
        return scaled > 0 ? std::int64_t{9200000000000000000} : std::int64_t{-9200000000000000000};
    return static_cast<std::int64_t>(std::llround(scaled));
}

inline bool alpha_n_in_range(std::int64_t alpha_n) {
    return alpha_n >= alpha_n_min && alpha_n <= alpha_n_max;
}

/// Checked encoding: the WR PTP core stores alpha_n as a signed 32-bit
/// integer, so values outside that window cannot be applied in hardware.
inline std::int64_t alpha_to_alpha_n(double alpha, AlphaMode mode = AlphaMode::wr_len) {
    const std::int64_t raw = encode_alpha(alpha, mode);
    if (!alpha_n_in_range(raw))
        throw out_of_range("alpha_to_alpha_n: encoding exceeds signed 32-bit range", raw);
    return raw;
}

/// Inverse of the encoding; exact up to the 2^-40 quantization step.
inline double alpha_n_to_alpha(std::int64_t alpha_n, AlphaMode mode = AlphaMode::wr_len) {
    if (!alpha_n_in_range(alpha_n))
        throw out_of_range("alpha_n_to_alpha: outside signed 32-bit range", alpha_n);
    const double u = static_cast<double>(alpha_n) / alpha_n_scale + 0.5;
    // u = (alpha +- 1)/(alpha +- 2)  =>  alpha = (1 - 2u)/(u - 1) resp. (2u - 1)/(1 - u)
    if (mode == AlphaMode::wr_len)
        return (1.0 - 2.0 * u) / (1.0 - u);
    return (2.0 * u - 1.0) / (1.0 - u);
}

/// Local width of one integer step of the encoding, |d alpha / d alpha_n|.
inline double alpha_quantization_step(double alpha, AlphaMode mode = AlphaMode::wr_len) {
    const double sign = (mode == AlphaMode::wr_len) ? -1.0 : 1.0;
    const double denom = alpha + sign * 2.0;
    return denom * denom / alpha_n_scale;
}

/// The in-range alpha interval [lo, hi] implied by the signed 32-bit window.
inline std::pair<double, double> alpha_supported_range(AlphaMode mode = AlphaMode::wr_len) {
    const double a = alpha_n_to_alpha(alpha_n_min, mode);
    const double b = alpha_n_to_alpha(alpha_n_max, mode);
    return {std::min(a, b), std::max(a, b)};
}

struct AsymmetryConfig {
    double delta_ms_s = 0.0;  // leader -> follower propagation latency
    double delta_sm_s = 0.0;  // follower -> leader propagation latency
    double alpha = 0.0;
    std::optional<std::int64_t> alpha_n;
};

inline AsymmetryConfig make_asymmetry(double delta_ms_s, double delta_sm_s,
                                      AlphaMode mode = AlphaMode::wr_len) {
    AsymmetryConfig cfg;
    cfg.delta_ms_s = delta_ms_s;
    cfg.delta_sm_s = delta_sm_s;
    cfg.alpha = alpha_from_latencies(delta_ms_s, delta_sm_s);
    try {
        cfg.alpha_n = alpha_to_alpha_n(cfg.alpha, mode);
    } catch (const error&) {
        cfg.alpha_n = std::nullopt;  // pole or out of range; callers check
    }
    return cfg;
}

/// Residual follower clock offset after a two-way exchange that assumes
/// asymmetry `applied_alpha` when the true latencies are those in `config`.
///
/// The round trip rtt = delta_ms + delta_sm is split as
/// delta_ms = rtt*(1+a)/(2+a), which reproduces a = delta_ms/delta_sm - 1
/// identically. The correction applied for an assumed a is then
/// rtt*a/(2*(2+a)), so
///   residual = (delta_ms - delta_sm)/2 - rtt*a/(2*(2+a)).
/// Positive residual means the follower lags the leader. applied = true alpha
/// gives 0; applied = 0 leaves half the latency difference.
inline double predicted_skew(const AsymmetryConfig& config, double applied_alpha) {
    if (!(config.delta_ms_s > 0.0) || !(config.delta_sm_s > 0.0))
        throw invalid_argument("predicted_skew: latencies must be set and > 0");
    if (applied_alpha <= -2.0)
        throw invalid_argument("predicted_skew: applied alpha must be > -2");
    const double rtt = config.delta_ms_s + config.delta_sm_s;
    const double correction = rtt * applied_alpha / (2.0 * (2.0 + applied_alpha));
    return (config.delta_ms_s - config.delta_sm_s) / 2.0 - correction;
}

}  // namespace wrsim
