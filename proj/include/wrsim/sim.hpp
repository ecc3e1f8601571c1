// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wrsim/asymmetry.hpp"
#include "wrsim/core.hpp"
#include "wrsim/noise.hpp"
#include "wrsim/optical.hpp"
#include "wrsim/pps.hpp"

namespace wrsim {

struct DropoutProcess {
    double rate_per_hour = 0.0;
    double recovery_max_s = 18.0;
};

/// One link configuration: channel, transceivers, amplification, asymmetry
/// compensation, clock noise, dropout statistics.
struct SimScenario {
    std::string name = "scenario";
    ChannelProfile profile;
    SfpModel sfp;
    // edfas[0] boosts the forward launch, edfas[1] pre-amplifies the forward
    // receive; the return path runs unamplified.
    std::vector<EdfaModel> edfas;
    std::optional<FilterModel> filter;

    // Asymmetry the follower applies. alpha_n wins when set (hardware path);
    // otherwise applied_alpha is used directly.
    std::optional<std::int64_t> applied_alpha_n;
    double applied_alpha = 0.0;
    AlphaMode alpha_mode = AlphaMode::wr_len;

    NoiseSpec noise;                      // follower-observable phase noise
    double exchange_interval_s = 1.0;
    double pps_interval_s = 1.0;
    double duration_s = 0.0;
    DropoutProcess dropout_process;
    std::uint64_t seed = 1;

    double servo_bandwidth_hz = 0.05;     // single-pole servo corner
    double timestamp_jitter_rms_s = 3e-12;  // per measured two-way interval
    double tdc_jitter_rms_s = 3e-12;        // per logged PPS edge
    bool servo_enabled = true;
    // Follower lag at t = 0. Defaults to the analytic steady state so logs
    // are stationary from the first epoch; set explicitly to study lock-in.
    std::optional<double> initial_offset_s;
};

struct SimEvent {
    enum class Kind { exchange, dropout, relock };
    Kind kind = Kind::exchange;
    double time_s = 0.0;
    double value_s = 0.0;  // exchange: offset estimate; dropout: outage length to relock
};

inline const char* sim_event_kind_name(SimEvent::Kind k) {
    switch (k) {
        case SimEvent::Kind::exchange: return "exchange";
        case SimEvent::Kind::dropout: return "dropout";
        case SimEvent::Kind::relock: return "relock";
    }
    return "?";
}

struct SimOutput {
    TimestampLog log;
    // Ground truth x_k = t_a - t_b at every epoch the follower emitted,
    // aligned with what pair_pps recovers from `log`.
    TimeErrorSeries true_offset_series;
    std::vector<SimEvent> events;
    double final_offset_s = 0.0;      // follower lag after the last exchange
    double applied_alpha = 0.0;
    AsymmetryConfig asymmetry;        // true latencies and alpha of the channel
    std::size_t suppressed_epochs = 0;
};

namespace detail {

struct OutageWindow {
    std::int64_t start_ps;
    std::int64_t relock_ps;  // first exchange at/after recovery end
};

}  // namespace detail

/// The scenario's forward/return budgets with its configured amplification.
inline std::pair<LinkBudgetReport, LinkBudgetReport> scenario_budgets(const SimScenario& sc) {
    std::optional<EdfaModel> booster, preamp;
    if (!sc.edfas.empty())
        booster = sc.edfas[0];
    if (sc.edfas.size() > 1)
        preamp = sc.edfas[1];
    auto fwd = link_budget(sc.sfp, sc.profile, Direction::forward, booster, preamp, sc.filter);
    SfpModel back = sc.sfp;
    back.wavelength_nm = sc.sfp.peer_wavelength_nm;
    auto ret = link_budget(back, sc.profile, Direction::return_path);
    return {fwd, ret};
}

inline double scenario_applied_alpha(const SimScenario& sc) {
    if (sc.applied_alpha_n)
        return alpha_n_to_alpha(*sc.applied_alpha_n, sc.alpha_mode);
    return sc.applied_alpha;
}

/// Deterministic event-driven run of one leader/follower pair.
///
/// The leader's clock is the simulation timebase. The follower holds a lag
/// phi (leader minus follower); each two-way exchange computes the standard
/// offset estimate with the asymmetry split delta_ms = rtt*(1+a)/(2+a) and a
/// single-pole servo pulls phi toward the estimate's zero. Event times are
/// integer picoseconds; the servo state stays in double precision so
/// quantization never accumulates. Exchanges process before PPS edges at
/// equal times.
inline SimOutput run(const SimScenario& sc) {
    if (!(sc.duration_s > 0.0))
        throw invalid_scenario("run: duration must be > 0");
    if (!(sc.exchange_interval_s > 0.0) || !(sc.pps_interval_s > 0.0))
        throw invalid_scenario("run: intervals must be > 0");
    if (sc.dropout_process.recovery_max_s < 0.0 || sc.dropout_process.rate_per_hour < 0.0)
        throw invalid_scenario("run: dropout process parameters must be >= 0");

    const auto [fwd_budget, ret_budget] = scenario_budgets(sc);
    if (!fwd_budget.closes || !ret_budget.closes)
        throw link_fails("run: link budget does not close (forward margin " +
                         std::to_string(fwd_budget.margin_db) + " dB, return margin " +
                         std::to_string(ret_budget.margin_db) + " dB)");

    const double delta_ms = one_way_latency_s(sc.profile, Direction::forward);
    const double delta_sm = one_way_latency_s(sc.profile, Direction::return_path);
    AsymmetryConfig config = make_asymmetry(delta_ms, delta_sm, sc.alpha_mode);
    const double applied = scenario_applied_alpha(sc);
    if (applied <= -2.0)
        throw invalid_scenario("run: applied alpha must be > -2");

    const std::int64_t pps_ps = ps_from_seconds(sc.pps_interval_s);
    const std::int64_t exch_ps = ps_from_seconds(sc.exchange_interval_s);
    const std::int64_t duration_ps = ps_from_seconds(sc.duration_s);
    const std::int64_t epochs = duration_ps / pps_ps;
    const std::int64_t exchanges = duration_ps / exch_ps;

    // independent deterministic streams
    std::uint64_t root = sc.seed;
    detail::Gaussian exch_jitter(detail::splitmix64(root));
    detail::Gaussian tdc_a(detail::splitmix64(root));
    detail::Gaussian tdc_b(detail::splitmix64(root));
    std::mt19937_64 dropout_rng(detail::splitmix64(root));

    NoiseSpec noise = sc.noise;
    noise.n_samples = static_cast<std::size_t>(epochs) + 1;
    noise.tau0_s = sc.pps_interval_s;
    const TimeErrorSeries noise_series = synthesize(noise);

    // dropout windows, renewal process restarting after each relock
    std::vector<detail::OutageWindow> outages;
    if (sc.dropout_process.rate_per_hour > 0.0 && sc.dropout_process.recovery_max_s > 0.0) {
        const double lambda = sc.dropout_process.rate_per_hour / 3600.0;
        auto uniform01 = [&] {
            return static_cast<double>(dropout_rng() >> 11) * 0x1.0p-53;
        };
        double cursor_s = 0.0;
        while (true) {
            const double gap = -std::log(1.0 - uniform01()) / lambda;
            const double start_s = cursor_s + gap;
            if (start_s >= sc.duration_s)
                break;
            const double recovery = sc.dropout_process.recovery_max_s * (1.0 - uniform01());
            const double recovery_end_s = start_s + recovery;
            const std::int64_t relock_ps =
                static_cast<std::int64_t>(
                    std::ceil(recovery_end_s / sc.exchange_interval_s)) * exch_ps;
            outages.push_back({ps_from_seconds(start_s), relock_ps});
            cursor_s = seconds_from_ps(relock_ps);
        }
    }

    const double ts_jitter_ps = sc.timestamp_jitter_rms_s * picoseconds_per_second;
    const double tdc_jitter_ps = sc.tdc_jitter_rms_s * picoseconds_per_second;
    const double delta_ms_ps = delta_ms * picoseconds_per_second;
    const double delta_sm_ps = delta_sm * picoseconds_per_second;
    const double gain = 1.0 - std::exp(-2.0 * std::numbers::pi * sc.servo_bandwidth_hz *
                                       sc.exchange_interval_s);

    double phi_ps = (sc.initial_offset_s ? *sc.initial_offset_s
                                         : predicted_skew(config, applied)) *
                    picoseconds_per_second;

    SimOutput out;
    out.applied_alpha = applied;
    out.asymmetry = config;
    out.log.nominal_interval_s = sc.pps_interval_s;
    out.log.tdc_jitter_rms_s = sc.tdc_jitter_rms_s;
    out.events.reserve(static_cast<std::size_t>(exchanges) + 2 * outages.size());

    auto outage_at = [&](std::int64_t t) -> const detail::OutageWindow* {
        for (const auto& w : outages)
            if (t >= w.start_ps && t < w.relock_ps)
                return &w;
        return nullptr;
    };

    std::size_t outage_idx = 0;
    std::vector<std::int64_t> truth;
    truth.reserve(static_cast<std::size_t>(epochs) + 1);

    std::int64_t next_exchange = 0;
    std::int64_t next_epoch_idx = 0;
    while (next_exchange <= exchanges || next_epoch_idx <= epochs) {
        const std::int64_t t_exch = next_exchange <= exchanges
                                        ? next_exchange * exch_ps
                                        : std::numeric_limits<std::int64_t>::max();
        const std::int64_t t_pps = next_epoch_idx <= epochs
                                       ? next_epoch_idx * pps_ps
                                       : std::numeric_limits<std::int64_t>::max();
        if (t_exch <= t_pps) {
            // two-way exchange
            if (outage_at(t_exch) == nullptr) {
                const double j_ms = ts_jitter_ps > 0.0 ? exch_jitter() * ts_jitter_ps : 0.0;
                const double j_sm = ts_jitter_ps > 0.0 ? exch_jitter() * ts_jitter_ps : 0.0;
                const double meas_ms = delta_ms_ps - phi_ps + j_ms;
                const double meas_sm = delta_sm_ps + phi_ps + j_sm;
                const double rtt = meas_ms + meas_sm;
                const double delay_ms_est = rtt * (1.0 + applied) / (2.0 + applied);
                const double offset_est = meas_ms - delay_ms_est;
                if (sc.servo_enabled)
                    phi_ps += gain * offset_est;
                out.events.push_back({SimEvent::Kind::exchange, seconds_from_ps(t_exch),
                                      offset_est / picoseconds_per_second});
            }
            ++next_exchange;
        } else {
            // PPS epoch: leader always pulses, follower only while locked
            const std::int64_t k = next_epoch_idx;
            const double j_a = tdc_jitter_ps > 0.0 ? tdc_a() * tdc_jitter_ps : 0.0;
            const double j_b = tdc_jitter_ps > 0.0 ? tdc_b() * tdc_jitter_ps : 0.0;
            const std::int64_t t_a = t_pps + std::llround(j_a);
            out.log.channel_a_ps.push_back(t_a);
            if (outage_at(t_pps) == nullptr) {
                const double offset_ps =
                    phi_ps + static_cast<double>(noise_series.samples_ps[
                                 static_cast<std::size_t>(k)]) + j_b;
                const std::int64_t t_b = t_pps + std::llround(offset_ps);
                out.log.channel_b_ps.push_back(t_b);
                truth.push_back(t_a - t_b);
            } else {
                ++out.suppressed_epochs;
            }
            ++next_epoch_idx;
        }
    }

    for (; outage_idx < outages.size(); ++outage_idx) {
        const auto& w = outages[outage_idx];
        out.events.push_back({SimEvent::Kind::dropout, seconds_from_ps(w.start_ps),
                              seconds_from_ps(w.relock_ps - w.start_ps)});
        if (w.relock_ps <= duration_ps)
            out.events.push_back({SimEvent::Kind::relock, seconds_from_ps(w.relock_ps), 0.0});
    }
    std::sort(out.events.begin(), out.events.end(),
              [](const SimEvent& a, const SimEvent& b) {
                  if (a.time_s != b.time_s)
                      return a.time_s < b.time_s;
                  return static_cast<int>(a.kind) < static_cast<int>(b.kind);
              });

    out.final_offset_s = phi_ps / picoseconds_per_second;
    if (truth.empty())
        throw invalid_scenario("run: no PPS epochs were emitted");
    out.true_offset_series = TimeErrorSeries{std::move(truth), sc.pps_interval_s, 0.0};
    return out;
}

// ---------------------------------------------------------------------------
// Built-in configurations
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<FibreSegment> equal_segments(int count, double length_km, double loss,
                                                const std::string& prefix) {
    std::vector<FibreSegment> segs;
    for (int i = 0; i < count; ++i)
        segs.push_back({length_km, loss, prefix + std::to_string(i + 1)});
    return segs;
}

// Group delay in us/km for a given group index.
inline double group_delay_us_per_km(double group_index) {
    return group_index / 299792.458 * 1e6;
}

}  // namespace detail

/// 300 km duplex link with a 100 km return arm: booster + pre-amplifier +
/// 100 GHz filter on the long arm, asymmetry far beyond the compensable
/// range, so no alpha is applied and the skew stays in the logs.
inline SimScenario scenario_duplex300_asym() {
    SimScenario sc;
    sc.name = "duplex300_asym";
    sc.profile.forward = detail::equal_segments(6, 50.0, 0.17, "spool");
    sc.profile.return_path = detail::equal_segments(2, 50.0, 0.17, "return");
    sc.profile.measured_forward_loss_db = 59.43;
    sc.sfp.label = "dwdm_zr";
    sc.sfp.launch_dbm = 2.07;
    sc.sfp.max_launch_dbm = 5.0;
    sc.sfp.sensitivity_dbm = -23.0;
    sc.sfp.wavelength_nm = 1547.72;
    sc.sfp.peer_wavelength_nm = 1547.72;
    sc.edfas.push_back({"booster", 30.0, 22.31, 5.0, 1.0, 40.0, std::nullopt});
    sc.edfas.push_back({"preamp", 30.0, 20.0, 5.0, 1.0, 40.0, 17.73});
    sc.filter = FilterModel{100.0, 0.0};
    sc.applied_alpha = 0.0;  // true alpha = 2, outside the signed 32-bit window
    sc.noise.components = {{NoiseType::flicker_pm, 4e-12}, {NoiseType::white_fm, 3e-14}};
    sc.noise.seed = 300;
    sc.duration_s = 72000.0;
    sc.dropout_process = {0.3, 18.0};
    sc.seed = 300;
    return sc;
}

/// 150 km symmetric duplex link, no amplification, no filter.
inline SimScenario scenario_duplex150_sym() {
    SimScenario sc;
    sc.name = "duplex150_sym";
    sc.profile.forward = detail::equal_segments(3, 50.0, 0.17, "spool");
    sc.profile.return_path = detail::equal_segments(3, 50.0, 0.17, "return");
    sc.sfp.label = "dwdm_zr";
    sc.sfp.launch_dbm = 5.0;
    sc.sfp.max_launch_dbm = 5.0;
    sc.sfp.sensitivity_dbm = -23.0;
    sc.sfp.wavelength_nm = 1547.72;
    sc.sfp.peer_wavelength_nm = 1547.72;
    sc.applied_alpha = 0.0;
    sc.noise.components = {{NoiseType::flicker_pm, 1.16e-12}};
    sc.noise.seed = 150;
    sc.duration_s = 36000.0;
    sc.seed = 150;
    return sc;
}

/// 150 km simplex BiDi link (1550 nm down / 1490 nm up) with the wavelength
/// asymmetry compensated through alpha_n.
inline SimScenario scenario_simplex150_bidi() {
    SimScenario sc;
    sc.name = "simplex150_bidi";
    sc.profile.forward = detail::equal_segments(3, 50.0, 0.19, "span");
    sc.profile.return_path = detail::equal_segments(3, 50.0, 0.21, "span");
    sc.profile.forward_group_delay_us_per_km = detail::group_delay_us_per_km(1.4685);  // 1550 nm
    sc.profile.return_group_delay_us_per_km = detail::group_delay_us_per_km(1.4682);   // 1490 nm
    sc.sfp.label = "bidi_zx";
    sc.sfp.launch_dbm = 3.0;
    sc.sfp.max_launch_dbm = 5.0;
    sc.sfp.sensitivity_dbm = -34.0;
    sc.sfp.wavelength_nm = 1550.0;
    sc.sfp.peer_wavelength_nm = 1490.0;
    sc.sfp.mode = SfpModel::Mode::bidi_two_wavelength;
    const double alpha = detail::group_delay_us_per_km(1.4685) /
                             detail::group_delay_us_per_km(1.4682) - 1.0;
    sc.applied_alpha_n = alpha_to_alpha_n(alpha, sc.alpha_mode);
    sc.noise.components = {{NoiseType::flicker_pm, 1.69e-12}};
    sc.noise.seed = 151;
    sc.duration_s = 36000.0;
    sc.seed = 151;
    return sc;
}

/// 7 km simplex BiDi link on the stock 1310/1490 nm transceivers.
inline SimScenario scenario_simplex7_bidi() {
    SimScenario sc;
    sc.name = "simplex7_bidi";
    sc.profile.forward = {{7.0, 0.24, "span"}};
    sc.profile.return_path = {{7.0, 0.33, "span"}};
    sc.profile.forward_group_delay_us_per_km = detail::group_delay_us_per_km(1.4682);  // 1490 nm
    sc.profile.return_group_delay_us_per_km = detail::group_delay_us_per_km(1.4676);   // 1310 nm
    sc.sfp.label = "bidi_bx10";
    sc.sfp.launch_dbm = -3.0;
    sc.sfp.max_launch_dbm = -3.0;
    sc.sfp.sensitivity_dbm = -19.5;
    sc.sfp.wavelength_nm = 1490.0;
    sc.sfp.peer_wavelength_nm = 1310.0;
    sc.sfp.mode = SfpModel::Mode::bidi_two_wavelength;
    const double alpha = detail::group_delay_us_per_km(1.4682) /
                             detail::group_delay_us_per_km(1.4676) - 1.0;
    sc.applied_alpha_n = alpha_to_alpha_n(alpha, sc.alpha_mode);
    sc.noise.components = {{NoiseType::flicker_pm, 3.5e-13}};
    sc.noise.seed = 7;
    sc.duration_s = 36000.0;
    sc.seed = 7;
    return sc;
}

/// The four built-in demonstrations.
inline std::vector<SimScenario> replay_configurations() {
    return {scenario_duplex300_asym(), scenario_duplex150_sym(), scenario_simplex150_bidi(),
            scenario_simplex7_bidi()};
}

inline SimScenario builtin_scenario(const std::string& name) {
    for (auto& sc : replay_configurations())
        if (sc.name == name)
            return sc;
    throw invalid_argument("unknown built-in scenario: " + name);
}

}  // namespace wrsim
