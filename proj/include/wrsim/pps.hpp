// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wrsim/core.hpp"

namespace wrsim {

/// Raw per-channel PPS event times from a time-to-digital converter.
/// Channel A carries the leader's pulses, channel B the follower's.
struct TimestampLog {
    std::vector<std::int64_t> channel_a_ps;
    std::vector<std::int64_t> channel_b_ps;
    double nominal_interval_s = 1.0;
    double tdc_jitter_rms_s = 3e-12;  // metadata only
};

inline void validate_log(const TimestampLog& log) {
    if (!(log.nominal_interval_s > 0.0))
        throw invalid_argument("TimestampLog: nominal interval must be > 0");
    auto strictly_increasing = [](const std::vector<std::int64_t>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] <= v[i - 1])
                return false;
        return true;
    };
    if (!strictly_increasing(log.channel_a_ps) || !strictly_increasing(log.channel_b_ps))
        throw invalid_argument("TimestampLog: channels must be strictly increasing");
}

/// Phase-error series with the gap epochs removed and the gap boundaries kept
/// for downstream segmentation.
struct PairedSeries {
    struct Gap {
        std::size_t index_after;        // gap sits after this index of the compacted series
        std::int64_t missing_epochs;
    };
    TimeErrorSeries series;             // x_i = t_a - t_b, compacted
    std::vector<Gap> gaps;
    std::int64_t first_epoch = 0;       // epoch number of series sample 0
};

/// Pairs PPS events from the two channels into a phase-error series by
/// nearest-epoch association against the nominal interval.
///
/// Epoch numbering is anchored at the first channel-A pulse. Epochs missing a
/// pulse on either channel are excluded and recorded as gaps. Skews at or
/// beyond half the nominal interval alias onto neighbouring epochs; such a
/// deterministic skew (a strongly asymmetric link) must be pre-subtracted via
/// `coarse_skew_s`, which removes it from channel B before association. The
/// produced x_i then measure the residual relative to that coarse skew.
inline PairedSeries pair_pps(const TimestampLog& log, double coarse_skew_s = 0.0) {
    validate_log(log);
    if (log.channel_a_ps.empty() || log.channel_b_ps.empty())
        throw empty_input("pair_pps: both channels must be non-empty");

    const std::int64_t interval = ps_from_seconds(log.nominal_interval_s);
    const std::int64_t origin = log.channel_a_ps.front();
    const std::int64_t skew = ps_from_seconds(coarse_skew_s);

    auto epoch_of = [&](std::int64_t t) -> std::int64_t {
        const std::int64_t rel = t - origin;
        return static_cast<std::int64_t>(
            std::llround(static_cast<double>(rel) / static_cast<double>(interval)));
    };

    // epoch -> timestamp per channel; both lists stay sorted by construction
    std::vector<std::pair<std::int64_t, std::int64_t>> a_events, b_events;
    a_events.reserve(log.channel_a_ps.size());
    b_events.reserve(log.channel_b_ps.size());
    for (std::int64_t t : log.channel_a_ps) {
        const std::int64_t e = epoch_of(t);
        if (!a_events.empty() && a_events.back().first == e)
            throw ambiguous_pairing("pair_pps: two channel-A pulses map to epoch " +
                                    std::to_string(e));
        a_events.emplace_back(e, t);
    }
    for (std::int64_t t_raw : log.channel_b_ps) {
        const std::int64_t t = t_raw - skew;
        const std::int64_t e = epoch_of(t);
        if (!b_events.empty() && b_events.back().first == e)
            throw ambiguous_pairing("pair_pps: two channel-B pulses map to epoch " +
                                    std::to_string(e));
        b_events.emplace_back(e, t);
    }

    PairedSeries out;
    std::vector<std::int64_t> values;
    std::vector<std::int64_t> epochs;
    std::size_t ia = 0, ib = 0;
    while (ia < a_events.size() && ib < b_events.size()) {
        const std::int64_t ea = a_events[ia].first;
        const std::int64_t eb = b_events[ib].first;
        if (ea < eb) {
            ++ia;
        } else if (eb < ea) {
            ++ib;
        } else {
            values.push_back(a_events[ia].second - b_events[ib].second);
            epochs.push_back(ea);
            ++ia;
            ++ib;
        }
    }
    if (values.empty())
        throw no_overlap("pair_pps: channels share no epochs");

    for (std::size_t i = 1; i < epochs.size(); ++i) {
        const std::int64_t missing = epochs[i] - epochs[i - 1] - 1;
        if (missing > 0)
            out.gaps.push_back({i - 1, missing});
    }
    out.first_epoch = epochs.front();
    out.series = TimeErrorSeries{std::move(values), log.nominal_interval_s,
                                 seconds_from_ps(origin + epochs.front() * interval)};
    return out;
}

struct Dropout {
    double start_s = 0.0;       // time of the last good pulse before the gap
    double duration_s = 0.0;    // gap length minus one nominal interval
    std::int64_t missing_pulses = 0;
};

struct DropoutReport {
    std::vector<Dropout> dropouts;
    double total_duration_s = 0.0;   // observed span of the follower channel
    double uptime_fraction = 1.0;
};

/// Scans the follower channel for inter-pulse gaps beyond 1.5x the nominal
/// interval. Dropout time is counted from the last good pulse; each duration
/// is the gap length minus one nominal interval.
inline DropoutReport detect_dropouts(const TimestampLog& log) {
    validate_log(log);
    if (log.channel_b_ps.empty())
        throw empty_input("detect_dropouts: follower channel is empty");

    const double interval = log.nominal_interval_s;
    const double threshold = 1.5 * interval;
    DropoutReport report;
    const auto& b = log.channel_b_ps;
    report.total_duration_s = seconds_from_ps(b.back() - b.front());

    double downtime = 0.0;
    for (std::size_t i = 1; i < b.size(); ++i) {
        const double dt = seconds_from_ps(b[i] - b[i - 1]);
        if (dt > threshold) {
            Dropout d;
            d.start_s = seconds_from_ps(b[i - 1]);
            d.duration_s = dt - interval;
            d.missing_pulses = std::llround(dt / interval) - 1;
            downtime += d.duration_s;
            report.dropouts.push_back(d);
        }
    }
    report.uptime_fraction = report.total_duration_s > 0.0
                                 ? (report.total_duration_s - downtime) / report.total_duration_s
                                 : 1.0;
    return report;
}

/// Splits a paired series at its gaps.
inline std::vector<TimeErrorSeries> clean_segments(const PairedSeries& paired) {
    std::vector<TimeErrorSeries> segments;
    const auto& x = paired.series.samples_ps;
    if (x.empty())
        return segments;
    std::size_t start = 0;
    auto emit = [&](std::size_t begin, std::size_t end) {
        if (end > begin) {
            std::vector<std::int64_t> part(x.begin() + static_cast<std::ptrdiff_t>(begin),
                                           x.begin() + static_cast<std::ptrdiff_t>(end));
            segments.push_back(TimeErrorSeries{std::move(part), paired.series.tau0_s,
                                               std::nullopt});
        }
    };
    for (const auto& gap : paired.gaps) {
        emit(start, gap.index_after + 1);
        start = gap.index_after + 1;
    }
    emit(start, x.size());
    return segments;
}

/// The longest contiguous gap-free run, the input MTIE analysis consumes.
/// Earliest run wins ties.
inline TimeErrorSeries longest_clean_segment(const PairedSeries& paired) {
    auto segments = clean_segments(paired);
    if (segments.empty())
        throw empty_input("longest_clean_segment: series is empty");
    std::size_t best = 0;
    for (std::size_t i = 1; i < segments.size(); ++i)
        if (segments[i].size() > segments[best].size())
            best = i;
    return segments[best];
}

}  // namespace wrsim
