// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wrsim/core.hpp"

namespace wrsim {

inline constexpr double planck_J_s = 6.62607015e-34;
inline constexpr double light_speed_m_s = 299792458.0;

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Optical bandwidth in Hz of a window `bw_nm` wide centred on `wavelength_nm`.
inline double bandwidth_hz(double bw_nm, double wavelength_nm) {
    const double lambda_m = wavelength_nm * 1e-9;
    return light_speed_m_s / (lambda_m * lambda_m) * bw_nm * 1e-9;
}

inline double photon_energy_J(double wavelength_nm) {
    return planck_J_s * light_speed_m_s / (wavelength_nm * 1e-9);
}

// ---------------------------------------------------------------------------
// Fibre channel
// ---------------------------------------------------------------------------

struct FibreSegment {
    double length_km = 0.0;
    double loss_db_per_km = 0.0;
    std::string label;
};

// Group delay for group index 1.468: n_g / c in us per km.
inline constexpr double default_group_delay_us_per_km = 1.468 / 299792.458 * 1e6;

struct ChannelProfile {
    std::vector<FibreSegment> forward;
    std::vector<FibreSegment> return_path;
    double forward_group_delay_us_per_km = default_group_delay_us_per_km;
    double return_group_delay_us_per_km = default_group_delay_us_per_km;
    // End-to-end loss measured with a power meter, when it disagrees with the
    // per-segment coefficients (connectors, splices). Reported alongside the
    // coefficient-derived loss, never silently reconciled.
    std::optional<double> measured_forward_loss_db;
    std::optional<double> measured_return_loss_db;
};

enum class Direction { forward, return_path };

struct ChannelLoss {
    double total_db = 0.0;
    double total_length_km = 0.0;
    double average_db_per_km = 0.0;
};

inline const std::vector<FibreSegment>& segments_for(const ChannelProfile& p, Direction d) {
    return d == Direction::forward ? p.forward : p.return_path;
}

/// Coefficient-derived loss: sum of length * loss over the segment list.
inline ChannelLoss channel_loss(const ChannelProfile& profile, Direction direction) {
    const auto& segs = segments_for(profile, direction);
    if (segs.empty())
        throw empty_profile("channel_loss: profile has no segments for this direction");
    ChannelLoss out;
    for (const auto& s : segs) {
        if (!(s.length_km > 0.0) || !(s.loss_db_per_km > 0.0))
            throw invalid_argument("channel_loss: segment lengths and coefficients must be > 0");
        out.total_db += s.length_km * s.loss_db_per_km;
        out.total_length_km += s.length_km;
    }
    out.average_db_per_km = out.total_db / out.total_length_km;
    return out;
}

inline double one_way_latency_s(const ChannelProfile& profile, Direction direction) {
    const auto& segs = segments_for(profile, direction);
    if (segs.empty())
        throw empty_profile("one_way_latency: profile has no segments for this direction");
    double km = 0.0;
    for (const auto& s : segs)
        km += s.length_km;
    const double us_per_km = direction == Direction::forward
                                 ? profile.forward_group_delay_us_per_km
                                 : profile.return_group_delay_us_per_km;
    return km * us_per_km * 1e-6;
}

/// The loss the budget actually charges: measured end-to-end value when one
/// exists, coefficient-derived sum otherwise.
inline double effective_loss_db(const ChannelProfile& profile, Direction direction) {
    const auto& measured = direction == Direction::forward ? profile.measured_forward_loss_db
                                                           : profile.measured_return_loss_db;
    return measured ? *measured : channel_loss(profile, direction).total_db;
}

// ---------------------------------------------------------------------------
// Amplifier and transceiver models
// ---------------------------------------------------------------------------

struct EdfaModel {
    std::string label = "edfa";
    double small_signal_gain_db = 30.0;
    double max_output_dbm = 20.0;
    double noise_figure_db = 5.0;
    double pump_current_scale = 1.0;   // [0, 1], maps linearly to small-signal gain
    double bandwidth_nm = 40.0;        // ASE emission window
    // Total output power measured at this operating point. Drives the stage
    // power display when the NF formula cannot account for the full broadband
    // ASE; the in-band OSNR estimate always comes from the NF formula.
    std::optional<double> measured_output_dbm;
};

enum class GainLimit { pump, max_output };

struct EdfaOutput {
    double signal_dbm = 0.0;
    double ase_dbm = 0.0;       // total ASE over the amplifier bandwidth; -inf if none
    double gain_db = 0.0;       // realized signal gain
    GainLimit limited_by = GainLimit::pump;
    bool ase_dominated = false;
};

/// Saturable-gain amplifier stage.
///
/// Realized gain is min(small_signal_gain * pump, max_output - input), a hard
/// clamp at the rated output. Added ASE follows NF * h * nu * (G - 1) * B;
/// when a measured total output exceeds signal + formula ASE, the remainder is
/// attributed to broadband ASE so the stage reports what a power meter reads.
inline EdfaOutput edfa_output(const EdfaModel& model, double input_dbm,
                              double wavelength_nm = 1547.72) {
    if (!(model.pump_current_scale >= 0.0) || !(model.pump_current_scale <= 1.0))
        throw invalid_argument("edfa_output: pump_current_scale must be in [0, 1]");
    if (!std::isfinite(input_dbm))
        throw invalid_argument("edfa_output: input power must be finite");

    EdfaOutput out;
    const double pumped_gain = model.small_signal_gain_db * model.pump_current_scale;
    // headroom can go negative for an over-driven input: the stage then acts
    // as a hard limiter at its rated output
    const double headroom = model.max_output_dbm - input_dbm;
    out.gain_db = std::min(pumped_gain, headroom);
    out.limited_by = pumped_gain <= headroom ? GainLimit::pump : GainLimit::max_output;
    out.signal_dbm = input_dbm + out.gain_db;

    const double gain_lin = db_to_linear(out.gain_db);
    const double b_hz = bandwidth_hz(model.bandwidth_nm, wavelength_nm);
    double ase_mw = db_to_linear(model.noise_figure_db) * photon_energy_J(wavelength_nm) *
                    std::max(0.0, gain_lin - 1.0) * b_hz * 1e3;
    if (model.measured_output_dbm) {
        const double excess_mw = dbm_to_mw(*model.measured_output_dbm) - dbm_to_mw(out.signal_dbm);
        ase_mw = std::max(ase_mw, excess_mw);
    }
    // signal + ASE stay within the rated output
    const double cap_mw = dbm_to_mw(std::max(model.max_output_dbm,
                                             model.measured_output_dbm.value_or(
                                                 model.max_output_dbm)));
    ase_mw = std::min(ase_mw, std::max(0.0, cap_mw - dbm_to_mw(out.signal_dbm)));
    out.ase_dbm = ase_mw > 0.0 ? mw_to_dbm(ase_mw) : -std::numeric_limits<double>::infinity();
    out.ase_dominated = ase_mw > dbm_to_mw(out.signal_dbm);
    return out;
}

struct SfpModel {
    enum class Mode { duplex_single_wavelength, bidi_two_wavelength };
    std::string label = "sfp";
    double launch_dbm = 0.0;
    double max_launch_dbm = 5.0;
    double sensitivity_dbm = -23.0;
    double wavelength_nm = 1547.72;       // transmit wavelength
    double peer_wavelength_nm = 1547.72;  // wavelength received from the far end
    Mode mode = Mode::duplex_single_wavelength;

    double loss_budget_db() const { return max_launch_dbm - sensitivity_dbm; }
};

struct FilterModel {
    double bandwidth_ghz = 100.0;  // one DWDM grid channel
    double insertion_loss_db = 0.0;
};

// ---------------------------------------------------------------------------
// Link budget
// ---------------------------------------------------------------------------

struct ChainStage {
    enum class Kind { transmitter, amplifier, fibre, filter, receiver };
    Kind kind;
    std::optional<EdfaModel> edfa;         // amplifier stages
    double fibre_loss_db = 0.0;            // fibre stages
    double fibre_length_km = 0.0;
    std::optional<FilterModel> filter;     // filter stages
    std::string label;
};

struct BudgetOptions {
    double osnr_threshold_db = 10.0;       // in the reference bandwidth; placeholder default
    double reference_bandwidth_nm = 0.1;   // OSNR reference resolution
    double marginal_band_db = 1.0;         // |margin| below this reports "marginal"
};

struct StageReport {
    std::string label;
    std::string kind;
    double gain_or_loss_db = 0.0;
    double signal_dbm = 0.0;
    double ase_dbm = 0.0;    // -inf when no ASE present
    double total_dbm = 0.0;  // signal + ASE, the power a meter would read
    std::string note;
};

struct LinkBudgetReport {
    std::vector<StageReport> stages;
    double launch_dbm = 0.0;
    double received_signal_dbm = 0.0;
    double sensitivity_dbm = 0.0;
    double margin_db = 0.0;                // received signal minus sensitivity
    double osnr_db = 0.0;                  // +inf when the chain adds no ASE
    double osnr_threshold_db = 0.0;
    double loss_budget_db = 0.0;           // transceiver max launch minus sensitivity
    double coefficient_loss_db = 0.0;      // per-segment sum for the fibre stages
    std::optional<double> measured_loss_db;
    bool closes = false;
    bool marginal = false;
};

/// Canonical chain: transmitter, optional booster, fibre stages, optional
/// pre-amplifier, optional filter, receiver.
inline std::vector<ChainStage> make_chain(const SfpModel& sfp, const ChannelProfile& profile,
                                          Direction direction,
                                          std::optional<EdfaModel> booster = std::nullopt,
                                          std::optional<EdfaModel> preamp = std::nullopt,
                                          std::optional<FilterModel> filter = std::nullopt) {
    std::vector<ChainStage> chain;
    chain.push_back({ChainStage::Kind::transmitter, std::nullopt, 0, 0, std::nullopt, sfp.label});
    if (booster)
        chain.push_back({ChainStage::Kind::amplifier, booster, 0, 0, std::nullopt,
                         booster->label.empty() ? "booster" : booster->label});
    const auto& segs = segments_for(profile, direction);
    const bool has_measured = direction == Direction::forward
                                  ? profile.measured_forward_loss_db.has_value()
                                  : profile.measured_return_loss_db.has_value();
    if (has_measured) {
        // one stage carrying the measured end-to-end loss
        double km = 0.0;
        for (const auto& s : segs) km += s.length_km;
        chain.push_back({ChainStage::Kind::fibre, std::nullopt,
                         effective_loss_db(profile, direction), km, std::nullopt,
                         "fibre (measured)"});
    } else {
        // zero-length channel: no fibre stage at all
        for (const auto& s : segs)
            chain.push_back({ChainStage::Kind::fibre, std::nullopt,
                             s.length_km * s.loss_db_per_km, s.length_km, std::nullopt,
                             s.label.empty() ? "fibre" : s.label});
    }
    if (preamp)
        chain.push_back({ChainStage::Kind::amplifier, preamp, 0, 0, std::nullopt,
                         preamp->label.empty() ? "preamp" : preamp->label});
    if (filter)
        chain.push_back({ChainStage::Kind::filter, std::nullopt, 0, 0, filter, "filter"});
    chain.push_back({ChainStage::Kind::receiver, std::nullopt, 0, 0, std::nullopt, "receiver"});
    return chain;
}

namespace detail {

// transmitter -> booster? -> fibre* -> preamp? -> filter? -> receiver
inline void validate_chain_order(const std::vector<ChainStage>& chain) {
    using K = ChainStage::Kind;
    if (chain.empty() || chain.front().kind != K::transmitter)
        throw invalid_chain("link_budget: chain must start with a transmitter");
    if (chain.back().kind != K::receiver)
        throw invalid_chain("link_budget: chain must end with a receiver");
    int state = 0;  // 0: after tx, 1: in fibre, 2: after preamp, 3: after filter
    for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
        switch (chain[i].kind) {
            case K::transmitter:
                throw invalid_chain("link_budget: duplicate transmitter");
            case K::receiver:
                throw invalid_chain("link_budget: receiver before end of chain");
            case K::amplifier:
                if (state == 0) break;                    // booster
                else if (state == 1) { state = 2; break; }  // preamp
                throw invalid_chain("link_budget: amplifier after preamp/filter");
            case K::fibre:
                if (state <= 1) { state = 1; break; }
                throw invalid_chain("link_budget: fibre after preamp/filter");
            case K::filter:
                if (state <= 2) { state = 3; break; }
                throw invalid_chain("link_budget: duplicate filter");
        }
    }
}

}  // namespace detail

/// Propagates signal and ASE stage by stage and decides whether the link
/// closes: received signal above sensitivity and in-band OSNR above threshold.
///
/// Two ASE accumulators run in parallel. The broadband total (over each
/// amplifier's emission window) feeds the stage power display; the in-band
/// total inside the OSNR reference bandwidth always follows the NF formula,
/// since scaling a measured broadband total down to one channel would
/// misattribute out-of-band noise to the signal band.
inline LinkBudgetReport link_budget(const std::vector<ChainStage>& chain, const SfpModel& sfp,
                                    const BudgetOptions& options = {}) {
    using K = ChainStage::Kind;
    detail::validate_chain_order(chain);

    LinkBudgetReport report;
    report.sensitivity_dbm = sfp.sensitivity_dbm;
    report.osnr_threshold_db = options.osnr_threshold_db;
    report.loss_budget_db = sfp.loss_budget_db();

    if (sfp.launch_dbm > sfp.max_launch_dbm)
        throw invalid_argument("link_budget: launch power above transceiver maximum");

    const double wavelength = sfp.wavelength_nm;
    const double ref_bw_hz = bandwidth_hz(options.reference_bandwidth_nm, wavelength);

    double signal_dbm = sfp.launch_dbm;
    double ase_total_mw = 0.0;    // broadband, display only
    double ase_total_bw_hz = 0.0;
    double ase_ref_mw = 0.0;      // inside the OSNR reference bandwidth
    report.launch_dbm = signal_dbm;

    auto push_stage = [&](const ChainStage& st, double gain_or_loss, const std::string& note) {
        StageReport sr;
        sr.label = st.label;
        switch (st.kind) {
            case K::transmitter: sr.kind = "transmitter"; break;
            case K::amplifier: sr.kind = "amplifier"; break;
            case K::fibre: sr.kind = "fibre"; break;
            case K::filter: sr.kind = "filter"; break;
            case K::receiver: sr.kind = "receiver"; break;
        }
        sr.gain_or_loss_db = gain_or_loss;
        sr.signal_dbm = signal_dbm;
        sr.ase_dbm = ase_total_mw > 0.0 ? mw_to_dbm(ase_total_mw)
                                        : -std::numeric_limits<double>::infinity();
        sr.total_dbm = mw_to_dbm(dbm_to_mw(signal_dbm) + ase_total_mw);
        sr.note = note;
        report.stages.push_back(sr);
    };

    double coefficient_loss = 0.0;
    for (const auto& st : chain) {
        switch (st.kind) {
            case K::transmitter:
                push_stage(st, 0.0, "launch");
                break;
            case K::fibre: {
                signal_dbm -= st.fibre_loss_db;
                const double att = db_to_linear(-st.fibre_loss_db);
                ase_total_mw *= att;
                ase_ref_mw *= att;
                coefficient_loss += st.fibre_loss_db;
                push_stage(st, -st.fibre_loss_db, "");
                break;
            }
            case K::amplifier: {
                const EdfaModel& m = *st.edfa;
                const EdfaOutput out = edfa_output(m, signal_dbm, wavelength);
                const double g_lin = db_to_linear(out.gain_db);
                const double added_ref_mw = db_to_linear(m.noise_figure_db) *
                                            photon_energy_J(wavelength) * (g_lin - 1.0) *
                                            ref_bw_hz * 1e3;
                ase_ref_mw = ase_ref_mw * g_lin + added_ref_mw;
                const double added_total_mw =
                    std::isfinite(out.ase_dbm) ? dbm_to_mw(out.ase_dbm) : 0.0;
                ase_total_mw = ase_total_mw * g_lin + added_total_mw;
                ase_total_bw_hz = std::max(ase_total_bw_hz,
                                           bandwidth_hz(m.bandwidth_nm, wavelength));
                signal_dbm = out.signal_dbm;
                std::string note = out.limited_by == GainLimit::max_output
                                       ? "gain clamped at max output"
                                       : "gain at pump limit";
                if (out.ase_dominated)
                    note += "; ASE dominated";
                push_stage(st, out.gain_db, note);
                break;
            }
            case K::filter: {
                const FilterModel& f = *st.filter;
                const double il = db_to_linear(-f.insertion_loss_db);
                signal_dbm -= f.insertion_loss_db;
                ase_ref_mw *= il;
                const double filter_bw_hz = f.bandwidth_ghz * 1e9;
                if (ase_total_bw_hz > filter_bw_hz && ase_total_bw_hz > 0.0) {
                    ase_total_mw *= filter_bw_hz / ase_total_bw_hz;  // flat-spectrum estimate
                    ase_total_bw_hz = filter_bw_hz;
                }
                ase_total_mw *= il;
                push_stage(st, -f.insertion_loss_db + 0.0, "out-of-band ASE removed");
                break;
            }
            case K::receiver:
                push_stage(st, 0.0, "");
                break;
        }
    }

    report.coefficient_loss_db = coefficient_loss;
    report.received_signal_dbm = signal_dbm;
    report.margin_db = signal_dbm - sfp.sensitivity_dbm;
    report.osnr_db = ase_ref_mw > 0.0
                         ? mw_to_dbm(dbm_to_mw(signal_dbm)) - mw_to_dbm(ase_ref_mw)
                         : std::numeric_limits<double>::infinity();
    report.closes = report.margin_db >= 0.0 && report.osnr_db >= options.osnr_threshold_db;
    report.marginal = std::abs(report.margin_db) < options.marginal_band_db;
    return report;
}

/// Budget for one direction of a profile with the usual component order.
inline LinkBudgetReport link_budget(const SfpModel& sfp, const ChannelProfile& profile,
                                    Direction direction,
                                    std::optional<EdfaModel> booster = std::nullopt,
                                    std::optional<EdfaModel> preamp = std::nullopt,
                                    std::optional<FilterModel> filter = std::nullopt,
                                    const BudgetOptions& options = {}) {
    auto chain = make_chain(sfp, profile, direction, std::move(booster), std::move(preamp),
                            std::move(filter));
    auto report = link_budget(chain, sfp, options);
    const bool has_measured = direction == Direction::forward
                                  ? profile.measured_forward_loss_db.has_value()
                                  : profile.measured_return_loss_db.has_value();
    if (has_measured) {
        report.measured_loss_db = effective_loss_db(profile, direction);
        if (!segments_for(profile, direction).empty())
            report.coefficient_loss_db = channel_loss(profile, direction).total_db;
    }
    return report;
}

}  // namespace wrsim
