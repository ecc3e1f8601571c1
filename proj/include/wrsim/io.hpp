// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wrsim/asymmetry.hpp"
#include "wrsim/core.hpp"
#include "wrsim/noise.hpp"
#include "wrsim/optical.hpp"
#include "wrsim/pps.hpp"
#include "wrsim/sim.hpp"
#include "wrsim/stability.hpp"

namespace wrsim {

inline constexpr const char* tool_version = "0.1.0";

/// 12 significant digits, enough to make byte-identical reproduction
/// meaningful without printing noise digits.
inline std::string format_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline bool looks_numeric(const std::string& s) {
    if (s.empty())
        return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end != s.c_str() && *end == '\0';
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open for reading: " + path);
    return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_timestamp_log_csv(const TimestampLog& log, const std::string& path) {
    auto out = detail::open_out(path);
    out << "channel,timestamp_ps\n";
    std::size_t ia = 0, ib = 0;
    // merged by time so the file reads like the TDC stream
    while (ia < log.channel_a_ps.size() || ib < log.channel_b_ps.size()) {
        const bool take_a =
            ib >= log.channel_b_ps.size() ||
            (ia < log.channel_a_ps.size() && log.channel_a_ps[ia] <= log.channel_b_ps[ib]);
        if (take_a) {
            out << "A," << log.channel_a_ps[ia] << '\n';
            ++ia;
        } else {
            out << "B," << log.channel_b_ps[ib] << '\n';
            ++ib;
        }
    }
}

inline TimestampLog read_timestamp_log_csv(const std::string& path,
                                           double nominal_interval_s = 1.0) {
    auto in = detail::open_in(path);
    TimestampLog log;
    log.nominal_interval_s = nominal_interval_s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw parse_error(path + ":" + std::to_string(lineno) + ": expected 2 fields");
        if (lineno == 1 && !detail::looks_numeric(fields[1]))
            continue;  // header
        std::int64_t t = 0;
        try {
            t = std::stoll(fields[1]);
        } catch (const std::exception&) {
            throw parse_error(path + ":" + std::to_string(lineno) + ": bad timestamp");
        }
        if (fields[0] == "A" || fields[0] == "a")
            log.channel_a_ps.push_back(t);
        else if (fields[0] == "B" || fields[0] == "b")
            log.channel_b_ps.push_back(t);
        else
            throw parse_error(path + ":" + std::to_string(lineno) + ": channel must be A or B");
    }
    validate_log(log);
    return log;
}

inline void write_series_csv(const TimeErrorSeries& series, const std::string& path) {
    auto out = detail::open_out(path);
    out << "index,phase_error_ps\n";
    for (std::size_t i = 0; i < series.samples_ps.size(); ++i)
        out << i << ',' << series.samples_ps[i] << '\n';
}

inline TimeErrorSeries read_series_csv(const std::string& path, double tau0_s = 1.0) {
    auto in = detail::open_in(path);
    std::vector<std::int64_t> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw parse_error(path + ":" + std::to_string(lineno) + ": expected 2 fields");
        if (lineno == 1 && !detail::looks_numeric(fields[1]))
            continue;
        try {
            samples.push_back(
                static_cast<std::int64_t>(std::llround(std::stod(fields[1]))));
        } catch (const std::exception&) {
            throw parse_error(path + ":" + std::to_string(lineno) + ": bad phase error");
        }
    }
    if (samples.empty())
        throw parse_error(path + ": no samples");
    return make_series_ps(std::move(samples), tau0_s);
}

inline void write_curves_csv(const std::vector<StabilityCurve>& curves,
                             const std::string& path) {
    auto out = detail::open_out(path);
    out << "statistic,tau_s,value_s,num_terms\n";
    for (const auto& curve : curves)
        for (const auto& p : curve.points)
            out << statistic_name(curve.statistic) << ',' << format_g12(p.tau_s) << ','
                << format_g12(p.value_s) << ',' << p.num_terms << '\n';
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

using json = nlohmann::json;

inline json to_json(const DropoutReport& report) {
    json j;
    j["total_duration_s"] = report.total_duration_s;
    j["uptime_fraction"] = report.uptime_fraction;
    j["dropout_count"] = report.dropouts.size();
    j["dropouts"] = json::array();
    for (const auto& d : report.dropouts)
        j["dropouts"].push_back({{"start_s", d.start_s},
                                 {"duration_s", d.duration_s},
                                 {"missing_pulses", d.missing_pulses}});
    return j;
}

inline json to_json(const LinkBudgetReport& report) {
    json j;
    j["closes"] = report.closes;
    j["marginal"] = report.marginal;
    j["launch_dbm"] = report.launch_dbm;
    j["received_signal_dbm"] = report.received_signal_dbm;
    j["sensitivity_dbm"] = report.sensitivity_dbm;
    j["margin_db"] = report.margin_db;
    j["osnr_db"] = std::isfinite(report.osnr_db) ? json(report.osnr_db) : json();
    j["osnr_threshold_db"] = report.osnr_threshold_db;
    j["loss_budget_db"] = report.loss_budget_db;
    j["coefficient_loss_db"] = report.coefficient_loss_db;
    if (report.measured_loss_db)
        j["measured_loss_db"] = *report.measured_loss_db;
    j["stages"] = json::array();
    for (const auto& s : report.stages) {
        json st;
        st["label"] = s.label;
        st["kind"] = s.kind;
        st["gain_or_loss_db"] = s.gain_or_loss_db;
        st["signal_dbm"] = s.signal_dbm;
        st["ase_dbm"] = std::isfinite(s.ase_dbm) ? json(s.ase_dbm) : json();
        st["total_dbm"] = s.total_dbm;
        if (!s.note.empty())
            st["note"] = s.note;
        j["stages"].push_back(st);
    }
    return j;
}

inline std::string budget_table(const LinkBudgetReport& report) {
    std::ostringstream out;
    out << "stage              kind         gain/loss_dB  signal_dBm  total_dBm  note\n";
    for (const auto& s : report.stages) {
        char line[256];
        std::snprintf(line, sizeof line, "%-18s %-12s %12.2f %11.2f %10.2f  %s\n",
                      s.label.c_str(), s.kind.c_str(), s.gain_or_loss_db, s.signal_dbm,
                      s.total_dbm, s.note.c_str());
        out << line;
    }
    char tail[512];
    std::snprintf(tail, sizeof tail,
                  "received %.2f dBm vs sensitivity %.2f dBm (margin %+.2f dB), OSNR %s dB "
                  "(threshold %.1f)\nverdict: %s%s\n",
                  report.received_signal_dbm, report.sensitivity_dbm, report.margin_db,
                  std::isfinite(report.osnr_db) ? format_g12(report.osnr_db).c_str() : "inf",
                  report.osnr_threshold_db, report.closes ? "CLOSES" : "FAILS",
                  report.marginal ? " (marginal)" : "");
    out << tail;
    return out.str();
}

inline json segment_to_json(const FibreSegment& s) {
    return {{"length_km", s.length_km}, {"loss_db_per_km", s.loss_db_per_km},
            {"label", s.label}};
}

inline FibreSegment segment_from_json(const json& j) {
    FibreSegment s;
    s.length_km = j.at("length_km").get<double>();
    s.loss_db_per_km = j.at("loss_db_per_km").get<double>();
    s.label = j.value("label", "");
    return s;
}

inline json to_json(const ChannelProfile& p) {
    json j;
    j["forward"] = json::array();
    for (const auto& s : p.forward)
        j["forward"].push_back(segment_to_json(s));
    j["return"] = json::array();
    for (const auto& s : p.return_path)
        j["return"].push_back(segment_to_json(s));
    j["forward_group_delay_us_per_km"] = p.forward_group_delay_us_per_km;
    j["return_group_delay_us_per_km"] = p.return_group_delay_us_per_km;
    if (p.measured_forward_loss_db)
        j["measured_forward_loss_db"] = *p.measured_forward_loss_db;
    if (p.measured_return_loss_db)
        j["measured_return_loss_db"] = *p.measured_return_loss_db;
    return j;
}

inline ChannelProfile profile_from_json(const json& j) {
    ChannelProfile p;
    for (const auto& s : j.value("forward", json::array()))
        p.forward.push_back(segment_from_json(s));
    // a single-direction profile applies to both paths
    if (j.contains("return"))
        for (const auto& s : j.at("return"))
            p.return_path.push_back(segment_from_json(s));
    else
        p.return_path = p.forward;
    p.forward_group_delay_us_per_km =
        j.value("forward_group_delay_us_per_km", default_group_delay_us_per_km);
    p.return_group_delay_us_per_km =
        j.value("return_group_delay_us_per_km", default_group_delay_us_per_km);
    if (j.contains("measured_forward_loss_db"))
        p.measured_forward_loss_db = j.at("measured_forward_loss_db").get<double>();
    if (j.contains("measured_return_loss_db"))
        p.measured_return_loss_db = j.at("measured_return_loss_db").get<double>();
    return p;
}

inline json to_json(const SfpModel& m) {
    return {{"label", m.label},
            {"launch_dbm", m.launch_dbm},
            {"max_launch_dbm", m.max_launch_dbm},
            {"sensitivity_dbm", m.sensitivity_dbm},
            {"wavelength_nm", m.wavelength_nm},
            {"peer_wavelength_nm", m.peer_wavelength_nm},
            {"mode", m.mode == SfpModel::Mode::bidi_two_wavelength ? "bidi" : "duplex"}};
}

inline SfpModel sfp_from_json(const json& j) {
    SfpModel m;
    m.label = j.value("label", "sfp");
    m.launch_dbm = j.at("launch_dbm").get<double>();
    m.max_launch_dbm = j.value("max_launch_dbm", m.launch_dbm);
    m.sensitivity_dbm = j.at("sensitivity_dbm").get<double>();
    m.wavelength_nm = j.value("wavelength_nm", 1547.72);
    m.peer_wavelength_nm = j.value("peer_wavelength_nm", m.wavelength_nm);
    m.mode = j.value("mode", "duplex") == std::string("bidi")
                 ? SfpModel::Mode::bidi_two_wavelength
                 : SfpModel::Mode::duplex_single_wavelength;
    return m;
}

inline json to_json(const EdfaModel& m) {
    json j = {{"label", m.label},
              {"small_signal_gain_db", m.small_signal_gain_db},
              {"max_output_dbm", m.max_output_dbm},
              {"noise_figure_db", m.noise_figure_db},
              {"pump_current_scale", m.pump_current_scale},
              {"bandwidth_nm", m.bandwidth_nm}};
    if (m.measured_output_dbm)
        j["measured_output_dbm"] = *m.measured_output_dbm;
    return j;
}

inline EdfaModel edfa_from_json(const json& j) {
    EdfaModel m;
    m.label = j.value("label", "edfa");
    m.small_signal_gain_db = j.value("small_signal_gain_db", 30.0);
    m.max_output_dbm = j.value("max_output_dbm", 20.0);
    m.noise_figure_db = j.value("noise_figure_db", 5.0);
    m.pump_current_scale = j.value("pump_current_scale", 1.0);
    m.bandwidth_nm = j.value("bandwidth_nm", 40.0);
    if (j.contains("measured_output_dbm"))
        m.measured_output_dbm = j.at("measured_output_dbm").get<double>();
    return m;
}

inline json to_json(const FilterModel& f) {
    return {{"bandwidth_ghz", f.bandwidth_ghz}, {"insertion_loss_db", f.insertion_loss_db}};
}

inline FilterModel filter_from_json(const json& j) {
    FilterModel f;
    f.bandwidth_ghz = j.value("bandwidth_ghz", 100.0);
    f.insertion_loss_db = j.value("insertion_loss_db", 0.0);
    return f;
}

inline NoiseType noise_type_from_name(const std::string& name) {
    if (name == "white_pm") return NoiseType::white_pm;
    if (name == "flicker_pm") return NoiseType::flicker_pm;
    if (name == "white_fm") return NoiseType::white_fm;
    if (name == "random_walk_fm") return NoiseType::random_walk_fm;
    throw parse_error("unknown noise type: " + name);
}

inline json to_json(const NoiseSpec& spec) {
    json j;
    j["seed"] = spec.seed;
    j["n_samples"] = spec.n_samples;
    j["tau0_s"] = spec.tau0_s;
    j["components"] = json::array();
    for (const auto& c : spec.components)
        j["components"].push_back(
            {{"type", noise_type_name(c.type)}, {"amplitude_s", c.amplitude_s}});
    return j;
}

inline NoiseSpec noise_spec_from_json(const json& j) {
    NoiseSpec spec;
    spec.seed = j.value("seed", 0ULL);
    spec.n_samples = j.value("n_samples", 0ULL);
    spec.tau0_s = j.value("tau0_s", 1.0);
    for (const auto& c : j.value("components", json::array()))
        spec.components.push_back(
            {noise_type_from_name(c.at("type").get<std::string>()),
             c.at("amplitude_s").get<double>()});
    return spec;
}

inline AlphaMode alpha_mode_from_name(const std::string& name) {
    if (name == "paper")
        return AlphaMode::wr_len;
    if (name == "conventional")
        return AlphaMode::calibration;
    throw parse_error("alpha mode must be 'paper' or 'conventional'");
}

inline json to_json(const SimScenario& sc) {
    json j;
    j["name"] = sc.name;
    j["profile"] = to_json(sc.profile);
    j["sfp"] = to_json(sc.sfp);
    j["edfas"] = json::array();
    for (const auto& e : sc.edfas)
        j["edfas"].push_back(to_json(e));
    if (sc.filter)
        j["filter"] = to_json(*sc.filter);
    if (sc.applied_alpha_n)
        j["applied_alpha_n"] = *sc.applied_alpha_n;
    j["applied_alpha"] = sc.applied_alpha;
    j["alpha_mode"] = alpha_mode_name(sc.alpha_mode);
    j["noise"] = to_json(sc.noise);
    j["exchange_interval_s"] = sc.exchange_interval_s;
    j["pps_interval_s"] = sc.pps_interval_s;
    j["duration_s"] = sc.duration_s;
    j["dropout_process"] = {{"rate_per_hour", sc.dropout_process.rate_per_hour},
                            {"recovery_max_s", sc.dropout_process.recovery_max_s}};
    j["seed"] = sc.seed;
    j["servo_bandwidth_hz"] = sc.servo_bandwidth_hz;
    j["timestamp_jitter_rms_s"] = sc.timestamp_jitter_rms_s;
    j["tdc_jitter_rms_s"] = sc.tdc_jitter_rms_s;
    j["servo_enabled"] = sc.servo_enabled;
    if (sc.initial_offset_s)
        j["initial_offset_s"] = *sc.initial_offset_s;
    return j;
}

inline SimScenario scenario_from_json(const json& j) {
    SimScenario sc;
    sc.name = j.value("name", "scenario");
    sc.profile = profile_from_json(j.at("profile"));
    sc.sfp = sfp_from_json(j.at("sfp"));
    for (const auto& e : j.value("edfas", json::array()))
        sc.edfas.push_back(edfa_from_json(e));
    if (j.contains("filter"))
        sc.filter = filter_from_json(j.at("filter"));
    if (j.contains("applied_alpha_n"))
        sc.applied_alpha_n = j.at("applied_alpha_n").get<std::int64_t>();
    sc.applied_alpha = j.value("applied_alpha", 0.0);
    sc.alpha_mode = alpha_mode_from_name(j.value("alpha_mode", "paper"));
    if (j.contains("noise"))
        sc.noise = noise_spec_from_json(j.at("noise"));
    sc.exchange_interval_s = j.value("exchange_interval_s", 1.0);
    sc.pps_interval_s = j.value("pps_interval_s", 1.0);
    sc.duration_s = j.at("duration_s").get<double>();
    if (j.contains("dropout_process")) {
        sc.dropout_process.rate_per_hour =
            j.at("dropout_process").value("rate_per_hour", 0.0);
        sc.dropout_process.recovery_max_s =
            j.at("dropout_process").value("recovery_max_s", 18.0);
    }
    sc.seed = j.value("seed", 1ULL);
    sc.servo_bandwidth_hz = j.value("servo_bandwidth_hz", 0.05);
    sc.timestamp_jitter_rms_s = j.value("timestamp_jitter_rms_s", 3e-12);
    sc.tdc_jitter_rms_s = j.value("tdc_jitter_rms_s", 3e-12);
    sc.servo_enabled = j.value("servo_enabled", true);
    if (j.contains("initial_offset_s"))
        sc.initial_offset_s = j.at("initial_offset_s").get<double>();
    return sc;
}

inline json load_json_file(const std::string& path) {
    auto in = detail::open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
}

inline void write_json_file(const json& j, const std::string& path) {
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline void write_events_jsonl(const std::vector<SimEvent>& events, const std::string& path) {
    auto out = detail::open_out(path);
    for (const auto& e : events) {
        json j = {{"kind", sim_event_kind_name(e.kind)},
                  {"time_s", e.time_s},
                  {"value_s", e.value_s}};
        out << j.dump() << '\n';
    }
}

}  // namespace wrsim
