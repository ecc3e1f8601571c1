// SPDX-License-Identifier: Apache-2.0
//
// wrsim: simulate White Rabbit links, analyze PPS logs, and compute link
// budgets and asymmetry calibrations. All artifacts are plain CSV/JSON.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wrsim/io.hpp"

namespace fs = std::filesystem;
using wrsim::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_link = 3;
constexpr int exit_io = 4;

std::string default_out_dir() {
    if (const char* env = std::getenv("WRSIM_OUT_DIR"))
        return env;
    return "wrsim-out";
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json make_manifest(const std::string& command, const std::string& source,
                   std::uint64_t seed, const std::string& out_dir,
                   const std::vector<std::string>& outputs,
                   const std::vector<std::string>& stats, const std::string& grid) {
    json j;
    j["tool"] = "wrsim";
    j["version"] = wrsim::tool_version;
    j["command"] = command;
    j["source"] = source;
    j["seed"] = seed;
    j["output_dir"] = out_dir;
    j["outputs"] = outputs;
    j["statistics"] = stats;
    j["tau_grid"] = grid;
    j["timestamp_utc"] = utc_timestamp();
    return j;
}

wrsim::SimScenario resolve_scenario(const std::string& config) {
    for (const auto& sc : wrsim::replay_configurations())
        if (sc.name == config)
            return sc;
    return wrsim::scenario_from_json(wrsim::load_json_file(config));
}

struct AnalyzeOptions {
    std::vector<std::string> stats{"tdev", "mtie"};
    std::vector<int> taus;          // explicit window multipliers; empty = grid
    std::string grid = "octave";    // octave | dense
    double coarse_skew_s = 0.0;
    double nominal_interval_s = 1.0;
};

std::vector<int> grid_windows(const std::string& grid, wrsim::Statistic stat,
                              std::size_t n_samples) {
    const std::size_t max_w = wrsim::max_valid_window(stat, n_samples);
    if (grid == "dense")
        return wrsim::decade_windows(max_w);
    return wrsim::octave_windows(max_w);
}

int run_analyze_on_log(const wrsim::TimestampLog& log, const AnalyzeOptions& opt,
                       const std::string& out_dir, const std::string& source,
                       bool quiet = false) {
    fs::create_directories(out_dir);
    const auto paired = wrsim::pair_pps(log, opt.coarse_skew_s);
    const auto dropouts = wrsim::detect_dropouts(log);
    const auto longest = wrsim::longest_clean_segment(paired);

    std::vector<wrsim::StabilityCurve> curves;
    for (const auto& stat_name : opt.stats) {
        wrsim::Statistic stat;
        if (stat_name == "tdev")
            stat = wrsim::Statistic::tdev;
        else if (stat_name == "mtie")
            stat = wrsim::Statistic::mtie;
        else if (stat_name == "adev")
            stat = wrsim::Statistic::adev;
        else
            throw wrsim::parse_error("unknown statistic: " + stat_name);
        // statistics run per clean segment; the longest one is reported
        auto windows = opt.taus.empty() ? grid_windows(opt.grid, stat, longest.size())
                                        : opt.taus;
        curves.push_back(wrsim::stability_curve(longest, stat, windows));
    }

    // provenance lives in the manifest; the summary stays byte-reproducible
    json summary;
    summary["paired_samples"] = paired.series.size();
    summary["gap_count"] = paired.gaps.size();
    summary["longest_segment_samples"] = longest.size();
    summary["uptime_fraction"] = dropouts.uptime_fraction;
    summary["dropout_count"] = dropouts.dropouts.size();
    for (const auto& curve : curves) {
        if (curve.statistic == wrsim::Statistic::tdev && !curve.points.empty()) {
            auto best = curve.points.front();
            for (const auto& p : curve.points)
                if (p.value_s < best.value_s)
                    best = p;
            summary["min_tdev_s"] = best.value_s;
            summary["min_tdev_tau_s"] = best.tau_s;
        }
        if (curve.statistic == wrsim::Statistic::mtie) {
            for (const auto& p : curve.points)
                if (p.tau_s == 100.0)
                    summary["mtie_at_100s_s"] = p.value_s;
        }
    }

    const std::string curves_path = out_dir + "/curves.csv";
    const std::string dropouts_path = out_dir + "/dropouts.json";
    const std::string summary_path = out_dir + "/summary.json";
    wrsim::write_curves_csv(curves, curves_path);
    wrsim::write_json_file(wrsim::to_json(dropouts), dropouts_path);
    wrsim::write_json_file(summary, summary_path);
    wrsim::write_json_file(
        make_manifest("analyze", source, 0, out_dir,
                      {"curves.csv", "dropouts.json", "summary.json"}, opt.stats, opt.grid),
        out_dir + "/manifest.json");
    if (!quiet)
        std::cout << summary.dump(2) << '\n';
    return exit_ok;
}

int run_simulate(const wrsim::SimScenario& scenario, const std::string& out_dir,
                 const std::string& source, bool quiet = false) {
    fs::create_directories(out_dir);
    const auto output = wrsim::run(scenario);
    const std::string log_path = out_dir + "/log.csv";
    const std::string truth_path = out_dir + "/truth.csv";
    const std::string events_path = out_dir + "/events.jsonl";
    wrsim::write_timestamp_log_csv(output.log, log_path);
    wrsim::write_series_csv(output.true_offset_series, truth_path);
    wrsim::write_events_jsonl(output.events, events_path);
    wrsim::write_json_file(wrsim::to_json(scenario), out_dir + "/scenario.json");
    wrsim::write_json_file(
        make_manifest("simulate", source, scenario.seed, out_dir,
                      {"log.csv", "truth.csv", "events.jsonl", "scenario.json"}, {}, ""),
        out_dir + "/manifest.json");
    if (!quiet) {
        std::cout << "scenario " << scenario.name << ": " << output.log.channel_b_ps.size()
                  << " follower pulses, " << output.suppressed_epochs
                  << " suppressed epochs, final offset "
                  << wrsim::format_g12(output.final_offset_s) << " s\n";
    }
    return exit_ok;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"White Rabbit link simulator and timing-stability analyzer"};
    app.require_subcommand(1);

    std::string out_dir = default_out_dir();
    app.add_option("--out", out_dir, "Output directory (env WRSIM_OUT_DIR)");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario and write PPS logs");
    std::string sim_config;
    std::optional<std::uint64_t> sim_seed;
    sim_cmd->add_option("--config", sim_config,
                        "Scenario JSON path or built-in name")->required();
    sim_cmd->add_option("--seed", sim_seed, "Override the scenario seed");

    // analyze
    auto* an_cmd = app.add_subcommand("analyze", "Analyze a PPS timestamp log");
    std::string an_log;
    AnalyzeOptions an_opt;
    std::string stats_arg = "tdev,mtie";
    std::string taus_arg;
    an_cmd->add_option("--log", an_log, "TimestampLog CSV path")->required();
    an_cmd->add_option("--stats", stats_arg, "Comma list of tdev,mtie,adev");
    an_cmd->add_option("--taus", taus_arg, "Comma list of integer window multipliers");
    an_cmd->add_option("--grid", an_opt.grid, "Window grid: octave or dense")
        ->check(CLI::IsMember({"octave", "dense"}));
    an_cmd->add_option("--coarse-skew-s", an_opt.coarse_skew_s,
                       "Deterministic skew subtracted from channel B before pairing");
    an_cmd->add_option("--nominal-interval-s", an_opt.nominal_interval_s,
                       "Nominal pulse interval of the log");

    // budget
    auto* bud_cmd = app.add_subcommand("budget", "Compute an optical link budget");
    std::string bud_config, bud_profile, bud_direction = "forward";
    double bud_launch = 2.07, bud_max_launch = 5.0, bud_sensitivity = -23.0;
    double bud_wavelength = 1547.72, bud_osnr_threshold = 10.0;
    bool bud_default_edfas = false;
    bud_cmd->add_option("--config", bud_config, "Full chain JSON (sfp/profile/edfas/filter)");
    bud_cmd->add_option("--profile", bud_profile, "Channel profile JSON");
    bud_cmd->add_option("--direction", bud_direction, "forward or return")
        ->check(CLI::IsMember({"forward", "return"}));
    bud_cmd->add_option("--launch-dbm", bud_launch, "Transmit power");
    bud_cmd->add_option("--max-launch-dbm", bud_max_launch, "Transceiver max launch");
    bud_cmd->add_option("--sensitivity-dbm", bud_sensitivity, "Receiver sensitivity");
    bud_cmd->add_option("--wavelength-nm", bud_wavelength, "Signal wavelength");
    bud_cmd->add_option("--osnr-threshold-db", bud_osnr_threshold,
                        "OSNR needed to close, in the 0.1 nm reference bandwidth");
    bud_cmd->add_flag("--amplified", bud_default_edfas,
                      "Insert default booster and pre-amplifier stages");

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "Asymmetry parameter calibration");
    std::optional<double> cal_dms, cal_dsm;
    std::string cal_profile;
    double cal_applied = 0.0;
    std::string cal_mode = "paper";
    cal_cmd->add_option("--delta-ms", cal_dms, "Leader->follower latency, seconds");
    cal_cmd->add_option("--delta-sm", cal_dsm, "Follower->leader latency, seconds");
    cal_cmd->add_option("--profile", cal_profile,
                        "Channel profile JSON (latencies from lengths)");
    cal_cmd->add_option("--applied-alpha", cal_applied,
                        "Alpha assumed by the follower when predicting skew");
    cal_cmd->add_option("--alpha-mode", cal_mode, "Encoding: paper or conventional")
        ->check(CLI::IsMember({"paper", "conventional"}));

    // demo
    auto* demo_cmd = app.add_subcommand("demo", "Simulate and analyze the built-in scenarios");
    unsigned demo_jobs = 1;
    demo_cmd->add_option("--jobs", demo_jobs, "Parallel scenario runs")
        ->check(CLI::Range(1u, 16u));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try {
        if (sim_cmd->parsed()) {
            auto scenario = resolve_scenario(sim_config);
            if (sim_seed) {
                scenario.seed = *sim_seed;
                scenario.noise.seed = *sim_seed;
            }
            return run_simulate(scenario, out_dir, sim_config);
        }

        if (an_cmd->parsed()) {
            an_opt.stats.clear();
            std::stringstream ss(stats_arg);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty())
                    an_opt.stats.push_back(item);
            if (!taus_arg.empty()) {
                std::stringstream ts(taus_arg);
                while (std::getline(ts, item, ','))
                    if (!item.empty())
                        an_opt.taus.push_back(std::stoi(item));
            }
            const auto log = wrsim::read_timestamp_log_csv(an_log, an_opt.nominal_interval_s);
            return run_analyze_on_log(log, an_opt, out_dir, an_log);
        }

        if (bud_cmd->parsed()) {
            auto require_segments = [](const wrsim::ChannelProfile& p) {
                if (p.forward.empty())
                    throw wrsim::parse_error("budget: profile has no segments");
            };
            wrsim::LinkBudgetReport report;
            if (!bud_config.empty()) {
                const json j = wrsim::load_json_file(bud_config);
                const auto sfp = wrsim::sfp_from_json(j.at("sfp"));
                const auto profile = wrsim::profile_from_json(j.at("profile"));
                require_segments(profile);
                std::optional<wrsim::EdfaModel> booster, preamp;
                std::optional<wrsim::FilterModel> filter;
                if (j.contains("booster"))
                    booster = wrsim::edfa_from_json(j.at("booster"));
                if (j.contains("preamp"))
                    preamp = wrsim::edfa_from_json(j.at("preamp"));
                if (j.contains("filter"))
                    filter = wrsim::filter_from_json(j.at("filter"));
                wrsim::BudgetOptions options;
                options.osnr_threshold_db = j.value("osnr_threshold_db", 10.0);
                const auto dir = j.value("direction", "forward") == std::string("return")
                                     ? wrsim::Direction::return_path
                                     : wrsim::Direction::forward;
                report = wrsim::link_budget(sfp, profile, dir, booster, preamp, filter,
                                            options);
            } else if (!bud_profile.empty()) {
                const auto profile = wrsim::profile_from_json(
                    wrsim::load_json_file(bud_profile));
                require_segments(profile);
                wrsim::SfpModel sfp;
                sfp.launch_dbm = bud_launch;
                sfp.max_launch_dbm = bud_max_launch;
                sfp.sensitivity_dbm = bud_sensitivity;
                sfp.wavelength_nm = bud_wavelength;
                sfp.peer_wavelength_nm = bud_wavelength;
                std::optional<wrsim::EdfaModel> booster, preamp;
                if (bud_default_edfas) {
                    booster = wrsim::EdfaModel{"booster", 30.0, 20.0, 5.0, 1.0, 40.0, {}};
                    preamp = wrsim::EdfaModel{"preamp", 30.0, 20.0, 5.0, 1.0, 40.0, {}};
                }
                wrsim::BudgetOptions options;
                options.osnr_threshold_db = bud_osnr_threshold;
                const auto dir = bud_direction == "return" ? wrsim::Direction::return_path
                                                           : wrsim::Direction::forward;
                report = wrsim::link_budget(sfp, profile, dir, booster, preamp,
                                            std::nullopt, options);
            } else {
                std::cerr << "budget: need --config or --profile\n";
                return exit_config;
            }
            std::cout << wrsim::budget_table(report);
            fs::create_directories(out_dir);
            wrsim::write_json_file(wrsim::to_json(report), out_dir + "/budget.json");
            return exit_ok;
        }

        if (cal_cmd->parsed()) {
            double dms = 0.0, dsm = 0.0;
            if (cal_dms && cal_dsm) {
                dms = *cal_dms;
                dsm = *cal_dsm;
            } else if (!cal_profile.empty()) {
                const auto profile = wrsim::profile_from_json(
                    wrsim::load_json_file(cal_profile));
                dms = wrsim::one_way_latency_s(profile, wrsim::Direction::forward);
                dsm = wrsim::one_way_latency_s(profile, wrsim::Direction::return_path);
            } else {
                std::cerr << "calibrate: need --delta-ms/--delta-sm or --profile\n";
                return exit_config;
            }
            const auto mode = wrsim::alpha_mode_from_name(cal_mode);
            const double alpha = wrsim::alpha_from_latencies(dms, dsm);
            json j;
            j["delta_ms_s"] = dms;
            j["delta_sm_s"] = dsm;
            j["alpha"] = alpha;
            j["alpha_mode"] = cal_mode;
            try {
                const std::int64_t raw = wrsim::encode_alpha(alpha, mode);
                j["alpha_n"] = raw;
                j["in_range"] = wrsim::alpha_n_in_range(raw);
            } catch (const wrsim::pole_error&) {
                j["alpha_n"] = nullptr;
                j["in_range"] = false;
                j["note"] = "alpha at the encoding pole; compensation not possible";
            }
            const auto config = wrsim::make_asymmetry(dms, dsm, mode);
            j["applied_alpha"] = cal_applied;
            j["predicted_skew_s"] = wrsim::predicted_skew(config, cal_applied);
            std::cout << j.dump(2) << '\n';
            fs::create_directories(out_dir);
            wrsim::write_json_file(j, out_dir + "/calibration.json");
            return exit_ok;
        }

        if (demo_cmd->parsed()) {
            const auto scenarios = wrsim::replay_configurations();
            std::vector<std::string> lines(scenarios.size());
            std::atomic<std::size_t> next{0};
            std::atomic<int> worst{exit_ok};
            auto worker = [&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= scenarios.size())
                        return;
                    const auto& sc = scenarios[i];
                    const std::string dir = out_dir + "/" + sc.name;
                    try {
                        run_simulate(sc, dir, sc.name, true);
                        const auto log = wrsim::read_timestamp_log_csv(
                            dir + "/log.csv", sc.pps_interval_s);
                        AnalyzeOptions opt;
                        run_analyze_on_log(log, opt, dir, sc.name, true);
                        const auto summary = wrsim::load_json_file(dir + "/summary.json");
                        lines[i] = sc.name + ": uptime " +
                                   wrsim::format_g12(summary.at("uptime_fraction")
                                                         .get<double>()) +
                                   ", min TDEV " +
                                   wrsim::format_g12(summary.value("min_tdev_s", 0.0)) +
                                   " s at tau " +
                                   wrsim::format_g12(summary.value("min_tdev_tau_s", 0.0)) +
                                   " s";
                    } catch (const std::exception& e) {
                        lines[i] = sc.name + ": FAILED (" + e.what() + ")";
                        worst.store(exit_link);
                    }
                }
            };
            std::vector<std::thread> pool;
            const unsigned n_threads = std::min<unsigned>(demo_jobs, scenarios.size());
            for (unsigned t = 0; t < n_threads; ++t)
                pool.emplace_back(worker);
            for (auto& th : pool)
                th.join();
            for (const auto& line : lines)
                std::cout << line << '\n';
            return worst.load();
        }
    } catch (const wrsim::link_fails& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_link;
    } catch (const wrsim::io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const wrsim::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_config;
}

}  // namespace

int main(int argc, char** argv) {
    return dispatch(argc, argv);
}
