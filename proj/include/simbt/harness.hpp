#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simbt/simulation.hpp"

namespace simbt {

enum class RfCondition : uint8_t { Quiet, BusyRF, BusyAfterStart };
const char* rf_condition_name(RfCondition c);

// Plain key=value scenario description; see docs/FORMATS.md.
struct ScenarioConfig {
    std::string name;  // defaults to <master>-<target>-<rf>
    std::string master_profile = "OPO";
    std::string target_profile = "i30";
    RfCondition rf = RfCondition::Quiet;
    int wifi_channel = 6;
    int wifi_width_mhz = 20;
    double wifi_load = 1.0;
    double wifi_start_s = 30.0;  // BusyAfterStart: ramp begins here
    double wifi_ramp_s = 5.0;
    double bt_start_s = 0.0;     // link starts after this
    TrafficProfile traffic{TrafficKind::AudioStream, RateClass::BasicRateOnly, 0.0, 0.1};
    std::string afh = "off";     // off, cooperative or aggressive
    KernelKind kernel = KernelKind::BasicSpec;
    int runs = 10;
    double time_bound_s = 180.0;
    double follow_s = 60.0;
    bool known_uap = false;      // hand the sniffer the UAP instead of recovering it
    bool hires = false;
    bool spectrum = true;
    int64_t epoch_base_s = 1500000000;
    int64_t run_spacing_s = 600;
    uint64_t seed = 1;
    int workers = 1;

    std::string display_name() const;
    std::string to_text() const;
};

std::optional<ScenarioConfig> parse_scenario(std::string_view text, std::string* error = nullptr);

struct RunMetrics {
    std::string scenario;
    int run = 0;
    std::optional<int64_t> start_us;  // epoch µs
    int clk27_guesses = 0;
    std::optional<int64_t> clk27_acquired_us;
    std::optional<int64_t> first_decode_us;
    uint64_t packets_decoded = 0;  // excludes NULL and POLL
    uint64_t failed_decodes = 0;
    uint64_t null_packets = 0;
    uint64_t poll_packets = 0;
    uint64_t good_data_packets = 0;
    uint64_t undecodable = 0;
    std::vector<std::string> errors;

    bool acquired() const { return clk27_acquired_us.has_value(); }
    std::optional<double> time_to_clock_s() const;
    std::optional<double> time_to_decode_s() const;
    uint64_t decodes_total() const { return packets_decoded + null_packets + poll_packets; }
    bool operator==(const RunMetrics&) const = default;
};

RunMetrics metrics_from_counters(const SnifferCounters& c);
RunMetrics parse_console(std::string_view log);

// `<timestamp> ` followed by 79 characters, '1' for Bad, channel 0 first.
std::string export_afh_map(const AfhMap& map, int64_t timestamp_s);
struct AfhMapLine {
    int64_t timestamp_s = 0;
    std::vector<int> bad;
};
std::optional<AfhMapLine> parse_afh_map_line(std::string_view line);

struct RunOutput {
    RunMetrics metrics;
    std::string console;
    std::string afhmap;     // sniffer's inferred map, one line per survey
    std::string truthmap;   // master's map, one line per second
    std::string spectrum;
    PiconetStats piconet;
    uint64_t data_tx_following = 0;        // data packets sent while the sniffer followed
    uint64_t data_delivered_following = 0; // of those, delivered to the peer
    uint64_t sniffer_transmissions = 0;    // medium accounting, always 0
    double wifi_units = 0.0;
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<RunOutput> runs;
};

// Builds the world for run `index` from scratch.
WorldConfig build_world(const ScenarioConfig& cfg, int index);
RunOutput run_one(const ScenarioConfig& cfg, int index);
// Runs every repetition; with out_dir, writes runN.console, runN.afhmap,
// runN.truthmap, runN.spectrum, report.csv and summary.txt there.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir = std::nullopt);

std::string report_csv(const std::vector<RunMetrics>& metrics);
std::optional<RunMetrics> parse_report_row(std::string_view row);

struct ReportSummary {
    int runs = 0;
    int acquisitions = 0;
    double success_rate = 0.0;
    double null_poll_pct = 0.0;   // (null + poll) / all decodes
    double good_data_pct = 0.0;   // good data / all decodes
    std::optional<double> median_time_to_clock_s;
    std::string to_text() const;
};
ReportSummary summarize(const std::vector<RunMetrics>& metrics);

// Output directory from SIMBT_OUT, else "simbt_out".
std::filesystem::path default_output_dir();

}  // namespace simbt
