#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "simbt/attacks.hpp"
#include "simbt/harness.hpp"

namespace fs = std::filesystem;
using namespace simbt;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::optional<std::string> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) return std::nullopt;
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

int cmd_run(const std::string& scenario_file, const std::string& out, int runs, int workers, bool hires) {
    auto text = slurp(scenario_file);
    if (!text) {
        std::cerr << "cannot read " << scenario_file << "\n";
        return kConfigError;
    }
    std::string err;
    auto cfg = parse_scenario(*text, &err);
    if (!cfg) {
        std::cerr << scenario_file << ": " << err << "\n";
        return kConfigError;
    }
    if (runs > 0) cfg->runs = runs;
    if (workers > 0) cfg->workers = workers;
    if (hires) cfg->hires = true;
    fs::path dir = out.empty() ? default_output_dir() / cfg->display_name() : fs::path(out);
    ScenarioResult res = run_scenario(*cfg, dir);
    std::vector<RunMetrics> metrics;
    for (const auto& r : res.runs) {
        metrics.push_back(r.metrics);
        for (const auto& e : r.metrics.errors) std::cerr << "run " << r.metrics.run << ": " << e << "\n";
    }
    std::cout << report_csv(metrics) << summarize(metrics).to_text() << "output " << dir.string() << "\n";
    return kOk;
}

int cmd_crack(const std::string& transcript_file, const std::string& a, const std::string& b, int max_digits,
              int workers, bool exhaustive) {
    auto text = slurp(transcript_file);
    if (!text) {
        std::cerr << "cannot read " << transcript_file << "\n";
        return kConfigError;
    }
    std::string err;
    auto t = PairingTranscript::parse(*text, &err);
    if (!t) {
        std::cerr << transcript_file << ": " << err << "\n";
        return kConfigError;
    }
    auto addr_a = BdAddr::parse(a);
    auto addr_b = BdAddr::parse(b);
    if (!addr_a || !addr_b) {
        std::cerr << "addresses are 12 hex digits, NAP first\n";
        return kConfigError;
    }
    if (max_digits < 4 || max_digits > 16) {
        std::cerr << "--max-digits is 4..16\n";
        return kConfigError;
    }
    CrackOptions opt;
    opt.max_digits = max_digits;
    opt.workers = workers;
    opt.exhaustive = exhaustive;
    auto t0 = std::chrono::steady_clock::now();
    CrackResult r = crack_pin(*t, *addr_a, *addr_b, opt);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!r.error.empty()) {
        std::cerr << "transcript cannot be attacked: " << r.error << "\n";
        return kRuntimeError;
    }
    std::printf("candidates %llu\nsingle_match %llu\nseconds %.3f\n",
                static_cast<unsigned long long>(r.candidates_tested), static_cast<unsigned long long>(r.single_match),
                secs);
    if (!r.found) {
        std::printf("pin not found up to %d digits\n", max_digits);
        return kRuntimeError;
    }
    std::printf("pin %s\nk_ab %s\n", r.pin.c_str(), to_hex(r.k_ab).c_str());
    if (exhaustive) std::printf("accepting %llu\n", static_cast<unsigned long long>(r.accepting));
    return kOk;
}

int cmd_report(const std::string& dir_arg) {
    fs::path dir(dir_arg);
    if (!fs::is_directory(dir)) {
        std::cerr << dir_arg << " is not a directory\n";
        return kConfigError;
    }
    std::string scenario = dir.filename().string();
    if (auto s = slurp(dir / "scenario.txt")) {
        if (auto cfg = parse_scenario(*s)) scenario = cfg->display_name();
    }
    std::map<int, fs::path> consoles;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string name = e.path().filename().string();
        if (!name.starts_with("run") || !name.ends_with(".console")) continue;
        std::string num = name.substr(3, name.size() - 3 - 8);
        if (num.empty() || !std::all_of(num.begin(), num.end(), ::isdigit)) continue;
        consoles[std::stoi(num)] = e.path();
    }
    std::vector<RunMetrics> metrics;
    for (const auto& [run, path] : consoles) {
        auto text = slurp(path);
        if (!text) {
            std::cerr << "cannot read " << path << "\n";
            return kRuntimeError;
        }
        RunMetrics m = parse_console(*text);
        m.scenario = scenario;
        m.run = run;
        for (const auto& e : m.errors) std::cerr << path.filename().string() << ": " << e << "\n";
        metrics.push_back(std::move(m));
    }
    std::string csv = report_csv(metrics);
    std::ofstream(dir / "report.csv", std::ios::binary) << csv;
    std::cout << csv << summarize(metrics).to_text();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bluetooth piconet, interference and passive-sniffer simulator"};
    app.require_subcommand(1);

    std::string scenario, out;
    int runs = 0, run_workers = 0;
    bool hires = false;
    auto* run = app.add_subcommand("run", "run a scenario and write per-run artifacts");
    run->add_option("--scenario", scenario, "scenario file (key = value)")->required();
    run->add_option("--out", out, "output directory (default $SIMBT_OUT/<scenario>)");
    run->add_option("--runs", runs, "override the run count");
    run->add_option("--workers", run_workers, "parallel runs");
    run->add_flag("--hires", hires, "microsecond timestamps in console logs");

    std::string transcript, addr_a, addr_b;
    int max_digits = 6, crack_workers = 0;
    bool exhaustive = false;
    auto* crack = app.add_subcommand("crack", "recover the PIN from a pairing transcript");
    crack->add_option("--transcript", transcript, "transcript file")->required();
    crack->add_option("--addr-a", addr_a, "initiator address, 12 hex digits")->required();
    crack->add_option("--addr-b", addr_b, "responder address, 12 hex digits")->required();
    crack->add_option("--max-digits", max_digits, "longest PIN to try");
    crack->add_option("--workers", crack_workers, "worker threads (0 = all cores)");
    crack->add_flag("--exhaustive", exhaustive, "search the whole space and count accepting PINs");

    std::string dir;
    auto* report = app.add_subcommand("report", "rebuild report.csv from console logs");
    report->add_option("--dir", dir, "directory holding runN.console files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*run) return cmd_run(scenario, out, runs, run_workers, hires);
        if (*crack) return cmd_crack(transcript, addr_a, addr_b, max_digits, crack_workers, exhaustive);
        if (*report) return cmd_report(dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kConfigError;
}
