#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "simbt/harness.hpp"

using namespace simbt;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) {
    std::ifstream in(std::string(SIMBT_FIXTURE_DIR) + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) out.push_back(l);
    return out;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(SIMBT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("simbt_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("scenario parser accepts the documented keys") {
    std::string text =
        "# comment\n"
        "name = ACEII-Bose-Quiet\n"
        "master = ACEII\n"
        "target = Bose\n"
        "rf = BusyRF\n"
        "wifi_channel = 11\n"
        "traffic = AudioStream\n"
        "rate = MixedEdr\n"
        "edr_fraction = 0.65\n"
        "afh = aggressive\n"
        "kernel = ReferenceHash\n"
        "runs = 3\n"
        "known_uap = 1\n"
        "seed = 99\n";
    std::string err;
    auto c = parse_scenario(text, &err);
    REQUIRE_MESSAGE(c, err);
    CHECK(c->name == "ACEII-Bose-Quiet");
    CHECK(c->master_profile == "ACEII");
    CHECK(c->rf == RfCondition::BusyRF);
    CHECK(c->wifi_channel == 11);
    CHECK(c->traffic.kind == TrafficKind::AudioStream);
    CHECK(c->traffic.rate == RateClass::MixedEdr);
    CHECK(c->traffic.edr_fraction == doctest::Approx(0.65));
    CHECK(c->afh == "aggressive");
    CHECK(c->kernel == KernelKind::ReferenceHash);
    CHECK(c->runs == 3);
    CHECK(c->known_uap);
    CHECK(c->seed == 99);
    // to_text is itself parseable and stable.
    auto again = parse_scenario(c->to_text());
    REQUIRE(again);
    CHECK(again->to_text() == c->to_text());
}

TEST_CASE("scenario parser rejects bad input with a line number") {
    std::string err;
    CHECK_FALSE(parse_scenario("runs = 3\nbogus = 1\n", &err));
    CHECK(err == "line 2: unknown key bogus");
    CHECK_FALSE(parse_scenario("rf = Noisy\n", &err));
    CHECK(err == "line 1: rf is Quiet, BusyRF or BusyAfterStart");
    CHECK_FALSE(parse_scenario("runs\n", &err));
    CHECK(err == "line 1: expected key = value");
    CHECK_FALSE(parse_scenario("runs = x\n", &err));
    CHECK_FALSE(parse_scenario("runs = 0\n", &err));
    CHECK(err == "runs must be at least 1");
    CHECK_FALSE(parse_scenario("wifi_width_mhz = 80\n"));
    CHECK_FALSE(parse_scenario("edr_fraction = 1.5\n"));
    auto d = parse_scenario("");
    REQUIRE(d);
    CHECK(d->display_name() == "OPO-i30-Quiet");
}

TEST_CASE("console fixture parses to hand-counted metrics") {
    RunMetrics m = parse_console(fixture("console.txt"));
    CHECK(m.errors.empty());
    CHECK(m.start_us == 1508069764000000);
    CHECK(m.clk27_guesses == 3);
    CHECK(m.clk27_acquired_us == 1508069771250000);
    CHECK(m.first_decode_us == 1508069771250625);
    CHECK(m.packets_decoded == 3);
    CHECK(m.null_packets == 2);
    CHECK(m.poll_packets == 1);
    CHECK(m.failed_decodes == 1);
    CHECK(m.good_data_packets == 2);
    CHECK(m.undecodable == 1);
    CHECK(*m.time_to_clock_s() == doctest::Approx(7.25));

    RunMetrics bad = parse_console("systime=15x capture start\n");
    REQUIRE(bad.errors.size() == 1);
    CHECK(bad.errors[0] == "line 1: bad systime '15x'");
}

TEST_CASE("CSV fixture round trip") {
    auto rows = lines_of(fixture("report.csv"));
    REQUIRE(rows.size() == 3);
    std::vector<RunMetrics> ms;
    for (size_t i = 1; i < rows.size(); ++i) {
        auto m = parse_report_row(rows[i]);
        REQUIRE(m);
        ms.push_back(*m);
    }
    CHECK(report_csv(ms) == fixture("report.csv"));
    // The fixture's first row is the console fixture's run.
    RunMetrics fromlog = parse_console(fixture("console.txt"));
    fromlog.scenario = "OPO-i30-BusyRF";
    fromlog.run = 1;
    fromlog.undecodable = 0;
    CHECK(ms[0] == fromlog);
    CHECK_FALSE(ms[1].acquired());
    CHECK(ms[1].clk27_guesses == 10);

    ReportSummary s = summarize(ms);
    CHECK(s.runs == 2);
    CHECK(s.acquisitions == 1);
    CHECK(s.success_rate == doctest::Approx(0.5));
    // (2 + 1) of 6 decodes.
    CHECK(s.null_poll_pct == doctest::Approx(50.0));
    CHECK(s.good_data_pct == doctest::Approx(100.0 * 2 / 6));
    CHECK(*s.median_time_to_clock_s == doctest::Approx(7.25));
}

TEST_CASE("report rows in table form") {
    auto m = parse_report_row("ACEII-Bose-Quiet & 2 & 1508069764 & 10 & fail & & & fail & & 0 & 0 & 0 & 0 \\\\");
    REQUIRE(m);
    CHECK(m->scenario == "ACEII-Bose-Quiet");
    CHECK(m->run == 2);
    CHECK_FALSE(m->acquired());
    CHECK_FALSE(parse_report_row("a,b,c"));
    CHECK_FALSE(parse_report_row("x,1,1508069764,zz,fail,,,fail,,0,0,0,0,0"));
}

TEST_CASE("AFH map lines") {
    auto rows = lines_of(fixture("afhmap.txt"));
    REQUIRE(rows.size() == 3);
    auto a = parse_afh_map_line(rows[0]);
    auto b = parse_afh_map_line(rows[1]);
    auto c = parse_afh_map_line(rows[2]);
    REQUIRE(a);
    REQUIRE(b);
    REQUIRE(c);
    CHECK(a->bad.empty());
    CHECK(b->bad.size() == 22);
    CHECK(b->bad.front() == 24);
    CHECK(c->bad.size() == 59);
    CHECK(export_afh_map(*AfhMap::with_bad(b->bad), b->timestamp_s) == rows[1]);
    CHECK_FALSE(parse_afh_map_line("123 0101"));
    CHECK_FALSE(parse_afh_map_line("x " + std::string(79, '0')));
    CHECK_FALSE(parse_afh_map_line("1 " + std::string(78, '0') + "2"));
}

TEST_CASE("run_scenario artifacts agree with each other") {
    ScenarioConfig sc;
    sc.name = "unit";
    sc.runs = 2;
    sc.follow_s = 2;
    sc.seed = 3;
    fs::path dir = scratch("artifacts");
    ScenarioResult r = run_scenario(sc, dir);
    REQUIRE(r.runs.size() == 2);
    for (const char* f : {"run1.console", "run2.console", "run1.afhmap", "run1.truthmap", "run1.spectrum",
                          "report.csv", "summary.txt", "scenario.txt"})
        CHECK_MESSAGE(fs::exists(dir / f), f);
    for (const auto& run : r.runs) {
        CHECK(run.metrics.errors.empty());
        CHECK(run.sniffer_transmissions == 0);
        CHECK(run.metrics.acquired());
    }
    // Run starts are spaced apart on the epoch axis.
    CHECK(*r.runs[1].metrics.start_us - *r.runs[0].metrics.start_us == sc.run_spacing_s * 1000000);
    std::vector<RunMetrics> ms;
    for (const auto& run : r.runs) ms.push_back(run.metrics);
    std::ifstream in(dir / "report.csv");
    std::stringstream written;
    written << in.rdbuf();
    CHECK(written.str() == report_csv(ms));
    // The console log alone reproduces the run's metrics.
    std::ifstream con(dir / "run1.console");
    std::stringstream log;
    log << con.rdbuf();
    RunMetrics reparsed = parse_console(log.str());
    reparsed.scenario = ms[0].scenario;
    reparsed.run = ms[0].run;
    CHECK(reparsed == ms[0]);
    fs::remove_all(dir);
}

TEST_CASE("CLI exit codes") {
    fs::path dir = scratch("cli");
    std::ofstream(dir / "ok.scn") << "runs = 1\nfollow_s = 1\n";
    std::ofstream(dir / "bad.scn") << "runs = zero\n";
    CHECK(run_cli("run --scenario " + (dir / "ok.scn").string() + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "run1.console"));
    CHECK(run_cli("report --dir " + (dir / "out").string()) == 0);
    CHECK(run_cli("run --scenario " + (dir / "bad.scn").string()) == 1);
    CHECK(run_cli("run --scenario " + (dir / "missing.scn").string()) == 1);
    CHECK(run_cli("report --dir " + (dir / "nowhere").string()) == 1);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("frobnicate") == 1);

    std::string tr = std::string(SIMBT_FIXTURE_DIR) + "/transcript.txt";
    CHECK(run_cli("crack --transcript " + tr + " --addr-a 0002729c1d2e --addr-b 001a7dda7113 --max-digits 4") == 0);
    CHECK(run_cli("crack --transcript " + tr + " --addr-a 0002729c1d2e --addr-b 001a7dda7113 --max-digits 3") == 1);
    CHECK(run_cli("crack --transcript " + tr + " --addr-a nothex --addr-b 001a7dda7113") == 1);
    // Wrong addresses: the search runs and finds nothing.
    CHECK(run_cli("crack --transcript " + tr + " --addr-a 0002729c1d2f --addr-b 001a7dda7113 --max-digits 4") == 2);
    std::ofstream(dir / "partial.txt") << "1 A B 00112233445566778899aabbccddeeff\n";
    CHECK(run_cli("crack --transcript " + (dir / "partial.txt").string() +
                  " --addr-a 0002729c1d2e --addr-b 001a7dda7113") == 2);
    fs::remove_all(dir);
}
