#include "simbt/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace simbt {

const char* rf_condition_name(RfCondition c) {
    switch (c) {
        case RfCondition::Quiet: return "Quiet";
        case RfCondition::BusyRF: return "BusyRF";
        case RfCondition::BusyAfterStart: return "BusyAfterStart";
    }
    return "?";
}

namespace {

std::string trim(std::string_view s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string_view::npos) return {};
    size_t b = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(a, b - a + 1));
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::optional<RfCondition> rf_from_name(std::string_view s) {
    if (s == "Quiet" || s == "quiet") return RfCondition::Quiet;
    if (s == "BusyRF" || s == "busy") return RfCondition::BusyRF;
    if (s == "BusyAfterStart" || s == "busy_after_start") return RfCondition::BusyAfterStart;
    return std::nullopt;
}

std::optional<TrafficKind> traffic_from_name(std::string_view s) {
    if (s == "Idle") return TrafficKind::Idle;
    if (s == "PairingOnly") return TrafficKind::PairingOnly;
    if (s == "AudioStream") return TrafficKind::AudioStream;
    return std::nullopt;
}

// FNV-1a over the profile name; the address of a named device is fixed.
BdAddr profile_address(std::string_view name) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) h = (h ^ static_cast<uint8_t>(c)) * 0x100000001b3ULL;
    return BdAddr::from_u64(splitmix64(h) & 0xffffffffffffULL);
}

int64_t seconds_to_slots(double s) { return static_cast<int64_t>(std::llround(s * 1e6 / kSlotUs)); }

std::optional<int64_t> parse_epoch_us(std::string_view tok) {
    auto dot = tok.find('.');
    std::string_view whole = tok.substr(0, dot);
    int64_t s = 0;
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), s);
    if (ec != std::errc{} || p != whole.data() + whole.size() || whole.empty()) return std::nullopt;
    int64_t us = 0;
    if (dot != std::string_view::npos) {
        std::string_view frac = tok.substr(dot + 1);
        if (frac.size() != 6) return std::nullopt;
        auto [q, ec2] = std::from_chars(frac.data(), frac.data() + frac.size(), us);
        if (ec2 != std::errc{} || q != frac.data() + frac.size()) return std::nullopt;
    }
    return s * 1000000 + us;
}

std::string format_epoch(int64_t us) {
    char buf[40];
    if (us % 1000000 == 0)
        std::snprintf(buf, sizeof buf, "%" PRId64, us / 1000000);
    else
        std::snprintf(buf, sizeof buf, "%" PRId64 ".%06" PRId64, us / 1000000, us % 1000000);
    return buf;
}

std::string mm_ss(double s) {
    int64_t whole = static_cast<int64_t>(std::floor(s));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02" PRId64 ":%02" PRId64, whole / 60, whole % 60);
    return buf;
}

// Value of `key=` inside a console line, up to the next space.
std::string_view field(std::string_view line, std::string_view key) {
    size_t at = line.find(key);
    if (at == std::string_view::npos) return {};
    at += key.size();
    size_t end = line.find(' ', at);
    return line.substr(at, end == std::string_view::npos ? std::string_view::npos : end - at);
}

}  // namespace

std::string ScenarioConfig::display_name() const {
    if (!name.empty()) return name;
    return master_profile + "-" + target_profile + "-" + rf_condition_name(rf);
}

std::string ScenarioConfig::to_text() const {
    std::ostringstream o;
    o << "name = " << display_name() << "\n"
      << "master = " << master_profile << "\n"
      << "target = " << target_profile << "\n"
      << "rf = " << rf_condition_name(rf) << "\n"
      << "wifi_channel = " << wifi_channel << "\n"
      << "wifi_width_mhz = " << wifi_width_mhz << "\n"
      << "wifi_load = " << fmt_double(wifi_load) << "\n"
      << "wifi_start_s = " << fmt_double(wifi_start_s) << "\n"
      << "wifi_ramp_s = " << fmt_double(wifi_ramp_s) << "\n"
      << "bt_start_s = " << fmt_double(bt_start_s) << "\n"
      << "traffic = " << traffic_kind_name(traffic.kind) << "\n"
      << "rate = " << rate_class_name(traffic.rate) << "\n"
      << "edr_fraction = " << fmt_double(traffic.edr_fraction) << "\n"
      << "control_fraction = " << fmt_double(traffic.control_fraction) << "\n"
      << "afh = " << afh << "\n"
      << "kernel = " << kernel_name(kernel) << "\n"
      << "runs = " << runs << "\n"
      << "time_bound_s = " << fmt_double(time_bound_s) << "\n"
      << "follow_s = " << fmt_double(follow_s) << "\n"
      << "known_uap = " << (known_uap ? 1 : 0) << "\n"
      << "hires = " << (hires ? 1 : 0) << "\n"
      << "spectrum = " << (spectrum ? 1 : 0) << "\n"
      << "epoch_base = " << epoch_base_s << "\n"
      << "run_spacing_s = " << run_spacing_s << "\n"
      << "seed = " << seed << "\n"
      << "workers = " << workers << "\n";
    return o.str();
}

std::optional<ScenarioConfig> parse_scenario(std::string_view text, std::string* error) {
    ScenarioConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& m) -> std::optional<ScenarioConfig> {
        if (error) *error = lineno ? "line " + std::to_string(lineno) + ": " + m : m;
        return std::nullopt;
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) return fail("expected key = value");
        std::string k = trim(t.substr(0, eq)), v = trim(t.substr(eq + 1));
        if (v.empty()) return fail("empty value for " + k);
        try {
            size_t used = 0;
            auto num = [&](auto parse) {
                auto r = parse(v, &used);
                if (used != v.size()) throw std::invalid_argument(k);
                return r;
            };
            auto as_double = [&] { return num([](const std::string& s, size_t* u) { return std::stod(s, u); }); };
            auto as_int = [&] { return num([](const std::string& s, size_t* u) { return std::stoll(s, u); }); };
            auto as_bool = [&] {
                if (v == "1" || v == "true") return true;
                if (v == "0" || v == "false") return false;
                throw std::invalid_argument(k);
            };
            if (k == "name") c.name = v;
            else if (k == "master") c.master_profile = v;
            else if (k == "target") c.target_profile = v;
            else if (k == "rf") {
                auto r = rf_from_name(v);
                if (!r) return fail("rf is Quiet, BusyRF or BusyAfterStart");
                c.rf = *r;
            } else if (k == "wifi_channel") c.wifi_channel = static_cast<int>(as_int());
            else if (k == "wifi_width_mhz") c.wifi_width_mhz = static_cast<int>(as_int());
            else if (k == "wifi_load") c.wifi_load = as_double();
            else if (k == "wifi_start_s") c.wifi_start_s = as_double();
            else if (k == "wifi_ramp_s") c.wifi_ramp_s = as_double();
            else if (k == "bt_start_s") c.bt_start_s = as_double();
            else if (k == "traffic") {
                auto t2 = traffic_from_name(v);
                if (!t2) return fail("traffic is Idle, PairingOnly or AudioStream");
                c.traffic.kind = *t2;
            } else if (k == "rate") {
                if (v == "BasicRateOnly") c.traffic.rate = RateClass::BasicRateOnly;
                else if (v == "MixedEdr") c.traffic.rate = RateClass::MixedEdr;
                else return fail("rate is BasicRateOnly or MixedEdr");
            } else if (k == "edr_fraction") c.traffic.edr_fraction = as_double();
            else if (k == "control_fraction") c.traffic.control_fraction = as_double();
            else if (k == "afh") {
                if (v != "off" && !AfhPolicy::preset(v)) return fail("afh is off, cooperative or aggressive");
                c.afh = v;
            } else if (k == "kernel") {
                if (v == kernel_name(KernelKind::BasicSpec)) c.kernel = KernelKind::BasicSpec;
                else if (v == kernel_name(KernelKind::ReferenceHash)) c.kernel = KernelKind::ReferenceHash;
                else return fail("unknown kernel " + v);
            } else if (k == "runs") c.runs = static_cast<int>(as_int());
            else if (k == "time_bound_s") c.time_bound_s = as_double();
            else if (k == "follow_s") c.follow_s = as_double();
            else if (k == "known_uap") c.known_uap = as_bool();
            else if (k == "hires") c.hires = as_bool();
            else if (k == "spectrum") c.spectrum = as_bool();
            else if (k == "epoch_base") c.epoch_base_s = as_int();
            else if (k == "run_spacing_s") c.run_spacing_s = as_int();
            else if (k == "seed") c.seed = static_cast<uint64_t>(as_int());
            else if (k == "workers") c.workers = static_cast<int>(as_int());
            else return fail("unknown key " + k);
        } catch (const std::exception&) {
            return fail("bad value for " + k + ": " + v);
        }
    }
    lineno = 0;
    if (c.runs < 1) return fail("runs must be at least 1");
    if (c.time_bound_s <= 0 || c.follow_s < 0) return fail("time_bound_s must be positive and follow_s non-negative");
    if (c.wifi_channel < 1 || c.wifi_channel > 13) return fail("wifi_channel is 1..13");
    if (c.wifi_width_mhz != 20 && c.wifi_width_mhz != 40) return fail("wifi_width_mhz is 20 or 40");
    if (c.wifi_load < 0 || c.wifi_load > 1) return fail("wifi_load is within [0, 1]");
    if (c.traffic.edr_fraction < 0 || c.traffic.edr_fraction > 1) return fail("edr_fraction is within [0, 1]");
    if (c.traffic.control_fraction < 0 || c.traffic.control_fraction > 1)
        return fail("control_fraction is within [0, 1]");
    if (c.workers < 1) return fail("workers must be at least 1");
    if (c.bt_start_s < 0 || c.wifi_start_s < 0 || c.wifi_ramp_s < 0) return fail("times must be non-negative");
    return c;
}

// --- metrics ---------------------------------------------------------------

std::optional<double> RunMetrics::time_to_clock_s() const {
    if (!clk27_acquired_us || !start_us) return std::nullopt;
    return static_cast<double>(*clk27_acquired_us - *start_us) * 1e-6;
}

std::optional<double> RunMetrics::time_to_decode_s() const {
    if (!first_decode_us || !start_us) return std::nullopt;
    return static_cast<double>(*first_decode_us - *start_us) * 1e-6;
}

RunMetrics metrics_from_counters(const SnifferCounters& c) {
    RunMetrics m;
    m.start_us = c.start_us;
    m.clk27_guesses = c.guesses;
    m.clk27_acquired_us = c.acquired_us;
    m.first_decode_us = c.first_decode_us;
    m.packets_decoded = c.decoded;
    m.failed_decodes = c.failed;
    m.null_packets = c.nulls;
    m.poll_packets = c.polls;
    m.good_data_packets = c.good_data;
    m.undecodable = c.undecodable;
    return m;
}

RunMetrics parse_console(std::string_view log) {
    RunMetrics m;
    std::optional<int64_t> last_time;
    size_t pos = 0;
    int lineno = 0;
    while (pos < log.size()) {
        size_t nl = log.find('\n', pos);
        std::string_view line = log.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? log.size() : nl + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.starts_with("systime=")) {
            std::string_view tok = field(line, "systime=");
            if (auto t = parse_epoch_us(tok)) {
                last_time = t;
                if (!m.start_us) m.start_us = t;
            } else {
                m.errors.push_back("line " + std::to_string(lineno) + ": bad systime '" + std::string(tok) + "'");
            }
        }
        if (line.find("initial CLK1-27 candidates") != std::string_view::npos) {
            ++m.clk27_guesses;
        } else if (line.find("Acquired CLK1-27") != std::string_view::npos) {
            if (!m.clk27_acquired_us) {
                if (last_time) m.clk27_acquired_us = last_time;
                else m.errors.push_back("line " + std::to_string(lineno) + ": acquisition before any systime");
            }
        } else if (line.find("Packet decoded") != std::string_view::npos) {
            std::string_view type = field(line, "type=");
            if (type == "NULL") ++m.null_packets;
            else if (type == "POLL") ++m.poll_packets;
            else ++m.packets_decoded;
            if (field(line, "class=") == "data") ++m.good_data_packets;
            if (!m.first_decode_us) m.first_decode_us = last_time;
        } else if (line.find("Failed to decode") != std::string_view::npos) {
            ++m.failed_decodes;
        } else if (line.find("not demodulated") != std::string_view::npos) {
            ++m.undecodable;
        }
    }
    return m;
}

std::string export_afh_map(const AfhMap& map, int64_t timestamp_s) {
    return std::to_string(timestamp_s) + " " + map.bad_bits();
}

std::optional<AfhMapLine> parse_afh_map_line(std::string_view line) {
    std::string t = trim(line);
    auto sp = t.find(' ');
    if (sp == std::string::npos) return std::nullopt;
    AfhMapLine out;
    auto [p, ec] = std::from_chars(t.data(), t.data() + sp, out.timestamp_s);
    if (ec != std::errc{} || p != t.data() + sp) return std::nullopt;
    std::string bits = trim(std::string_view(t).substr(sp + 1));
    if (bits.size() != kNumChannels) return std::nullopt;
    for (int ch = 0; ch < kNumChannels; ++ch) {
        if (bits[ch] == '1') out.bad.push_back(ch);
        else if (bits[ch] != '0') return std::nullopt;
    }
    return out;
}

// --- runs ------------------------------------------------------------------

WorldConfig build_world(const ScenarioConfig& cfg, int index) {
    const uint64_t run_seed = derive_seed(cfg.seed, static_cast<uint64_t>(index));
    Rng rng(run_seed);
    WorldConfig w;
    w.master.addr = profile_address(cfg.master_profile);
    w.slave.addr = profile_address(cfg.target_profile);
    if (w.slave.addr == w.master.addr) w.slave.addr.lap ^= 1;
    w.master.clock.raw = static_cast<uint32_t>(rng.next()) & kClockMask & ~1u;
    w.slave.clock.raw = static_cast<uint32_t>(rng.next()) & kClockMask & ~1u;
    w.piconet.kernel = HopKernel{cfg.kernel};
    w.piconet.traffic = cfg.traffic;
    if (cfg.afh != "off") {
        w.piconet.afh_enabled = true;
        w.piconet.afh_policy = *AfhPolicy::preset(cfg.afh);
    }
    w.bt_start_slot = seconds_to_slots(cfg.bt_start_s);
    if (cfg.rf != RfCondition::Quiet) {
        WifiConfig wc;
        wc.center_channel = cfg.wifi_channel;
        wc.width_mhz = cfg.wifi_width_mhz;
        wc.offered_load = cfg.wifi_load;
        if (cfg.rf == RfCondition::BusyRF) {
            wc.mode = WifiMode::Saturating;
        } else {
            wc.mode = WifiMode::Ramping;
            wc.start_slot = seconds_to_slots(cfg.wifi_start_s);
            wc.ramp_slots = std::max<int64_t>(1, seconds_to_slots(cfg.wifi_ramp_s));
        }
        w.wifi = wc;
    }
    SnifferConfig sc;
    sc.mode = SnifferMode::Follow;
    sc.known_lap = w.master.addr.lap;
    if (cfg.known_uap) sc.known_uap = w.master.addr.uap;
    sc.time_bound_s = cfg.time_bound_s;
    sc.follow_s = cfg.follow_s;
    sc.acquisition.kernel = HopKernel{cfg.kernel};
    sc.hires = cfg.hires;
    sc.epoch_base_s = cfg.epoch_base_s + static_cast<int64_t>(index) * cfg.run_spacing_s;
    w.sniffer = sc;
    w.record_spectrum = cfg.spectrum;
    return w;
}

RunOutput run_one(const ScenarioConfig& cfg, int index) {
    WorldConfig wc = build_world(cfg, index);
    const int64_t epoch = wc.sniffer->epoch_base_s;
    World world(wc, derive_seed(derive_seed(cfg.seed, static_cast<uint64_t>(index)), 0x5eed));
    RunOutput out;
    const int64_t limit = seconds_to_slots(cfg.time_bound_s + cfg.follow_s) + 1;
    const int64_t per_second = seconds_to_slots(1.0);
    while (world.slot() < limit && !world.sniffer()->done(world.slot())) {
        const bool following = world.sniffer()->acquired();
        const int64_t slot = world.slot();
        SlotReport r = world.step();
        if (slot % per_second == 0)
            out.truthmap += export_afh_map(world.piconet().hop_map(), epoch + slot / per_second) + "\n";
        if (following && r.packet && r.packet->payload_class == PayloadClass::Data &&
            (r.packet->ptype == PacketType::Dm1 || r.packet->ptype == PacketType::Dh1 ||
             r.packet->ptype == PacketType::Dh3 || r.packet->ptype == PacketType::Dh5)) {
            if (r.first_slot) ++out.data_tx_following;
            if (r.completed && r.delivered) ++out.data_delivered_following;
        }
    }
    const Sniffer& s = *world.sniffer();
    out.console = s.console();
    out.afhmap = s.afh_log();
    if (world.spectrum()) out.spectrum = world.spectrum()->trace().to_text();
    out.piconet = world.piconet().stats();
    out.sniffer_transmissions =
        world.medium().transmissions_from(Party::Sniffer) + world.medium().transmissions_from(Party::Scout);
    if (world.wifi()) out.wifi_units = world.wifi()->throughput_units(0, world.slot() / per_second);
    out.metrics = parse_console(out.console);
    if (!(out.metrics == metrics_from_counters(s.counters())))
        out.metrics.errors.push_back("console metrics differ from the sniffer's counters");
    out.metrics.scenario = cfg.display_name();
    out.metrics.run = index + 1;
    return out;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
    ScenarioResult res;
    res.config = cfg;
    res.runs.resize(static_cast<size_t>(cfg.runs));
    const int workers = std::clamp(cfg.workers, 1, cfg.runs);
    if (workers == 1) {
        for (int i = 0; i < cfg.runs; ++i) res.runs[i] = run_one(cfg, i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int i = w; i < cfg.runs; i += workers) res.runs[i] = run_one(cfg, i);
            });
        for (auto& t : pool) t.join();
    }
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        auto write = [&](const std::string& name, const std::string& body) {
            std::ofstream f(*out_dir / name, std::ios::binary);
            if (!f) throw std::runtime_error("cannot write " + (*out_dir / name).string());
            f << body;
        };
        std::vector<RunMetrics> metrics;
        for (int i = 0; i < cfg.runs; ++i) {
            const RunOutput& r = res.runs[i];
            std::string base = "run" + std::to_string(i + 1);
            write(base + ".console", r.console);
            write(base + ".afhmap", r.afhmap);
            write(base + ".truthmap", r.truthmap);
            if (cfg.spectrum) write(base + ".spectrum", r.spectrum);
            metrics.push_back(r.metrics);
        }
        write("scenario.txt", cfg.to_text());
        write("report.csv", report_csv(metrics));
        write("summary.txt", summarize(metrics).to_text());
    }
    return res;
}

// --- report ----------------------------------------------------------------

namespace {

constexpr const char* kCsvHeader =
    "Test Scenario,Run,Start Time (Unix Epoch),CLK27 Guesses,CLK27 Acquisition (epoch),Time to CLK27 (mm:ss),"
    "Time to CLK27 (seconds),1st Packet Decode,Time to Decode (mm:ss),Packets Decoded,Failed Decodes,"
    "Null Packets,Poll Packets,Good Data";

}  // namespace

std::string report_csv(const std::vector<RunMetrics>& metrics) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const RunMetrics& m : metrics) {
        std::vector<std::string> c;
        c.push_back(m.scenario);
        c.push_back(std::to_string(m.run));
        c.push_back(m.start_us ? format_epoch(*m.start_us) : "");
        c.push_back(std::to_string(m.clk27_guesses));
        if (auto t = m.time_to_clock_s()) {
            c.push_back(format_epoch(*m.clk27_acquired_us));
            c.push_back(mm_ss(*t));
            c.push_back(format_epoch(*m.clk27_acquired_us - *m.start_us));
        } else {
            c.insert(c.end(), {"fail", "", ""});
        }
        if (auto t = m.time_to_decode_s()) {
            c.push_back(format_epoch(*m.first_decode_us));
            c.push_back(mm_ss(*t));
        } else {
            c.insert(c.end(), {"fail", ""});
        }
        for (uint64_t v : {m.packets_decoded, m.failed_decodes, m.null_packets, m.poll_packets, m.good_data_packets})
            c.push_back(std::to_string(v));
        for (size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + c[i];
        out += "\n";
    }
    return out;
}

std::optional<RunMetrics> parse_report_row(std::string_view row) {
    std::string r = trim(row);
    char sep = r.find('&') != std::string::npos ? '&' : ',';
    if (sep == '&' && r.size() >= 2 && r.ends_with("\\\\")) r.resize(r.size() - 2);
    std::vector<std::string> c;
    size_t pos = 0;
    while (true) {
        size_t next = r.find(sep, pos);
        c.push_back(trim(std::string_view(r).substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (c.size() != 13 && c.size() != 14) return std::nullopt;
    RunMetrics m;
    m.scenario = c[0];
    auto to_u64 = [](const std::string& s) -> std::optional<uint64_t> {
        uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
        return v;
    };
    auto run = to_u64(c[1]);
    auto guesses = to_u64(c[3]);
    if (!run || !guesses) return std::nullopt;
    m.run = static_cast<int>(*run);
    m.clk27_guesses = static_cast<int>(*guesses);
    if (!c[2].empty()) {
        m.start_us = parse_epoch_us(c[2]);
        if (!m.start_us) return std::nullopt;
    }
    if (c[4] != "fail" && !c[4].empty()) {
        m.clk27_acquired_us = parse_epoch_us(c[4]);
        if (!m.clk27_acquired_us) return std::nullopt;
    }
    if (c[7] != "fail" && !c[7].empty()) {
        m.first_decode_us = parse_epoch_us(c[7]);
        if (!m.first_decode_us) return std::nullopt;
    }
    uint64_t* counts[] = {&m.packets_decoded, &m.failed_decodes, &m.null_packets, &m.poll_packets,
                          &m.good_data_packets};
    for (size_t i = 9; i < c.size(); ++i) {
        auto v = to_u64(c[i]);
        if (!v) return std::nullopt;
        *counts[i - 9] = *v;
    }
    return m;
}

std::string ReportSummary::to_text() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "runs %d\nacquisitions %d\nsuccess_rate %.4f\nnull_poll_pct %.2f\ngood_data_pct %.2f\n"
                  "median_time_to_clock_s %s\n",
                  runs, acquisitions, success_rate, null_poll_pct, good_data_pct,
                  median_time_to_clock_s ? fmt_double(*median_time_to_clock_s).c_str() : "-");
    return buf;
}

ReportSummary summarize(const std::vector<RunMetrics>& metrics) {
    ReportSummary s;
    s.runs = static_cast<int>(metrics.size());
    uint64_t total = 0, np = 0, good = 0;
    std::vector<double> times;
    for (const RunMetrics& m : metrics) {
        if (auto t = m.time_to_clock_s()) {
            ++s.acquisitions;
            times.push_back(*t);
        }
        total += m.decodes_total();
        np += m.null_packets + m.poll_packets;
        good += m.good_data_packets;
    }
    if (s.runs) s.success_rate = double(s.acquisitions) / s.runs;
    if (total) {
        s.null_poll_pct = 100.0 * double(np) / double(total);
        s.good_data_pct = 100.0 * double(good) / double(total);
    }
    if (!times.empty()) {
        std::sort(times.begin(), times.end());
        size_t n = times.size();
        s.median_time_to_clock_s = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    }
    return s;
}

std::filesystem::path default_output_dir() {
    if (const char* e = std::getenv("SIMBT_OUT"); e && *e) return e;
    return "simbt_out";
}

}  // namespace simbt
