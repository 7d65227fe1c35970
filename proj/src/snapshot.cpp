#include <cstdio>
#include <sstream>

#include "simbt/piconet.hpp"

namespace simbt {

namespace {

std::string format_drift(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

std::string Snapshot::to_text() const {
    std::string out = "simbt-snapshot 1\nslot " + std::to_string(slot) + "\n";
    for (const auto& [name, d] : devices) {
        char clk[16];
        std::snprintf(clk, sizeof clk, "0x%07x", d.clock.raw);
        out += "device " + name + " addr=" + d.addr.to_string() + " role=" + role_name(d.role) + " clock=" + clk +
               " offset=" + std::to_string(d.clock_offset_to_master) +
               " discoverable=" + (d.discoverable ? "1" : "0") + " connectable=" + (d.connectable ? "1" : "0") +
               " pin=" + d.fixed_pin.value_or("-") + " drift_ppm=" + format_drift(d.drift_ppm) +
               " scan=" + std::to_string(d.scan_window_slots) + "/" + std::to_string(d.scan_interval_slots) +
               " afh=" + d.afh_map.bad_bits() + "\n";
        for (const auto& [peer, key] : d.link_keys)
            out += "key " + name + " " + BdAddr::from_u64(peer).to_string() + " " + to_hex(key) + "\n";
    }
    out += "end\n";
    return out;
}

std::optional<Snapshot> Snapshot::parse(std::string_view text, std::string* error) {
    Snapshot snap;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    bool header = false, ended = false;
    auto fail = [&](const std::string& m) -> std::optional<Snapshot> {
        if (error) *error = "line " + std::to_string(lineno) + ": " + m;
        return std::nullopt;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (!header) {
            std::string ver;
            if (kw != "simbt-snapshot" || !(ls >> ver) || ver != "1") return fail("expected 'simbt-snapshot 1'");
            header = true;
            continue;
        }
        if (ended) return fail("content after 'end'");
        if (kw == "end") {
            ended = true;
        } else if (kw == "slot") {
            if (!(ls >> snap.slot)) return fail("bad slot");
        } else if (kw == "device") {
            std::string name;
            if (!(ls >> name)) return fail("missing device name");
            Device d;
            std::string field;
            int seen = 0;
            while (ls >> field) {
                auto eq = field.find('=');
                if (eq == std::string::npos) return fail("expected key=value: " + field);
                std::string k = field.substr(0, eq), v = field.substr(eq + 1);
                try {
                    if (k == "addr") {
                        auto a = BdAddr::parse(v);
                        if (!a) return fail("bad addr");
                        d.addr = *a;
                    } else if (k == "role") {
                        auto r = role_from_name(v);
                        if (!r) return fail("bad role");
                        d.role = *r;
                    } else if (k == "clock") {
                        d.clock.raw = static_cast<uint32_t>(std::stoul(v, nullptr, 16)) & kClockMask;
                    } else if (k == "offset") {
                        d.clock_offset_to_master = std::stoll(v);
                    } else if (k == "discoverable") {
                        d.discoverable = v == "1";
                    } else if (k == "connectable") {
                        d.connectable = v == "1";
                    } else if (k == "pin") {
                        if (v != "-") {
                            if (!pin_valid(v)) return fail("bad pin");
                            d.fixed_pin = v;
                        }
                    } else if (k == "drift_ppm") {
                        d.drift_ppm = std::stod(v);
                    } else if (k == "scan") {
                        auto slash = v.find('/');
                        if (slash == std::string::npos) return fail("scan is window/interval");
                        d.scan_window_slots = std::stoi(v.substr(0, slash));
                        d.scan_interval_slots = std::stoi(v.substr(slash + 1));
                    } else if (k == "afh") {
                        if (v.size() != kNumChannels) return fail("afh needs 79 characters");
                        std::vector<int> bad;
                        for (int ch = 0; ch < kNumChannels; ++ch) {
                            if (v[ch] == '1') bad.push_back(ch);
                            else if (v[ch] != '0') return fail("afh characters are 0 or 1");
                        }
                        auto m = AfhMap::with_bad(bad);
                        if (!m) return fail("afh map leaves fewer than 20 channels");
                        d.afh_map = *m;
                    } else {
                        return fail("unknown field " + k);
                    }
                } catch (const std::exception&) {
                    return fail("bad value for " + k);
                }
                ++seen;
            }
            if (seen == 0) return fail("empty device line");
            snap.devices.emplace_back(name, std::move(d));
        } else if (kw == "key") {
            std::string owner, peer, hex;
            if (!(ls >> owner >> peer >> hex)) return fail("expected key <owner> <peer> <hex>");
            auto a = BdAddr::parse(peer);
            auto bytes = from_hex(hex);
            if (!a || !bytes || bytes->size() != 16) return fail("bad key line");
            Device* dev = nullptr;
            for (auto& [n, d] : snap.devices)
                if (n == owner) dev = &d;
            if (!dev) return fail("key for unknown device " + owner);
            Key128 k{};
            std::copy(bytes->begin(), bytes->end(), k.begin());
            dev->link_keys[a->to_u64()] = k;
        } else {
            return fail("unknown record " + kw);
        }
    }
    if (!header) return fail("empty snapshot");
    if (!ended) return fail("missing 'end'");
    return snap;
}

}  // namespace simbt
