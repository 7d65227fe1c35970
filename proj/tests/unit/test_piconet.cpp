#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "simbt/piconet.hpp"

using namespace simbt;

namespace {

Device make_device(uint64_t addr, uint32_t clock_raw) {
    Device d;
    d.addr = BdAddr::from_u64(addr);
    d.clock.raw = clock_raw & kClockMask;
    return d;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("inquiry finds discoverable devices only") {
    Device inquirer = make_device(0x0002729c1d2eULL, 0x0123456);
    Device a = make_device(0x001a7dda7113ULL, 0x0abcdef);
    Device b = make_device(0x0050c2112233ULL, 0x7654320);
    b.discoverable = false;
    a.scan_interval_slots = 2048;
    a.scan_window_slots = 36;
    Medium m;
    auto found = run_inquiry(inquirer, {&a, &b}, m, 7);
    REQUIRE(found.size() == 1);
    CHECK(found[0].addr == a.addr);
    // The FHS reports the responder's clock when it was sent.
    CHECK(found[0].clock27 <= a.clock.clock27());
    CHECK(m.transmissions_from(Party::Sniffer) == 0);
}

TEST_CASE("paging connects and fixes the slave offset") {
    Device master = make_device(0x0002729c1d2eULL, 0x0100000);
    Device slave = make_device(0x001a7dda7113ULL, 0x0ff1230);
    Medium m;
    ConnectionResult r = run_page(master, slave, slave.clock, m);
    REQUIRE(r.ok());
    CHECK(master.role == Role::Master);
    CHECK(slave.role == Role::Slave);
    CHECK(slave.master_clock() == master.clock);
    CHECK(r.latency_slots > 0);

    Device off = make_device(0x0050c2112233ULL, 0x4000);
    off.connectable = false;
    Device m2 = make_device(0x0002729c1d2fULL, 0x0);
    CHECK(run_page(m2, off, off.clock, m).error == PageError::NotConnectable);
}

TEST_CASE("legacy pairing over the simulated link") {
    Device master = make_device(0x0002729c1d2eULL, 0x0100000);
    Device slave = make_device(0x001a7dda7113ULL, 0x0ff1230);
    Medium m;
    REQUIRE(run_page(master, slave, slave.clock, m).ok());

    SUBCASE("matching PINs agree on a link key") {
        PairingSession s = run_legacy_pairing(master, slave, "1234", m, 3);
        REQUIRE(s.done);
        CHECK(s.success);
        CHECK(s.k_ab == s.k_ab_b);
        CHECK(s.transcript.complete());
        CHECK(master.link_keys.at(slave.addr.to_u64()) == s.k_ab);
        CHECK(slave.link_keys.at(master.addr.to_u64()) == s.k_ab);
        // The transcript alone yields the PIN.
        CrackResult r = crack_pin(s.transcript, master.addr, slave.addr);
        CHECK(r.pin == "1234");
        std::set<int> indices;
        for (const auto& w : s.wire)
            if (w.delivered) indices.insert(w.index);
        CHECK(indices.size() == 7);
    }
    SUBCASE("mismatched PINs abort at the first SRES") {
        slave.fixed_pin = "4321";
        PairingSession s = run_legacy_pairing(master, slave, "1234", m, 4);
        REQUIRE(s.done);
        CHECK_FALSE(s.success);
        CHECK(s.aborted_at == 5);
        CHECK(master.link_keys.empty());
    }
}

TEST_CASE("piconet slot timing and keep-alives") {
    Device master = make_device(0x0002729c1d2eULL, 0x0100000);
    Device slave = make_device(0x001a7dda7113ULL, 0x0ff1230);
    master.role = Role::Master;
    slave.role = Role::Slave;
    slave.clock_offset_to_master = int64_t(master.clock.raw) - int64_t(slave.clock.raw);
    PiconetConfig cfg;
    cfg.traffic.kind = TrafficKind::Idle;
    Piconet p(master, slave, cfg, 9);
    Medium m;
    int master_tx = 0, slave_tx = 0;
    for (int i = 0; i < 4000; ++i) {
        uint32_t before = p.master().clock.clock27();
        SlotReport r = p.step_slot(m);
        CHECK(r.clock27 == before);
        if (!r.transmitter || !r.first_slot) continue;
        // Masters start packets in even slots, slaves in odd ones.
        if (*r.transmitter == Role::Master) {
            ++master_tx;
            CHECK((r.clock27 & 1) == 0);
        } else {
            ++slave_tx;
            CHECK((r.clock27 & 1) == 1);
        }
        CHECK(r.channel == p.channel_at(r.clock27));
    }
    CHECK(master_tx > 0);
    CHECK(slave_tx > 0);
    CHECK(p.stats().by_type[int(PacketType::Poll)] > 0);
    CHECK(p.stats().by_type[int(PacketType::Null)] > 0);
    CHECK(p.stats().max_sync_error_us < 10.0);
}

TEST_CASE("traffic generator mixes") {
    Rng rng(12);
    TrafficProfile idle{TrafficKind::Idle, RateClass::BasicRateOnly, 0.0, 0.1};
    for (int i = 0; i < 50; ++i) {
        auto p = generate_traffic(idle, {true, 0x123456, i * 2}, rng);
        CHECK(is_keepalive(p));
        CHECK(p.ptype == PacketType::Poll);
        CHECK(generate_traffic(idle, {false, 0x123456, i * 2 + 1}, rng).ptype == PacketType::Null);
    }
    TrafficProfile edr_mix{TrafficKind::AudioStream, RateClass::MixedEdr, 0.65, 0.1};
    int payload = 0, edr = 0;
    for (int i = 0; i < 4000; ++i) {
        auto p = generate_traffic(edr_mix, {true, 0x123456, i * 2}, rng);
        CHECK(packet_valid(p));
        if (!packet_has_payload(p.ptype)) continue;
        ++payload;
        edr += p.modulation == Modulation::Edr;
        // Application data is all EDR; the Basic Rate share is signalling.
        CHECK((p.payload_class == PayloadClass::Data) == (p.modulation == Modulation::Edr));
    }
    REQUIRE(payload > 500);
    CHECK(double(edr) / payload == doctest::Approx(0.65).epsilon(0.1));
}

TEST_CASE("AFH classification pass") {
    AfhPolicy pol = AfhPolicy::cooperative();
    LinkStats stats{};
    for (auto& q : stats) {
        q.attempts = 10;
        q.failures = 0;
    }
    stats[5].failures = 6;                       // lossy
    stats[6].energy_samples = 3;                 // noisy
    stats[6].energy_dbm = -70;
    stats[7].attempts = 2;                       // too few attempts to judge
    stats[7].failures = 2;
    AfhUpdate u = update_afh(AfhMap{}, stats, pol);
    CHECK(u.map.get(5) == AfhClass::Bad);
    CHECK(u.map.get(6) == AfhClass::Bad);
    CHECK(u.map.usable(7));
    CHECK(u.newly_bad == std::vector<int>{5, 6});

    AfhEvalOptions loss_only;
    loss_only.use_energy = false;
    AfhUpdate v = update_afh(AfhMap{}, stats, pol, loss_only);
    CHECK(v.map.usable(6));

    // Never more than 59 Bad.
    LinkStats all_bad{};
    for (auto& q : all_bad) q = {10, 10, 0, -90};
    AfhUpdate w = update_afh(AfhMap{}, all_bad, pol);
    CHECK(w.map.n() == kMinUsableChannels);

    // A quiet probed channel returns.
    AfhMap bad = *AfhMap::with_bad(std::vector<int>{9});
    LinkStats calm{};
    for (auto& q : calm) q = {10, 0, 2, -90};
    AfhEvalOptions probe;
    probe.probe = 9;
    CHECK(update_afh(bad, calm, pol, probe).map.usable(9));
    CHECK_FALSE(AfhPolicy::preset("bogus"));
    CHECK_FALSE(AfhPolicy::aggressive().runtime_energy);
}

TEST_CASE("snapshot round trip and golden fixture") {
    std::string text = slurp(std::string(SIMBT_FIXTURE_DIR) + "/snapshot.txt");
    REQUIRE_FALSE(text.empty());
    auto snap = Snapshot::parse(text);
    REQUIRE(snap);
    CHECK(snap->to_text() == text);
    REQUIRE(snap->devices.size() == 2);
    const Device& m = snap->devices[0].second;
    CHECK(snap->devices[0].first == "master");
    CHECK(m.role == Role::Master);
    CHECK(m.clock.raw == 0x0100000);
    CHECK(m.afh_map.n() == 57);
    CHECK(m.link_keys.size() == 1);

    std::string err;
    CHECK_FALSE(Snapshot::parse("simbt-snapshot 2\nend\n", &err));
    CHECK(err == "line 1: expected 'simbt-snapshot 1'");
}
