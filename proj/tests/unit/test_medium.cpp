#include <doctest.h>

#include <set>

#include "simbt/medium.hpp"

using namespace simbt;

namespace {

Transmission bt(int id, Party src, int ch, std::vector<Party> rx) {
    Transmission t;
    t.id = id;
    t.source = src;
    t.channel_lo = t.channel_hi = ch;
    t.receivers = std::move(rx);
    return t;
}

Outcome outcome_for(const std::vector<Delivery>& d, int id, Party rx) {
    for (const auto& x : d)
        if (x.tx_id == id && x.receiver == rx) return x.outcome;
    FAIL("missing delivery");
    return Outcome::Clean;
}

}  // namespace

TEST_CASE("capture rule") {
    LinkBudget budget;
    SUBCASE("alone is clean") {
        std::vector<Transmission> txs = {bt(0, Party::BtMaster, 10, {Party::BtSlave, Party::Sniffer})};
        auto d = deliver_slot(txs, budget);
        CHECK(outcome_for(d, 0, Party::BtSlave) == Outcome::Clean);
        CHECK(outcome_for(d, 0, Party::Sniffer) == Outcome::Clean);
    }
    SUBCASE("Wi-Fi overlap: captured at the slave, collided at the sniffer") {
        Transmission w;
        w.id = 1;
        w.source = Party::WifiTx;
        w.channel_lo = 24;
        w.channel_hi = 45;
        w.receivers = {Party::WifiRx};
        std::vector<Transmission> txs = {bt(0, Party::BtMaster, 30, {Party::BtSlave, Party::Sniffer}), w};
        auto d = deliver_slot(txs, budget);
        // -60 against -72 is 12 dB: captured. -70 against -70: collided.
        CHECK(outcome_for(d, 0, Party::BtSlave) == Outcome::Captured);
        CHECK(outcome_for(d, 0, Party::Sniffer) == Outcome::Collided);
        // -65 against -65 at the Wi-Fi receiver.
        CHECK(outcome_for(d, 1, Party::WifiRx) == Outcome::Collided);
    }
    SUBCASE("no overlap outside the mask") {
        Transmission w;
        w.id = 1;
        w.source = Party::WifiTx;
        w.channel_lo = 24;
        w.channel_hi = 45;
        w.receivers = {Party::WifiRx};
        std::vector<Transmission> txs = {bt(0, Party::BtMaster, 46, {Party::BtSlave}), w};
        auto d = deliver_slot(txs, budget);
        CHECK(outcome_for(d, 0, Party::BtSlave) == Outcome::Clean);
        CHECK(outcome_for(d, 1, Party::WifiRx) == Outcome::Clean);
    }
    SUBCASE("threshold is inclusive at exactly capture_db") {
        LinkBudget b;
        b.set(Party::WifiTx, Party::BtSlave, -70);
        Transmission w = bt(1, Party::WifiTx, 30, {});
        std::vector<Transmission> txs = {bt(0, Party::BtMaster, 30, {Party::BtSlave}), w};
        CHECK(outcome_for(deliver_slot(txs, b), 0, Party::BtSlave) == Outcome::Captured);
        b.set(Party::WifiTx, Party::BtSlave, -69.5);
        CHECK(outcome_for(deliver_slot(txs, b), 0, Party::BtSlave) == Outcome::Collided);
    }
}

TEST_CASE("medium bookkeeping and receive-only parties") {
    Medium m;
    m.begin_slot(0);
    int id = m.add(bt(-1, Party::BtMaster, 3, {Party::BtSlave, Party::Sniffer}));
    CHECK_THROWS(m.add(bt(-1, Party::Sniffer, 3, {Party::BtSlave})));
    CHECK_THROWS(m.add(bt(-1, Party::Scout, 3, {Party::BtSlave})));
    m.resolve();
    CHECK(m.outcome(id, Party::BtSlave) == Outcome::Clean);
    CHECK_FALSE(m.outcome(id, Party::WifiRx));
    CHECK(m.energy_dbm(3, Party::Sniffer) == doctest::Approx(-70));
    CHECK(m.energy_dbm(4, Party::Sniffer) == doctest::Approx(kNoiseFloorDbm));
    CHECK(m.bluetooth_on(3) != nullptr);
    CHECK(m.transmissions_from(Party::Sniffer) == 0);
    CHECK(m.tally(Party::BtSlave).total() == m.tally(Party::BtSlave).clean);
    CHECK(m.expected_deliveries() == 2);
}

TEST_CASE("Wi-Fi channel geometry") {
    CHECK(wifi_center_bt_channel(1) == 10);
    CHECK(wifi_center_bt_channel(6) == 35);
    CHECK(wifi_center_bt_channel(11) == 60);
    CHECK(wifi_mask(6, 20) == std::pair{24, 45});
    CHECK(wifi_mask(1, 20) == std::pair{0, 20});
    CHECK(wifi_mask(6, 40).second - wifi_mask(6, 40).first == 41);
}

TEST_CASE("saturating Wi-Fi alone reaches its calibrated throughput") {
    WifiConfig cfg;
    cfg.mode = WifiMode::Saturating;
    WifiInterferer w(cfg, 7);
    for (int64_t s = 0; s < 10 * 1600; ++s) {
        auto d = w.step(s, kNoiseFloorDbm);
        if (d.transmit) w.complete(Outcome::Clean);
    }
    CHECK(w.throughput_units(1, 10) == doctest::Approx(41.0).epsilon(0.05));
    CHECK(w.frames_failed() == 0);
    CHECK(w.rate_step() == 0);
}

TEST_CASE("Wi-Fi defers while the band is busy and falls back on losses") {
    WifiConfig cfg;
    cfg.mode = WifiMode::Saturating;
    WifiInterferer busy(cfg, 8);
    for (int64_t s = 0; s < 1600; ++s) CHECK_FALSE(busy.step(s, -50.0).transmit);
    CHECK(busy.throughput_counter() == 0);

    WifiInterferer lossy(cfg, 9);
    for (int64_t s = 0; s < 1600; ++s) {
        auto d = lossy.step(s, kNoiseFloorDbm);
        if (d.transmit) lossy.complete(Outcome::Collided);
    }
    CHECK(lossy.frames_failed() > 0);
    CHECK(lossy.rate_step() == cfg.rate_steps - 1);
    CHECK(lossy.frames_ok() == 0);
}

TEST_CASE("ramping load rises linearly from the start slot") {
    WifiConfig cfg;
    cfg.mode = WifiMode::Ramping;
    cfg.start_slot = 1600;
    cfg.ramp_slots = 1600;
    WifiInterferer w(cfg, 1);
    CHECK_FALSE(w.active(0));
    CHECK(w.load_at(1599) == 0.0);
    CHECK(w.load_at(1600) == doctest::Approx(1.0 / 1600));
    CHECK(w.load_at(2399) == doctest::Approx(0.5));
    CHECK(w.load_at(3199) == doctest::Approx(1.0));
    CHECK(w.load_at(5000) == doctest::Approx(1.0));
}

TEST_CASE("spectrum recorder samples each channel once per second") {
    std::set<int> slots;
    for (int ch = 0; ch < kNumChannels; ++ch) {
        int s = SpectrumRecorder::sample_slot(ch, 3);
        CHECK(s >= 0);
        CHECK(s < 1600);
        slots.insert(s);
    }
    CHECK(slots.size() == kNumChannels);
    Medium m;
    SpectrumRecorder rec;
    for (int64_t s = 0; s < 3200; ++s) {
        m.begin_slot(s);
        m.resolve();
        rec.observe(m);
    }
    CHECK(rec.trace().rows.size() == 2);
    CHECK(rec.trace().rows[0][5] == -90);
    CHECK(rssi_trace(rec.trace(), 1, 2).rows.size() == 1);
}
