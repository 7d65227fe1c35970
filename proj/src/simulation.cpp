#include "simbt/simulation.hpp"

#include <algorithm>

namespace simbt {

World::World(WorldConfig cfg, uint64_t seed)
    : cfg_(std::move(cfg)),
      medium_(cfg_.medium),
      piconet_(cfg_.master, cfg_.slave, cfg_.piconet, derive_seed(seed, 1)) {
    if (cfg_.wifi && cfg_.wifi->mode != WifiMode::Off) wifi_.emplace(*cfg_.wifi, derive_seed(seed, 2));
    if (cfg_.sniffer) sniffer_.emplace(*cfg_.sniffer, derive_seed(seed, 3));
    if (cfg_.record_spectrum) spectrum_.emplace(Party::Scout);
}

SlotReport World::step() {
    medium_.begin_slot(slot_);
    bool wifi_tx = false;
    if (wifi_) {
        WifiDecision d = wifi_->step(slot_, wifi_sensed_dbm_);
        if (d.transmit) {
            medium_.add(wifi_->transmission());
            wifi_tx = true;
        }
    }
    const bool bt = bt_active();
    if (bt) piconet_.begin_slot(medium_);
    medium_.resolve();

    SlotReport report;
    report.slot = slot_;
    if (bt) report = piconet_.end_slot(medium_);
    if (wifi_) {
        if (wifi_tx) {
            // The Wi-Fi transmission is the only one from WifiTx this slot.
            for (const Transmission& t : medium_.transmissions())
                if (t.source == Party::WifiTx) wifi_->complete(medium_.outcome(t.id, Party::WifiRx).value_or(Outcome::Clean));
        }
        auto [lo, hi] = wifi_->mask();
        double e = kNoiseFloorDbm;
        for (int ch = lo; ch <= hi; ++ch) e = std::max(e, medium_.energy_dbm(ch, Party::WifiTx, Party::WifiTx));
        wifi_sensed_dbm_ = e;
    }
    if (sniffer_) sniffer_->observe(medium_);
    if (spectrum_) spectrum_->observe(medium_);
    ++slot_;
    return report;
}

void World::run(int64_t slots, const Hook& hook) {
    for (int64_t i = 0; i < slots; ++i) {
        SlotReport r = step();
        if (hook) hook(*this, r);
    }
}

}  // namespace simbt
