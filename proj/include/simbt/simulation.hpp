#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "simbt/medium.hpp"
#include "simbt/piconet.hpp"
#include "simbt/sniffer.hpp"

namespace simbt {

struct WorldConfig {
    Device master;
    Device slave;
    PiconetConfig piconet;
    int64_t bt_start_slot = 0;  // the link is silent before this
    std::optional<WifiConfig> wifi;
    MediumConfig medium;
    std::optional<SnifferConfig> sniffer;
    bool record_spectrum = false;
};

// One shared band: a piconet, an optional Wi-Fi pair, and passive
// receivers. Wi-Fi senses the band over the previous slot before deciding.
class World {
public:
    World(WorldConfig cfg, uint64_t seed);

    // Advances one slot. The report is empty before the link starts.
    SlotReport step();
    using Hook = std::function<void(const World&, const SlotReport&)>;
    void run(int64_t slots, const Hook& hook = {});

    int64_t slot() const { return slot_; }
    bool bt_active() const { return slot_ >= cfg_.bt_start_slot; }
    const WorldConfig& config() const { return cfg_; }
    const Piconet& piconet() const { return piconet_; }
    Piconet& piconet() { return piconet_; }
    const Medium& medium() const { return medium_; }
    const WifiInterferer* wifi() const { return wifi_ ? &*wifi_ : nullptr; }
    const Sniffer* sniffer() const { return sniffer_ ? &*sniffer_ : nullptr; }
    const SpectrumRecorder* spectrum() const { return spectrum_ ? &*spectrum_ : nullptr; }

private:
    WorldConfig cfg_;
    Medium medium_;
    Piconet piconet_;
    std::optional<WifiInterferer> wifi_;
    std::optional<Sniffer> sniffer_;
    std::optional<SpectrumRecorder> spectrum_;
    int64_t slot_ = 0;
    double wifi_sensed_dbm_ = kNoiseFloorDbm;
};

}  // namespace simbt
