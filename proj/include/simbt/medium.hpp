#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simbt/baseband.hpp"
#include "simbt/rng.hpp"

namespace simbt {

// Radios that share the band. Sniffer and Scout only ever receive.
enum class Party : uint8_t { BtMaster, BtSlave, WifiTx, WifiRx, Sniffer, Scout };
constexpr int kNumParties = 6;
const char* party_name(Party p);

enum class Outcome : uint8_t { Clean, Collided, Captured };
const char* outcome_name(Outcome o);

constexpr double kNoiseFloorDbm = -90.0;
constexpr double kStrongDbm = -60.0;

// Received power in dBm for every (source, receiver) pair.
struct LinkBudget {
    std::array<std::array<double, kNumParties>, kNumParties> dbm{};
    LinkBudget();
    double rssi(Party src, Party rx) const { return dbm[int(src)][int(rx)]; }
    void set(Party src, Party rx, double v) { dbm[int(src)][int(rx)] = v; }
};

struct Transmission {
    int id = -1;
    Party source = Party::BtMaster;
    int channel_lo = 0;  // inclusive Bluetooth channel range; equal for Bluetooth
    int channel_hi = 0;
    std::vector<Party> receivers;
    const WireFrame* frame = nullptr;  // Bluetooth only; owned by the caller for the slot
    bool continuation = false;         // later slot of a multi-slot packet
    bool is_wifi() const { return source == Party::WifiTx; }
    bool overlaps(int lo, int hi) const { return channel_lo <= hi && lo <= channel_hi; }
};

struct Delivery {
    int tx_id = -1;
    Party receiver = Party::BtSlave;
    Outcome outcome = Outcome::Clean;
};

// Collision rule over one slot: a reception with overlapping transmissions
// is Captured if it is at least capture_db above the strongest of them,
// otherwise Collided.
std::vector<Delivery> deliver_slot(std::span<const Transmission> txs, const LinkBudget& budget,
                                   double capture_db = 10.0);

struct MediumConfig {
    LinkBudget budget;
    double capture_db = 10.0;
};

class Medium {
public:
    explicit Medium(MediumConfig cfg = {});

    void begin_slot(int64_t slot);
    // Sniffer and Scout are receive-only; adding a transmission from them throws.
    int add(Transmission tx);
    void resolve();

    int64_t slot() const { return slot_; }
    const std::vector<Transmission>& transmissions() const { return txs_; }
    std::optional<Outcome> outcome(int tx_id, Party receiver) const;
    // Strongest in-slot energy on `channel` seen by `rx`, ignoring `exclude`.
    double energy_dbm(int channel, Party rx, std::optional<Party> exclude = std::nullopt) const;
    // Bluetooth transmission on a channel this slot, if any.
    const Transmission* bluetooth_on(int channel) const;
    const MediumConfig& config() const { return cfg_; }

    struct Tally {
        uint64_t clean = 0, collided = 0, captured = 0;
        uint64_t total() const { return clean + collided + captured; }
    };
    const Tally& tally(Party rx) const { return tallies_[int(rx)]; }
    // Receiver slots owed by all transmissions so far (each tx × each receiver).
    uint64_t expected_deliveries() const { return expected_; }
    uint64_t transmissions_from(Party src) const { return sent_[int(src)]; }

private:
    MediumConfig cfg_;
    int64_t slot_ = 0;
    std::vector<Transmission> txs_;
    std::vector<Delivery> deliveries_;
    std::array<Tally, kNumParties> tallies_{};
    std::array<uint64_t, kNumParties> sent_{};
    uint64_t expected_ = 0;
    bool resolved_ = false;
};

enum class WifiMode : uint8_t { Off, Saturating, Ramping };
const char* wifi_mode_name(WifiMode m);

// Bluetooth channel at the centre of a 2.4 GHz Wi-Fi channel.
int wifi_center_bt_channel(int wifi_channel);
// Inclusive Bluetooth channel block covered by a Wi-Fi channel mask.
std::pair<int, int> wifi_mask(int wifi_channel, int width_mhz);

struct WifiConfig {
    int center_channel = 6;
    int width_mhz = 20;
    WifiMode mode = WifiMode::Off;
    double offered_load = 1.0;
    int64_t start_slot = 0;
    int64_t ramp_slots = 8000;  // Ramping: load rises linearly to offered_load
    int frame_quanta = 8;
    int cw_min = 1;
    int cw_max = 63;
    int retry_limit = 7;
    double cca_threshold_dbm = -62.0;
    double max_units = 41.0;
    // Auto rate fallback over `rate_steps` rates: each step down doubles the
    // airtime of a frame carrying the same payload.
    int rate_steps = 2;
    int fallback_after_failures = 2;
    int raise_after_successes = 10;
};

struct WifiDecision {
    bool transmit = false;
    bool frame_start = false;
};

class WifiInterferer {
public:
    WifiInterferer(WifiConfig cfg, uint64_t seed);

    const WifiConfig& config() const { return cfg_; }
    std::pair<int, int> mask() const { return mask_; }
    bool active(int64_t slot) const;
    double load_at(int64_t slot) const;

    // One quantum of CSMA/CA: transmit only when the energy sensed in the
    // band is under the clear-channel threshold; backoff counts down on
    // clear quanta.
    WifiDecision step(int64_t slot, double energy_sensed_dbm);
    // Reception result at the Wi-Fi receiver for the quantum just sent.
    void complete(Outcome at_receiver);

    Transmission transmission() const;

    uint64_t throughput_counter() const { return delivered_quanta_ * kBitsPerQuantum; }
    uint64_t frames_ok() const { return frames_ok_; }
    uint64_t frames_failed() const { return frames_failed_; }
    uint64_t busy_quanta() const { return busy_quanta_; }
    int rate_step() const { return rate_step_; }
    // Average units/s over whole seconds [from_s, to_s).
    double throughput_units(int64_t from_s, int64_t to_s) const;
    // Per-second units series.
    std::vector<double> throughput_series() const;
    // Units credited per delivered quantum, fixed so saturated-alone ≈ max_units.
    double units_per_quantum() const { return units_per_quantum_; }

    static constexpr uint64_t kBitsPerQuantum = 1000;

private:
    void finish_frame(bool ok);
    void credit(int64_t slot, int quanta);

    WifiConfig cfg_;
    Rng rng_;
    std::pair<int, int> mask_;
    double units_per_quantum_ = 0;
    int quanta_left_ = 0;
    bool frame_failed_ = false;
    int backoff_ = 0;
    int cw_;
    int retries_ = 0;
    int rate_step_ = 0;
    int fail_run_ = 0;
    int ok_run_ = 0;
    double queue_ = 0;
    int64_t cur_slot_ = 0;
    uint64_t delivered_quanta_ = 0;
    uint64_t frames_ok_ = 0;
    uint64_t frames_failed_ = 0;
    uint64_t busy_quanta_ = 0;
    std::vector<uint64_t> per_second_;  // delivered quanta per simulated second
};

// Per-second per-channel dBm samples as seen by a monitoring radio.
struct SpectrumTrace {
    std::vector<std::array<int, kNumChannels>> rows;
    int64_t first_second = 0;
    std::string to_text() const;
};

class SpectrumRecorder {
public:
    explicit SpectrumRecorder(Party monitor = Party::Scout) : monitor_(monitor) {}
    // Call once per slot after Medium::resolve.
    void observe(const Medium& m);
    const SpectrumTrace& trace() const { return trace_; }
    // Slot within a second at which `channel` is sampled.
    static int sample_slot(int channel, int64_t second);

private:
    Party monitor_;
    SpectrumTrace trace_;
};

// Rows of `trace` restricted to seconds [from_s, to_s).
SpectrumTrace rssi_trace(const SpectrumTrace& trace, int64_t from_s, int64_t to_s);

}  // namespace simbt
