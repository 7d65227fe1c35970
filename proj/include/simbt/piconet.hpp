#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simbt/afh.hpp"
#include "simbt/attacks.hpp"
#include "simbt/baseband.hpp"
#include "simbt/hopping.hpp"
#include "simbt/medium.hpp"
#include "simbt/rng.hpp"

namespace simbt {

enum class Role : uint8_t { Idle, Master, Slave };
const char* role_name(Role r);
std::optional<Role> role_from_name(std::string_view s);

struct Device {
    BdAddr addr;
    Role role = Role::Idle;
    ClockState clock;                    // native clock
    int64_t clock_offset_to_master = 0;  // ticks, slaves only: master = native + offset
    AfhMap afh_map;
    std::map<uint64_t, Key128> link_keys;  // keyed by peer BdAddr::to_u64
    bool discoverable = true;
    bool connectable = true;
    std::optional<std::string> fixed_pin;
    double drift_ppm = 0.0;
    int scan_interval_slots = 2048;
    int scan_window_slots = 36;

    ClockState master_clock() const;
};

enum class TrafficKind : uint8_t { Idle, PairingOnly, AudioStream };
enum class RateClass : uint8_t { BasicRateOnly, MixedEdr };
const char* traffic_kind_name(TrafficKind k);
const char* rate_class_name(RateClass r);

struct TrafficProfile {
    TrafficKind kind = TrafficKind::Idle;
    RateClass rate = RateClass::BasicRateOnly;
    double edr_fraction = 0.0;     // MixedEdr: share of payload packets sent as EDR data
    double control_fraction = 0.1; // BasicRateOnly: share of payload packets that are control
};

struct SlotContext {
    bool master = true;
    uint32_t lap = 0;
    int64_t slot = 0;
};

// Packet a side would send at its next opportunity. Keep-alives are POLL
// from the master and NULL from the slave.
BasebandPacket generate_traffic(const TrafficProfile& profile, const SlotContext& ctx, Rng& rng);
bool is_keepalive(const BasebandPacket& p);

struct PiconetConfig {
    HopKernel kernel;
    TrafficProfile traffic;
    bool afh_enabled = false;
    AfhPolicy afh_policy = AfhPolicy::cooperative();
    std::optional<AfhMap> fixed_map;  // static hop set, classifier off
    int poll_interval_slots = 24;
    double lmp_rate_hz = 4.0;          // link-manager requests from the master
    int afh_instant_slots = 16;
    int lmp_delay_min_slots = 8;       // link-manager response latency range
    int lmp_delay_max_slots = 200;
    double jitter_us = 1.0;
};

struct PairingWireRecord {
    int index = 0;
    int64_t slot = 0;
    int channel = 0;
    bool delivered = false;
};

struct PairingSession {
    Key128 in_rand{}, lk_rand_a{}, lk_rand_b{}, au_rand_a{}, au_rand_b{};
    std::string pin;    // A's PIN
    std::string pin_b;  // B's PIN
    Key128 k_init{};    // A's
    Key128 k_ab{};      // A's
    Key128 k_ab_b{};    // B's
    Sres sres_a{}, sres_b{};
    Aco aco{};
    PairingTranscript transcript;
    std::vector<PairingWireRecord> wire;  // every transmission of a pairing packet
    bool done = false;
    bool success = false;
    int aborted_at = 0;  // 5 or 7 on SRES mismatch
    int64_t start_slot = 0;
    int64_t end_slot = 0;
};

struct SlotReport {
    int64_t slot = 0;
    uint32_t clock27 = 0;  // master clock at the start of the slot
    std::optional<Role> transmitter;
    int channel = -1;
    bool first_slot = false;
    bool completed = false;   // packet's last slot
    bool delivered = false;   // valid when completed
    const BasebandPacket* packet = nullptr;  // valid until the next slot
    int pairing_index = 0;
};

struct PiconetStats {
    uint64_t slots = 0;
    uint64_t packets = 0;
    std::array<uint64_t, 10> by_type{};  // indexed by PacketType
    uint64_t data_packets = 0;
    uint64_t data_edr = 0;
    uint64_t data_delivered = 0;
    uint64_t payload_packets = 0;  // packets carrying an ACL body (data or control)
    uint64_t retransmissions = 0;
    uint64_t afh_broadcasts = 0;
    double max_sync_error_us = 0.0;
    double max_sync_error_after_rx_us = 0.0;
};

class Piconet {
public:
    Piconet(Device master, Device slave, PiconetConfig cfg, uint64_t seed);

    // Registers this slot's transmission, if any, with the medium. The
    // caller has already called medium.begin_slot().
    void begin_slot(Medium& medium);
    // Reads outcomes after medium.resolve() and advances clocks by one slot.
    SlotReport end_slot(const Medium& medium);
    // begin_slot + resolve + end_slot on a medium owned by this piconet alone.
    SlotReport step_slot(Medium& medium);

    Device& master() { return master_; }
    Device& slave() { return slave_; }
    const Device& master() const { return master_; }
    const Device& slave() const { return slave_; }
    const PiconetConfig& config() const { return cfg_; }
    int64_t slot() const { return slot_; }
    const PiconetStats& stats() const { return stats_; }
    const AfhMap& hop_map() const { return master_.afh_map; }
    bool map_pending() const { return pending_map_.has_value(); }
    const AfhClassifier& classifier() const { return classifier_; }
    HopAddress hop_address() const { return HopAddress::from(master_.addr); }
    // Channel the link uses at a master clock.
    int channel_at(uint32_t clock27) const;

    // Starts the seven-packet legacy pairing with A = master.
    void start_pairing(std::string pin_a, std::string pin_b, const CipherSuite& suite = default_suite());
    const std::optional<PairingSession>& pairing() const { return pairing_; }

private:
    struct Outgoing {
        BasebandPacket packet;
        int64_t ready = 0;
        int pairing_index = 0;
        std::optional<AfhMap> afh;  // set_AFH carries the map
    };
    struct InFlight {
        Role from = Role::Master;
        BasebandPacket packet;
        WireFrame frame;
        int channel = 0;
        int slots_left = 0;
        bool failed = false;
        int pairing_index = 0;
        std::optional<AfhMap> afh;
        bool from_queue = false;
        int64_t start_slot = 0;
    };

    std::optional<Outgoing> next_master_packet();
    std::optional<Outgoing> next_slave_packet();
    void on_delivered(const InFlight& f);
    void on_lost(InFlight& f);
    void queue_pairing(int index, int64_t now);
    void apply_map(const AfhMap& m);
    int64_t lmp_delay();

    PiconetConfig cfg_;
    Device master_;
    Device slave_;
    Rng rng_;
    HopSelector selector_;
    std::vector<int> bank_;
    std::array<bool, kNumChannels> usable_{};
    AfhClassifier classifier_;
    int64_t slot_ = 0;
    std::optional<InFlight> cur_;
    int cur_tx_id_ = -1;
    bool slave_reply_due_ = false;
    int64_t last_master_tx_ = -1000000;
    std::deque<Outgoing> master_q_;
    std::deque<Outgoing> slave_q_;
    std::optional<std::pair<int64_t, AfhMap>> pending_map_;
    bool afh_in_flight_ = false;
    std::optional<PairingSession> pairing_;
    std::array<std::vector<uint8_t>, 8> pairing_payloads_;
    const CipherSuite* suite_ = nullptr;
    double sync_error_us_ = 0.0;
    PiconetStats stats_;
    SlotReport report_;
    int scan_channel_ = 0;
};

// --- connection procedures -------------------------------------------------

struct FhsResponse {
    BdAddr addr;
    uint32_t clock27 = 0;  // responder's clock when the FHS was sent
    int64_t slot = 0;      // inquirer slot of reception
    int channel = 0;
    bool operator==(const FhsResponse&) const = default;
};

struct InquiryOptions {
    int64_t timeout_slots = 16384;  // 10.24 s
    int train_repetitions = 256;
    int max_backoff_slots = 1023;
};

// Inquirer transmits ID packets on the inquiry trains; each discoverable
// device opens a scan window on its own scan channel and answers a heard ID
// with an FHS on the same channel one slot later. Devices' clocks advance.
std::vector<FhsResponse> run_inquiry(Device& inquirer, std::vector<Device*> in_range, Medium& medium, uint64_t seed,
                                     const InquiryOptions& opt = {});

enum class PageError : uint8_t { None, Timeout, NotConnectable };
const char* page_error_name(PageError e);

struct ConnectionResult {
    PageError error = PageError::None;
    bool ok() const { return error == PageError::None; }
    int64_t latency_slots = 0;      // first ID to the connection ping
    int64_t first_hit_slot = -1;    // slots after the first ID when the target heard the pager
    int64_t slave_offset_ticks = 0; // master clock minus slave native clock
};

struct PageOptions {
    int64_t timeout_slots = 8192;  // 5.12 s
};

// Pages `target` using `clock_estimate` as the pager's view of the target's
// native clock at the current instant. On success the initiator becomes
// master and the target slave with its offset set.
ConnectionResult run_page(Device& initiator, Device& target, ClockState clock_estimate, Medium& medium,
                          const PageOptions& opt = {});

struct PairingRunOptions {
    PiconetConfig piconet;
    int64_t timeout_slots = 160000;
    // Called once per slot after the medium resolves.
    std::function<void(const Medium&, const SlotReport&)> observer;
};

// Runs pairing over a fresh link between two connected devices. The slave
// uses its fixed PIN when it has one. Link keys are stored on success.
PairingSession run_legacy_pairing(Device& master, Device& slave, std::string_view pin, Medium& medium, uint64_t seed,
                                  const PairingRunOptions& opt = {});

// --- snapshots -------------------------------------------------------------

struct Snapshot {
    int64_t slot = 0;
    std::vector<std::pair<std::string, Device>> devices;  // name, device

    std::string to_text() const;
    static std::optional<Snapshot> parse(std::string_view text, std::string* error = nullptr);
};

}  // namespace simbt
