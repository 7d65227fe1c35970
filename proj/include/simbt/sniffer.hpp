#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "simbt/baseband.hpp"
#include "simbt/hopping.hpp"
#include "simbt/medium.hpp"
#include "simbt/rng.hpp"

namespace simbt {

// --- clock6 / UAP recovery -------------------------------------------------

struct TimedFrame {
    WireFrame frame;
    int64_t slot = 0;  // sniffer slot index at reception
};

enum class RecoveryStatus : uint8_t { Recovered, Insufficient, Ambiguous };
const char* recovery_status_name(RecoveryStatus s);

using Clock6Candidate = std::pair<uint32_t, uint8_t>;  // (clock6, uap)

struct Clock6Recovery {
    RecoveryStatus status = RecoveryStatus::Insufficient;
    uint32_t clock6 = 0;   // at ref_slot
    uint8_t uap = 0;
    int64_t ref_slot = 0;  // slot of the first CRC-bearing frame
    std::vector<Clock6Candidate> candidates;  // survivors, clock6 taken at ref_slot
    int crc_frames = 0;
};

// True when the frame carries a payload CRC a third party can check.
bool crc_bearing(const WireFrame& f);
// UAP implied by the received HEC once the header is de-whitened with clock6.
uint8_t recover_uap(const WireFrame& f, uint32_t clock6);
// Whitening candidates whose de-whitened payload passes CRC under the UAP
// implied by the HEC. With known_uap only that UAP is accepted.
std::vector<Clock6Candidate> clock6_candidates(const WireFrame& f, std::optional<uint8_t> known_uap = std::nullopt);
// Intersects per-frame candidates after shifting each frame's clock6 back
// to the first CRC-bearing frame's slot. Frames without a CRC are skipped.
Clock6Recovery recover_clock6_uap(std::span<const TimedFrame> frames, std::optional<uint8_t> known_uap = std::nullopt);

// --- clock27 acquisition ---------------------------------------------------

struct ChannelObservation {
    int64_t slot = 0;
    int channel = 0;
};

struct AcquisitionConfig {
    HopKernel kernel;
    bool reduced_space = false;  // candidates restricted to [0, 2^16)
    int confirm_observations = 6;
};

constexpr uint32_t kReducedClockSpace = 1u << 16;

// Candidate-list search over the clock27 value at a reference slot. Every
// observation removes candidates whose predicted channel differs; an empty
// set starts a new guess seeded by the observation that emptied it.
class Clock27Search {
public:
    enum class Step : uint8_t { Narrowed, Reset, Confirming, Acquired };

    Clock27Search(HopAddress addr, uint32_t clock6, int64_t ref_slot, AcquisitionConfig cfg,
                  std::optional<AfhMap> map = std::nullopt);

    Step observe(const ChannelObservation& o);

    // Clock values congruent with clock6 before any observation.
    uint64_t initial_count() const;
    // Candidates left after the first observation of the current guess.
    uint64_t first_filter_count() const { return first_filter_; }
    size_t remaining() const { return cands_.size(); }
    const std::vector<uint32_t>& candidates() const { return cands_; }
    int guesses() const { return guesses_; }
    bool acquired() const { return acquired_; }
    int64_t ref_slot() const { return ref_slot_; }
    // Master clock27 at `slot` under the (first) surviving candidate.
    uint32_t clock27_at(int64_t slot) const;
    int predict(uint32_t clock27) const;

private:
    void start_guess(const ChannelObservation& o);

    HopSelector sel_;
    uint32_t clock6_;
    int64_t ref_slot_;
    AcquisitionConfig cfg_;
    std::optional<AfhMap> map_;
    std::vector<int> bank_;
    std::array<bool, kNumChannels> usable_{};
    std::vector<uint32_t> cands_;
    bool started_ = false;
    bool acquired_ = false;
    int confirmations_ = 0;
    int guesses_ = 0;
    uint64_t first_filter_ = 0;
};

// Exhaustive recomputation of the surviving set from scratch.
std::vector<uint32_t> clock27_oracle(HopKernel kernel, HopAddress addr, uint32_t clock6, int64_t ref_slot,
                                     std::span<const ChannelObservation> obs, uint32_t space,
                                     const AfhMap* map = nullptr);

struct ClockAcquisition {
    uint32_t clock6 = 0;
    uint8_t uap = 0;
    uint64_t candidates_initial = 0;
    uint64_t candidates_remaining = 0;
    std::optional<uint32_t> acquired_clock27;  // at the last observation's slot
    int guesses = 0;
    double time_to_acquire_s = 0.0;  // from the first observation
};

ClockAcquisition acquire_clock27(std::span<const ChannelObservation> obs, uint32_t clock6, int64_t ref_slot,
                                 HopAddress addr, uint8_t uap, const AcquisitionConfig& cfg,
                                 const std::optional<AfhMap>& map_estimate = std::nullopt);

// --- AFH map inference -----------------------------------------------------

struct ChannelActivity {
    int packets = 0;         // piconet packets heard
    int slots_observed = 0;  // slots the survey radio was tuned here
    int noise_samples = 0;
    double noise_dbm = kNoiseFloorDbm;  // mean power with no piconet packet present
    double rate() const { return slots_observed ? double(packets) / slots_observed : 0.0; }
};

using ActivityTable = std::array<ChannelActivity, kNumChannels>;

struct InferenceConfig {
    int top_n = 20;
    double rate_cutoff = 0.5;          // fraction of the Top-20 mean rate
    double min_top_mean_packets = 8.0; // evidence needed before the rate path marks Bad
    double noise_threshold_dbm = -80.0;
};

// Top-20 channels by packet rate are Good; channels well under the Top-20
// mean rate are Bad; noisy channels outside the Top-20 are Bad. At most 59
// are marked Bad, the least used and noisiest first.
AfhMap infer_afh_map(const ActivityTable& activity, double window_s, const InferenceConfig& cfg = {});

// Survey radio: hops one channel per slot and keeps a sliding window.
class AfhSurvey {
public:
    AfhSurvey(uint32_t lap, int64_t window_slots = 16000) : lap_(lap), window_(window_slots) {}
    void observe(const Medium& m);
    ActivityTable table() const;
    double window_s() const;

private:
    struct Sample {
        int64_t slot;
        int channel;
        bool packet;
        double noise_mw;  // < 0 when a piconet packet was present
    };
    uint32_t lap_;
    int64_t window_;
    std::deque<Sample> samples_;
    ActivityTable totals_{};
    std::array<double, kNumChannels> noise_sum_{};
    int64_t first_slot_ = -1;
    int64_t last_slot_ = -1;
};

// --- the sniffer actor -----------------------------------------------------

enum class SnifferMode : uint8_t { SingleChannel, Scan, Follow };
const char* sniffer_mode_name(SnifferMode m);

struct SnifferConfig {
    SnifferMode mode = SnifferMode::Follow;  // Follow scans, acquires, then follows
    int channel = 0;                          // SingleChannel
    std::optional<uint32_t> known_lap;
    std::optional<uint8_t> known_uap;
    double time_bound_s = 180.0;  // to acquire clock27
    double follow_s = 60.0;       // capture time after acquisition
    double survey_rate = 1.0;  // inferred maps per second
    bool infer_afh = true;
    int scan_dwell_slots = 1600;
    AcquisitionConfig acquisition;
    int lost_lock_misses = 16;  // consecutive silent master slots
    bool hires = false;
    int64_t epoch_base_s = 1500000000;
    InferenceConfig inference;
};

enum class CaptureOutcome : uint8_t { Decoded, DecodedNull, DecodedPoll, FailedDecode, Undecodable };
const char* capture_outcome_name(CaptureOutcome o);

struct CaptureRecord {
    int64_t sim_time_us = 0;
    int channel = 0;
    CaptureOutcome outcome = CaptureOutcome::FailedDecode;
    PacketType type = PacketType::Null;
    PayloadClass payload_class = PayloadClass::Control;
    uint32_t clock27_guess = 0;
};

struct SnifferCounters {
    int guesses = 0;
    std::optional<int64_t> acquired_us;     // epoch µs as printed
    std::optional<int64_t> first_decode_us;
    std::optional<int64_t> start_us;
    uint64_t decoded = 0;
    uint64_t failed = 0;
    uint64_t nulls = 0;
    uint64_t polls = 0;
    uint64_t good_data = 0;
    uint64_t undecodable = 0;
    uint64_t lost_locks = 0;
};

class Sniffer {
public:
    explicit Sniffer(SnifferConfig cfg, uint64_t seed = 1);

    // Once per slot after Medium::resolve.
    void observe(const Medium& m);

    const SnifferConfig& config() const { return cfg_; }
    const std::string& console() const { return console_; }
    const std::string& afh_log() const { return afh_log_; }
    const std::vector<CaptureRecord>& records() const { return records_; }
    const SnifferCounters& counters() const { return counters_; }
    bool acquired() const { return following_; }
    std::optional<uint32_t> clock27_at(int64_t slot) const;
    // Slot at which the sniffer acquired, if it has.
    std::optional<int64_t> acquired_slot() const { return acquired_slot_; }
    const AfhMap& inferred_map() const { return map_; }
    int tuned_channel() const { return tuned_; }
    // Slot of the last raw capture on the tuned channel, -1 if none.
    int64_t last_capture_slot() const { return last_capture_; }
    bool done(int64_t slot) const;

    // Epoch time as it appears in the console (truncated unless hires).
    int64_t printed_time_us(int64_t slot) const;
    std::string format_time(int64_t slot) const;

private:
    int choose_channel(int64_t slot);
    void restart_acquisition();
    void acquire_step(int64_t slot, int ch, const WireFrame& frame);
    void log_guess(int64_t slot);
    void follow_step(int64_t slot, int ch, const WireFrame* frame, const Medium& m, Party src);
    void rebuild_follow_predictor();
    void lose_lock(int64_t slot, const char* why);
    std::string rx_line(int64_t slot, int ch, const Medium& m, Party src, uint32_t clkn) const;
    void log(const std::string& line) { console_ += line + '\n'; }

    SnifferConfig cfg_;
    Rng rng_;
    std::string console_;
    std::string afh_log_;
    std::vector<CaptureRecord> records_;
    SnifferCounters counters_;
    std::optional<AfhSurvey> survey_;
    AfhMap map_;
    int tuned_ = 0;
    int64_t last_capture_ = -1;
    int scan_index_ = 0;
    int64_t dwell_until_ = -1;

    // acquisition state
    std::vector<TimedFrame> crc_frames_;
    std::vector<ChannelObservation> observations_;
    std::optional<Clock6Recovery> clock6_;
    std::optional<Clock27Search> search_;
    uint8_t uap_ = 0;

    // follow state
    bool following_ = false;
    uint32_t clock_ref_ = 0;   // clock27 at follow_ref_
    int64_t follow_ref_ = 0;
    std::optional<HopSelector> follow_sel_;
    std::vector<int> follow_bank_;
    std::array<bool, kNumChannels> follow_usable_{};
    bool follow_adaptive_ = false;
    int resets_since_clock6_ = 0;
    int silent_master_ = 0;
    std::deque<bool> recent_fail_;
    int recent_fail_count_ = 0;
    int64_t next_survey_ = 0;
    std::optional<int64_t> acquired_slot_;
    std::optional<int64_t> stop_slot_;
};

// --- single-channel observation experiment ---------------------------------

struct SingleChannelCheck {
    int runs = 0;
    int observed_any = 0;
    int observed_all = 0;
    int aborted = 0;
    double rate = 0.0;
    double analytic = 0.0;     // 1 - (1 - 1/n)^7
    double union_bound = 0.0;  // 7/n
};

// Runs fresh legacy pairings and records how often a sniffer parked on one
// channel catches at least one (and all) of the seven pairing packets.
// With a hop set, the channel must be one of its usable channels.
SingleChannelCheck single_channel_probability_check(int pairing_run_count, uint64_t seed, int channel = 0,
                                                    const std::optional<AfhMap>& hop_set = std::nullopt,
                                                    HopKernel kernel = {});

}  // namespace simbt
