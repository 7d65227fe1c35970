#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simbt/baseband.hpp"

namespace simbt {

// Channel classification policy used by a master. Loss and energy are both
// judged over a sliding window. Energy is always consulted during the
// assessment that follows enabling AFH and when probing a Bad channel for
// re-inclusion; runtime_energy controls whether it is consulted otherwise.
struct AfhPolicy {
    std::string name = "cooperative";
    int64_t window_slots = 1600;
    double per_threshold = 0.5;
    int min_attempts = 4;
    bool runtime_energy = true;
    bool initial_assessment = true;
    int64_t assessment_slots = 1600;
    double energy_threshold_dbm = -80.0;
    int64_t probe_interval_slots = 3200;
    int64_t eval_interval_slots = 160;

    static AfhPolicy cooperative();
    // Loss-only at runtime.
    static AfhPolicy aggressive();
    static std::optional<AfhPolicy> preset(std::string_view name);
};

struct ChannelQuality {
    int attempts = 0;
    int failures = 0;
    int energy_samples = 0;
    double energy_dbm = -90.0;  // mean received power of the samples

    double per() const { return attempts ? double(failures) / attempts : 0.0; }
};

using LinkStats = std::array<ChannelQuality, kNumChannels>;

struct AfhUpdate {
    AfhMap map;
    std::vector<int> newly_bad;
    std::vector<int> newly_usable;
    bool changed() const { return !newly_bad.empty() || !newly_usable.empty(); }
};

struct AfhEvalOptions {
    bool use_energy = true;
    std::optional<int> probe;  // a Bad channel being considered for re-inclusion
};

// One classification pass. Channels failing the policy become Bad, a probed
// channel whose energy is under the threshold and whose loss is acceptable
// returns to Unknown, and when more than 59 channels qualify the worst 59
// (by loss rate, then energy, then lower channel index) are kept.
AfhUpdate update_afh(const AfhMap& current, const LinkStats& stats, const AfhPolicy& policy,
                     const AfhEvalOptions& opts = {});

// Sliding-window bookkeeping per channel.
class ChannelStats {
public:
    explicit ChannelStats(int64_t window_slots = 1600) : window_(window_slots) {}

    void record_attempt(int ch, int64_t slot, bool ok);
    void record_energy(int ch, int64_t slot, double dbm);
    void prune(int64_t now);
    LinkStats snapshot(int64_t now);

private:
    struct Attempt {
        int64_t slot;
        bool ok;
    };
    struct Energy {
        int64_t slot;
        double mw;
    };
    int64_t window_;
    std::array<std::deque<Attempt>, kNumChannels> attempts_;
    std::array<std::deque<Energy>, kNumChannels> energy_;
};

class AfhClassifier {
public:
    explicit AfhClassifier(AfhPolicy policy);

    const AfhPolicy& policy() const { return policy_; }
    void enable(int64_t slot);
    bool enabled() const { return enabled_; }
    bool in_assessment(int64_t slot) const;

    void record_attempt(int ch, int64_t slot, bool ok) { stats_.record_attempt(ch, slot, ok); }
    void record_energy(int ch, int64_t slot, double dbm) { stats_.record_energy(ch, slot, dbm); }

    // Runs a classification pass when one is due; returns the update only if
    // the map changed.
    std::optional<AfhUpdate> tick(const AfhMap& current, int64_t slot);

private:
    AfhPolicy policy_;
    ChannelStats stats_;
    bool enabled_ = false;
    int64_t enabled_at_ = 0;
    int64_t next_eval_ = 0;
    int64_t next_probe_ = 0;
    int probe_cursor_ = 0;
};

}  // namespace simbt
