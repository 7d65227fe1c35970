#include "simbt/afh.hpp"

#include <algorithm>
#include <cmath>

namespace simbt {

AfhPolicy AfhPolicy::cooperative() { return AfhPolicy{}; }

AfhPolicy AfhPolicy::aggressive() {
    AfhPolicy p;
    p.name = "aggressive";
    p.runtime_energy = false;
    return p;
}

std::optional<AfhPolicy> AfhPolicy::preset(std::string_view name) {
    if (name == "cooperative") return cooperative();
    if (name == "aggressive") return aggressive();
    return std::nullopt;
}

AfhUpdate update_afh(const AfhMap& current, const LinkStats& stats, const AfhPolicy& policy,
                     const AfhEvalOptions& opts) {
    auto loss_fail = [&](int ch) {
        const ChannelQuality& q = stats[ch];
        return q.attempts >= policy.min_attempts && q.per() > policy.per_threshold;
    };
    auto energy_fail = [&](int ch) {
        const ChannelQuality& q = stats[ch];
        return q.energy_samples > 0 && q.energy_dbm > policy.energy_threshold_dbm;
    };

    std::array<bool, kNumChannels> bad{};
    for (int ch = 0; ch < kNumChannels; ++ch) {
        bad[ch] = !current.usable(ch) || loss_fail(ch) || (opts.use_energy && energy_fail(ch));
    }
    if (opts.probe && !current.usable(*opts.probe)) {
        int ch = *opts.probe;
        if (!energy_fail(ch) && !loss_fail(ch)) bad[ch] = false;
    }

    std::vector<int> bad_list;
    for (int ch = 0; ch < kNumChannels; ++ch)
        if (bad[ch]) bad_list.push_back(ch);
    const size_t max_bad = kNumChannels - kMinUsableChannels;
    if (bad_list.size() > max_bad) {
        auto score = [&](int ch) {
            const ChannelQuality& q = stats[ch];
            double per = q.attempts >= policy.min_attempts ? q.per() : 0.0;
            double energy = q.energy_samples > 0 ? q.energy_dbm : -1000.0;
            return std::pair<double, double>(per, energy);
        };
        std::stable_sort(bad_list.begin(), bad_list.end(), [&](int a, int b) { return score(a) > score(b); });
        bad_list.resize(max_bad);
        std::sort(bad_list.begin(), bad_list.end());
    }

    AfhUpdate up;
    up.map = *AfhMap::with_bad(bad_list);
    for (int ch = 0; ch < kNumChannels; ++ch) {
        bool was = !current.usable(ch);
        bool now = !up.map.usable(ch);
        if (now && !was) up.newly_bad.push_back(ch);
        if (was && !now) up.newly_usable.push_back(ch);
    }
    return up;
}

void ChannelStats::record_attempt(int ch, int64_t slot, bool ok) { attempts_[ch].push_back({slot, ok}); }

void ChannelStats::record_energy(int ch, int64_t slot, double dbm) {
    energy_[ch].push_back({slot, std::pow(10.0, dbm / 10.0)});
}

void ChannelStats::prune(int64_t now) {
    int64_t cutoff = now - window_;
    for (int ch = 0; ch < kNumChannels; ++ch) {
        while (!attempts_[ch].empty() && attempts_[ch].front().slot <= cutoff) attempts_[ch].pop_front();
        while (!energy_[ch].empty() && energy_[ch].front().slot <= cutoff) energy_[ch].pop_front();
    }
}

LinkStats ChannelStats::snapshot(int64_t now) {
    prune(now);
    LinkStats out{};
    for (int ch = 0; ch < kNumChannels; ++ch) {
        ChannelQuality& q = out[ch];
        for (const Attempt& a : attempts_[ch]) {
            ++q.attempts;
            if (!a.ok) ++q.failures;
        }
        if (!energy_[ch].empty()) {
            double sum = 0;
            for (const Energy& e : energy_[ch]) sum += e.mw;
            q.energy_samples = static_cast<int>(energy_[ch].size());
            q.energy_dbm = 10.0 * std::log10(sum / q.energy_samples);
        }
    }
    return out;
}

AfhClassifier::AfhClassifier(AfhPolicy policy) : policy_(std::move(policy)), stats_(policy_.window_slots) {}

void AfhClassifier::enable(int64_t slot) {
    enabled_ = true;
    enabled_at_ = slot;
    next_eval_ = slot + (policy_.initial_assessment ? policy_.assessment_slots : policy_.eval_interval_slots);
    next_probe_ = next_eval_ + policy_.probe_interval_slots;
}

bool AfhClassifier::in_assessment(int64_t slot) const {
    return enabled_ && policy_.initial_assessment && slot <= enabled_at_ + policy_.assessment_slots;
}

std::optional<AfhUpdate> AfhClassifier::tick(const AfhMap& current, int64_t slot) {
    if (!enabled_ || slot < next_eval_) return std::nullopt;
    AfhEvalOptions opts;
    opts.use_energy = policy_.runtime_energy || in_assessment(slot);
    if (slot >= next_probe_) {
        next_probe_ = slot + policy_.probe_interval_slots;
        std::vector<int> bad = current.bad_channels();
        if (!bad.empty()) {
            auto it = std::lower_bound(bad.begin(), bad.end(), probe_cursor_);
            if (it == bad.end()) it = bad.begin();
            opts.probe = *it;
            probe_cursor_ = (*it + 1) % kNumChannels;
        }
    }
    next_eval_ = slot + policy_.eval_interval_slots;
    AfhUpdate up = update_afh(current, stats_.snapshot(slot), policy_, opts);
    if (!up.changed()) return std::nullopt;
    return up;
}

}  // namespace simbt
