#include <algorithm>
#include <cmath>
#include <numeric>

#include "simbt/sniffer.hpp"

namespace simbt {

namespace {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(std::max(mw, 1e-15)); }

}  // namespace

AfhMap infer_afh_map(const ActivityTable& activity, double /*window_s*/, const InferenceConfig& cfg) {
    std::array<int, kNumChannels> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return activity[a].rate() > activity[b].rate(); });
    const int top = std::clamp(cfg.top_n, 0, kNumChannels);
    std::array<bool, kNumChannels> in_top{};
    double top_rate = 0.0, top_packets = 0.0;
    for (int i = 0; i < top; ++i) {
        in_top[order[i]] = activity[order[i]].packets > 0;
        top_rate += activity[order[i]].rate();
        top_packets += activity[order[i]].packets;
    }
    if (top > 0) {
        top_rate /= top;
        top_packets /= top;
    }
    const bool rate_evidence = top_packets >= cfg.min_top_mean_packets && top_rate > 0.0;

    std::array<AfhClass, kNumChannels> e{};
    std::vector<int> bad;
    for (int ch = 0; ch < kNumChannels; ++ch) {
        const ChannelActivity& a = activity[ch];
        if (in_top[ch]) {
            e[ch] = AfhClass::Good;
            continue;
        }
        bool noisy = a.noise_samples > 0 && a.noise_dbm > cfg.noise_threshold_dbm;
        bool quiet_link = rate_evidence && a.slots_observed > 0 && a.rate() < cfg.rate_cutoff * top_rate;
        if (noisy || quiet_link) bad.push_back(ch);
    }
    // Least used first, then noisiest.
    std::stable_sort(bad.begin(), bad.end(), [&](int a, int b) {
        if (activity[a].rate() != activity[b].rate()) return activity[a].rate() < activity[b].rate();
        return activity[a].noise_dbm > activity[b].noise_dbm;
    });
    const size_t max_bad = kNumChannels - kMinUsableChannels;
    if (bad.size() > max_bad) bad.resize(max_bad);
    for (int ch : bad) e[ch] = AfhClass::Bad;
    // Never fails: at least 20 channels are left non-Bad.
    return *AfhMap::from_entries(e);
}

void AfhSurvey::observe(const Medium& m) {
    const int64_t slot = m.slot();
    if (first_slot_ < 0) first_slot_ = slot;
    last_slot_ = slot;
    const int ch = static_cast<int>(((slot % kNumChannels) + kNumChannels) % kNumChannels);
    Sample s{slot, ch, false, -1.0};
    const Transmission* bt = m.bluetooth_on(ch);
    if (bt && !bt->continuation && bt->frame && bt->frame->lap == lap_) {
        auto o = m.outcome(bt->id, Party::Scout);
        s.packet = o.has_value();
    }
    if (!s.packet && !(bt && bt->frame && bt->frame->lap == lap_))
        s.noise_mw = dbm_to_mw(std::max(m.energy_dbm(ch, Party::Scout), kNoiseFloorDbm));
    samples_.push_back(s);
    ChannelActivity& t = totals_[ch];
    ++t.slots_observed;
    if (s.packet) ++t.packets;
    if (s.noise_mw >= 0) {
        ++t.noise_samples;
        noise_sum_[ch] += s.noise_mw;
    }
    while (!samples_.empty() && samples_.front().slot <= slot - window_) {
        const Sample& old = samples_.front();
        ChannelActivity& o = totals_[old.channel];
        --o.slots_observed;
        if (old.packet) --o.packets;
        if (old.noise_mw >= 0) {
            --o.noise_samples;
            noise_sum_[old.channel] -= old.noise_mw;
        }
        samples_.pop_front();
    }
}

ActivityTable AfhSurvey::table() const {
    ActivityTable out = totals_;
    for (int ch = 0; ch < kNumChannels; ++ch) {
        out[ch].noise_dbm = out[ch].noise_samples > 0 ? mw_to_dbm(noise_sum_[ch] / out[ch].noise_samples) : kNoiseFloorDbm;
    }
    return out;
}

double AfhSurvey::window_s() const {
    if (first_slot_ < 0) return 0.0;
    return static_cast<double>(std::min<int64_t>(last_slot_ - first_slot_ + 1, window_)) * kSlotUs * 1e-6;
}

}  // namespace simbt
