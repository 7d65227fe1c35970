#include <algorithm>

#include "simbt/medium.hpp"

namespace simbt {

const char* wifi_mode_name(WifiMode m) {
    switch (m) {
        case WifiMode::Off: return "off";
        case WifiMode::Saturating: return "saturating";
        case WifiMode::Ramping: return "ramping";
    }
    return "?";
}

int wifi_center_bt_channel(int wifi_channel) { return 2412 + 5 * (wifi_channel - 1) - 2402; }

std::pair<int, int> wifi_mask(int wifi_channel, int width_mhz) {
    int center = wifi_center_bt_channel(wifi_channel);
    int half = width_mhz >= 40 ? 21 : 11;
    return {std::max(0, center - half), std::min(kNumChannels - 1, center + half - 1)};
}

WifiInterferer::WifiInterferer(WifiConfig cfg, uint64_t seed)
    : cfg_(cfg), rng_(seed), mask_(wifi_mask(cfg.center_channel, cfg.width_mhz)), cw_(cfg.cw_min) {
    double f = cfg_.frame_quanta;
    double duty = f / (f + cfg_.cw_min / 2.0);
    units_per_quantum_ = cfg_.max_units / (1600.0 * duty);
}

bool WifiInterferer::active(int64_t slot) const {
    return cfg_.mode != WifiMode::Off && slot >= cfg_.start_slot;
}

double WifiInterferer::load_at(int64_t slot) const {
    if (!active(slot)) return 0.0;
    if (cfg_.mode == WifiMode::Saturating) return cfg_.offered_load;
    double frac = double(slot - cfg_.start_slot + 1) / double(std::max<int64_t>(1, cfg_.ramp_slots));
    return cfg_.offered_load * std::min(1.0, frac);
}

WifiDecision WifiInterferer::step(int64_t slot, double energy_sensed_dbm) {
    cur_slot_ = slot;
    if (!active(slot)) return {};
    if (quanta_left_ > 0) {
        ++busy_quanta_;
        return {true, false};
    }
    double load = load_at(slot);
    if (load >= 1.0) {
        queue_ = std::max(queue_, 1.0);
    } else {
        double per_slot = load / (cfg_.frame_quanta + cfg_.cw_min / 2.0);
        queue_ = std::min(queue_ + per_slot, 16.0);
    }
    bool clear = energy_sensed_dbm < cfg_.cca_threshold_dbm;
    if (backoff_ > 0) {
        if (clear) --backoff_;
        return {};
    }
    if (queue_ >= 1.0 && clear) {
        quanta_left_ = cfg_.frame_quanta << rate_step_;
        frame_failed_ = false;
        ++busy_quanta_;
        return {true, true};
    }
    return {};
}

void WifiInterferer::complete(Outcome at_receiver) {
    if (quanta_left_ <= 0) return;
    if (at_receiver == Outcome::Collided) frame_failed_ = true;
    if (--quanta_left_ == 0) finish_frame(!frame_failed_);
}

void WifiInterferer::finish_frame(bool ok) {
    if (ok) {
        fail_run_ = 0;
        if (++ok_run_ >= cfg_.raise_after_successes && rate_step_ > 0) {
            --rate_step_;
            ok_run_ = 0;
        }
    } else {
        ok_run_ = 0;
        if (++fail_run_ >= cfg_.fallback_after_failures && rate_step_ + 1 < cfg_.rate_steps) {
            ++rate_step_;
            fail_run_ = 0;
        }
    }
    if (ok) {
        credit(cur_slot_, cfg_.frame_quanta);
        ++frames_ok_;
        queue_ = std::max(0.0, queue_ - 1.0);
        cw_ = cfg_.cw_min;
        retries_ = 0;
        backoff_ = static_cast<int>(rng_.range(0, cfg_.cw_min));
        return;
    }
    ++frames_failed_;
    if (++retries_ > cfg_.retry_limit) {
        queue_ = std::max(0.0, queue_ - 1.0);
        retries_ = 0;
        cw_ = cfg_.cw_min;
    } else {
        cw_ = std::min(2 * cw_ + 1, cfg_.cw_max);
    }
    backoff_ = static_cast<int>(rng_.range(0, cw_));
}

void WifiInterferer::credit(int64_t slot, int quanta) {
    size_t sec = static_cast<size_t>(slot / 1600);
    if (per_second_.size() <= sec) per_second_.resize(sec + 1, 0);
    per_second_[sec] += static_cast<uint64_t>(quanta);
    delivered_quanta_ += static_cast<uint64_t>(quanta);
}

Transmission WifiInterferer::transmission() const {
    Transmission t;
    t.source = Party::WifiTx;
    t.channel_lo = mask_.first;
    t.channel_hi = mask_.second;
    t.receivers = {Party::WifiRx};
    return t;
}

double WifiInterferer::throughput_units(int64_t from_s, int64_t to_s) const {
    if (to_s <= from_s) return 0.0;
    uint64_t sum = 0;
    for (int64_t s = from_s; s < to_s; ++s)
        if (s >= 0 && s < static_cast<int64_t>(per_second_.size())) sum += per_second_[s];
    return double(sum) / double(to_s - from_s) * units_per_quantum_;
}

std::vector<double> WifiInterferer::throughput_series() const {
    std::vector<double> out;
    for (uint64_t q : per_second_) out.push_back(double(q) * units_per_quantum_);
    return out;
}

}  // namespace simbt
