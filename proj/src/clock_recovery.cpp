#include <algorithm>
#include <stdexcept>

#include "simbt/sniffer.hpp"

namespace simbt {

const char* recovery_status_name(RecoveryStatus s) {
    switch (s) {
        case RecoveryStatus::Recovered: return "recovered";
        case RecoveryStatus::Insufficient: return "insufficient";
        case RecoveryStatus::Ambiguous: return "ambiguous";
    }
    return "?";
}

namespace {

// Longest payload region: DH5 body plus payload header and CRC.
constexpr size_t kMaxRegionBytes = 512;

struct Keystreams {
    std::array<uint32_t, 64> header{};                            // 18 bits
    std::array<std::array<uint8_t, kMaxRegionBytes>, 64> region{};  // from bit 18, packed LSB first
    Keystreams() {
        for (uint32_t c = 0; c < 64; ++c) {
            Bits ks = whitening_keystream(derive_whitening_word(c), 18 + 8 * kMaxRegionBytes);
            for (int i = 0; i < 18; ++i) header[c] |= uint32_t(ks[i]) << i;
            for (size_t b = 0; b < kMaxRegionBytes; ++b) {
                uint8_t v = 0;
                for (int i = 0; i < 8; ++i) v |= uint8_t(ks[18 + 8 * b + i] << i);
                region[c][b] = v;
            }
        }
    }
};

const Keystreams& keystreams() {
    static const Keystreams k;
    return k;
}

}  // namespace

bool crc_bearing(const WireFrame& f) {
    if (f.modulation != Modulation::BasicRate || !f.has_payload()) return false;
    size_t region = f.bits.size() - 18;
    return region % 8 == 0 && region >= 24 && region / 8 <= kMaxRegionBytes;
}

uint8_t recover_uap(const WireFrame& f, uint32_t clock6) {
    uint8_t hec = 0;
    uint16_t h = dewhitened_header(f, clock6 & 0x3f, &hec);
    return uap_from_hec(h, hec);
}

std::vector<Clock6Candidate> clock6_candidates(const WireFrame& f, std::optional<uint8_t> known_uap) {
    std::vector<Clock6Candidate> out;
    if (!crc_bearing(f)) return out;
    const Keystreams& ks = keystreams();
    uint32_t head = 0;
    for (int i = 0; i < 18; ++i) head |= uint32_t(f.bits[i] & 1) << i;
    const size_t n = (f.bits.size() - 18) / 8;
    std::array<uint8_t, kMaxRegionBytes> raw{}, plain{};
    for (size_t b = 0; b < n; ++b) {
        uint8_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint8_t((f.bits[18 + 8 * b + i] & 1) << i);
        raw[b] = v;
    }
    for (uint32_t c = 0; c < 64; ++c) {
        uint32_t h = head ^ ks.header[c];
        uint8_t uap = uap_from_hec(static_cast<uint16_t>(h & 0x3ff), static_cast<uint8_t>(h >> 10));
        if (known_uap && uap != *known_uap) continue;
        for (size_t b = 0; b < n; ++b) plain[b] = raw[b] ^ ks.region[c][b];
        uint16_t rx = static_cast<uint16_t>(plain[n - 2] | (plain[n - 1] << 8));
        if (crc_bytes_fast(std::span<const uint8_t>(plain.data(), n - 2), crc_init(uap)) == rx)
            out.emplace_back(c, uap);
    }
    return out;
}

Clock6Recovery recover_clock6_uap(std::span<const TimedFrame> frames, std::optional<uint8_t> known_uap) {
    Clock6Recovery r;
    bool first = true;
    for (const TimedFrame& tf : frames) {
        if (!crc_bearing(tf.frame)) continue;
        ++r.crc_frames;
        auto cands = clock6_candidates(tf.frame, known_uap);
        if (first) {
            r.ref_slot = tf.slot;
            r.candidates = std::move(cands);
            first = false;
            continue;
        }
        // One slot advances clock6 by one.
        const uint32_t shift = static_cast<uint32_t>(((tf.slot - r.ref_slot) % 64 + 64) % 64);
        std::vector<Clock6Candidate> keep;
        for (const auto& c : r.candidates) {
            Clock6Candidate moved{(c.first + shift) & 0x3f, c.second};
            if (std::find(cands.begin(), cands.end(), moved) != cands.end()) keep.push_back(c);
        }
        r.candidates = std::move(keep);
    }
    if (r.crc_frames == 0 || r.candidates.empty()) {
        r.status = RecoveryStatus::Insufficient;
    } else if (r.candidates.size() > 1) {
        r.status = RecoveryStatus::Ambiguous;
    } else {
        r.status = RecoveryStatus::Recovered;
        r.clock6 = r.candidates[0].first;
        r.uap = r.candidates[0].second;
    }
    return r;
}

// --- clock27 search --------------------------------------------------------

Clock27Search::Clock27Search(HopAddress addr, uint32_t clock6, int64_t ref_slot, AcquisitionConfig cfg,
                             std::optional<AfhMap> map)
    : sel_(cfg.kernel, addr), clock6_(clock6 & 0x3f), ref_slot_(ref_slot), cfg_(cfg), map_(std::move(map)) {
    if (map_ && map_->n() == kNumChannels) map_.reset();
    if (map_) {
        bank_ = sel_.afh_bank(*map_);
        for (int ch = 0; ch < kNumChannels; ++ch) usable_[ch] = map_->usable(ch);
    }
}

uint64_t Clock27Search::initial_count() const {
    return (cfg_.reduced_space ? kReducedClockSpace : (kClock27Mask + 1u)) / 64;
}

int Clock27Search::predict(uint32_t clock27) const {
    return map_ ? sel_.adaptive(clock27, bank_, usable_) : sel_.basic(clock27);
}

static uint32_t shifted(uint32_t c, int64_t dt) {
    return static_cast<uint32_t>((static_cast<int64_t>(c) + dt) & kClock27Mask);
}

void Clock27Search::start_guess(const ChannelObservation& o) {
    ++guesses_;
    started_ = true;
    acquired_ = false;
    confirmations_ = 0;
    cands_.clear();
    const int64_t dt = o.slot - ref_slot_;
    const uint64_t count = initial_count();
    for (uint64_t k = 0; k < count; ++k) {
        uint32_t c = static_cast<uint32_t>(k * 64 + clock6_);
        if (predict(shifted(c, dt)) == o.channel) cands_.push_back(c);
    }
    first_filter_ = cands_.size();
}

Clock27Search::Step Clock27Search::observe(const ChannelObservation& o) {
    if (!started_) {
        start_guess(o);
        return cands_.empty() ? Step::Reset : Step::Narrowed;
    }
    const int64_t dt = o.slot - ref_slot_;
    const size_t before = cands_.size();
    std::erase_if(cands_, [&](uint32_t c) { return predict(shifted(c, dt)) != o.channel; });
    if (cands_.empty()) {
        start_guess(o);
        return Step::Reset;
    }
    if (cands_.size() == 1) {
        // The observation that narrows to one candidate does not confirm it.
        if (before == 1 && !acquired_ && ++confirmations_ >= cfg_.confirm_observations) acquired_ = true;
        if (acquired_) return Step::Acquired;
        return Step::Confirming;
    }
    return Step::Narrowed;
}

uint32_t Clock27Search::clock27_at(int64_t slot) const {
    if (cands_.empty()) throw std::logic_error("no clock candidate");
    return shifted(cands_.front(), slot - ref_slot_);
}

std::vector<uint32_t> clock27_oracle(HopKernel kernel, HopAddress addr, uint32_t clock6, int64_t ref_slot,
                                     std::span<const ChannelObservation> obs, uint32_t space, const AfhMap* map) {
    std::vector<uint32_t> out;
    for (uint32_t c = clock6 & 0x3f; c < space; c += 64) {
        bool ok = true;
        for (const auto& o : obs) {
            uint32_t clk = shifted(c, o.slot - ref_slot);
            int ch = (map && map->n() < kNumChannels) ? adaptive_hop(kernel, addr, clk, *map) : basic_hop(kernel, addr, clk);
            if (ch != o.channel) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(c);
    }
    return out;
}

ClockAcquisition acquire_clock27(std::span<const ChannelObservation> obs, uint32_t clock6, int64_t ref_slot,
                                 HopAddress addr, uint8_t uap, const AcquisitionConfig& cfg,
                                 const std::optional<AfhMap>& map_estimate) {
    ClockAcquisition r;
    r.clock6 = clock6 & 0x3f;
    r.uap = uap;
    Clock27Search s(addr, clock6, ref_slot, cfg, map_estimate);
    r.candidates_initial = s.initial_count();
    r.candidates_remaining = r.candidates_initial;
    for (const auto& o : obs) {
        auto step = s.observe(o);
        r.candidates_remaining = s.remaining();
        if (step == Clock27Search::Step::Acquired) {
            r.acquired_clock27 = s.clock27_at(obs.back().slot);
            r.time_to_acquire_s = static_cast<double>(o.slot - obs.front().slot) * kSlotUs * 1e-6;
            break;
        }
    }
    r.guesses = s.guesses();
    return r;
}

}  // namespace simbt
