#include "simbt/sniffer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>

#include "simbt/piconet.hpp"

namespace simbt {

const char* sniffer_mode_name(SnifferMode m) {
    switch (m) {
        case SnifferMode::SingleChannel: return "single";
        case SnifferMode::Scan: return "scan";
        case SnifferMode::Follow: return "follow";
    }
    return "?";
}

const char* capture_outcome_name(CaptureOutcome o) {
    switch (o) {
        case CaptureOutcome::Decoded: return "decoded";
        case CaptureOutcome::DecodedNull: return "null";
        case CaptureOutcome::DecodedPoll: return "poll";
        case CaptureOutcome::FailedDecode: return "failed";
        case CaptureOutcome::Undecodable: return "undecodable";
    }
    return "?";
}

namespace {

constexpr int kLockWindow = kNumChannels;
constexpr int kLockMaxFailures = kNumChannels - kMinUsableChannels;  // 59 of 79
constexpr int kMaxClock6Frames = 8;
constexpr int kMaxResetsPerClock6 = 3;

std::string export_map_line(int64_t t_s, const AfhMap& m) {
    return std::to_string(t_s) + " " + m.bad_bits() + "\n";
}

}  // namespace

Sniffer::Sniffer(SnifferConfig cfg, uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
    if (cfg_.infer_afh && cfg_.known_lap) survey_.emplace(*cfg_.known_lap);
    tuned_ = cfg_.mode == SnifferMode::SingleChannel ? cfg_.channel : static_cast<int>(rng_.below(kNumChannels));
    scan_index_ = tuned_;
}

int64_t Sniffer::printed_time_us(int64_t slot) const {
    int64_t us = cfg_.epoch_base_s * 1000000 + slot * kSlotUs;
    if (!cfg_.hires) us -= us % 1000000;
    return us;
}

std::string Sniffer::format_time(int64_t slot) const {
    int64_t us = printed_time_us(slot);
    char buf[40];
    if (cfg_.hires)
        std::snprintf(buf, sizeof buf, "%" PRId64 ".%06" PRId64, us / 1000000, us % 1000000);
    else
        std::snprintf(buf, sizeof buf, "%" PRId64, us / 1000000);
    return buf;
}

bool Sniffer::done(int64_t slot) const {
    if (stop_slot_) return slot >= *stop_slot_;
    if (cfg_.mode == SnifferMode::Follow && !acquired_slot_)
        return static_cast<double>(slot) * kSlotUs * 1e-6 >= cfg_.time_bound_s;
    return false;
}

std::optional<uint32_t> Sniffer::clock27_at(int64_t slot) const {
    if (!following_) return std::nullopt;
    return static_cast<uint32_t>((static_cast<int64_t>(clock_ref_) + (slot - follow_ref_)) & kClock27Mask);
}

void Sniffer::rebuild_follow_predictor() {
    follow_adaptive_ = map_.n() < kNumChannels;
    if (follow_adaptive_) {
        follow_bank_ = follow_sel_->afh_bank(map_);
        for (int ch = 0; ch < kNumChannels; ++ch) follow_usable_[ch] = map_.usable(ch);
    }
}

int Sniffer::choose_channel(int64_t slot) {
    if (cfg_.mode == SnifferMode::SingleChannel) return cfg_.channel;
    if (following_) {
        uint32_t clk = *clock27_at(slot);
        return follow_adaptive_ ? follow_sel_->adaptive(clk, follow_bank_, follow_usable_) : follow_sel_->basic(clk);
    }
    if (slot >= dwell_until_ || !map_.usable(tuned_)) {
        // Next channel the inferred map leaves usable.
        for (int i = 1; i <= kNumChannels; ++i) {
            int ch = (scan_index_ + i) % kNumChannels;
            if (map_.usable(ch)) {
                scan_index_ = ch;
                break;
            }
        }
        dwell_until_ = slot + cfg_.scan_dwell_slots;
    }
    return scan_index_;
}

void Sniffer::restart_acquisition() {
    crc_frames_.clear();
    observations_.clear();
    clock6_.reset();
    search_.reset();
    resets_since_clock6_ = 0;
}

std::string Sniffer::rx_line(int64_t slot, int ch, const Medium& m, Party src, uint32_t clkn) const {
    double s = m.config().budget.rssi(src, Party::Sniffer);
    double n = kNoiseFloorDbm;
    char buf[160];
    std::snprintf(buf, sizeof buf, "systime=%s ch=%2d LAP=%06x err=0 clkn=%u s=%d n=%d snr=%d",
                  format_time(slot).c_str(), ch, cfg_.known_lap.value_or(0), clkn, int(std::lround(s)),
                  int(std::lround(n)), int(std::lround(s - n)));
    return buf;
}

void Sniffer::log_guess(int64_t slot) {
    ++counters_.guesses;
    log("systime=" + format_time(slot) + " " + std::to_string(search_->first_filter_count()) +
        " initial CLK1-27 candidates");
}

void Sniffer::acquire_step(int64_t slot, int ch, const WireFrame& frame) {
    ChannelObservation obs{slot, ch};
    if (!search_) {
        observations_.push_back(obs);
        if (!crc_bearing(frame)) return;
        crc_frames_.push_back({frame, slot});
        if (crc_frames_.size() > kMaxClock6Frames) crc_frames_.erase(crc_frames_.begin());
        auto rec = recover_clock6_uap(crc_frames_, cfg_.known_uap);
        if (rec.status == RecoveryStatus::Insufficient) {
            // The oldest frame disagrees with the rest; keep only the newest.
            crc_frames_.erase(crc_frames_.begin(), crc_frames_.end() - 1);
            return;
        }
        if (rec.status != RecoveryStatus::Recovered) return;
        clock6_ = rec;
        uap_ = rec.uap;
        char buf[96];
        std::snprintf(buf, sizeof buf, "systime=%s UAP = 0x%02x clock6 = %u", format_time(slot).c_str(), uap_, rec.clock6);
        log(buf);
        search_.emplace(HopAddress::from_parts(uap_, *cfg_.known_lap), rec.clock6, rec.ref_slot, cfg_.acquisition,
                        map_.n() < kNumChannels ? std::optional<AfhMap>(map_) : std::nullopt);
        std::vector<ChannelObservation> backlog;
        backlog.swap(observations_);
        for (size_t i = 0; i < backlog.size() && search_; ++i) {
            auto step = search_->observe(backlog[i]);
            if (i == 0 || step == Clock27Search::Step::Reset) log_guess(slot);
        }
        return;
    }
    auto step = search_->observe(obs);
    if (step == Clock27Search::Step::Reset) {
        if (++resets_since_clock6_ >= kMaxResetsPerClock6) {
            restart_acquisition();
            return;
        }
        log_guess(slot);
        return;
    }
    if (step != Clock27Search::Step::Acquired) return;
    following_ = true;
    // The capture window runs from the first acquisition.
    if (!acquired_slot_) {
        acquired_slot_ = slot;
        stop_slot_ = slot + static_cast<int64_t>(std::llround(cfg_.follow_s * 1e6 / kSlotUs));
    }
    follow_ref_ = slot;
    clock_ref_ = search_->clock27_at(slot);
    follow_sel_.emplace(cfg_.acquisition.kernel, HopAddress::from_parts(uap_, *cfg_.known_lap));
    rebuild_follow_predictor();
    silent_master_ = 0;
    recent_fail_.clear();
    recent_fail_count_ = 0;
    if (!counters_.acquired_us) counters_.acquired_us = printed_time_us(slot);
    char buf[96];
    std::snprintf(buf, sizeof buf, "systime=%s Acquired CLK1-27 = 0x%07x", format_time(slot).c_str(), clock_ref_);
    log(buf);
}

void Sniffer::lose_lock(int64_t slot, const char* why) {
    ++counters_.lost_locks;
    log("systime=" + format_time(slot) + " Lost CLK1-27 lock (" + why + ")");
    following_ = false;
    restart_acquisition();
}

void Sniffer::follow_step(int64_t slot, int ch, const WireFrame* frame, const Medium& m, Party src) {
    const uint32_t clk = *clock27_at(slot);
    if (!frame) {
        if ((clk & 1) == 0 && ++silent_master_ >= cfg_.lost_lock_misses) lose_lock(slot, "silent");
        return;
    }
    silent_master_ = 0;
    log(rx_line(slot, ch, m, src, clk));
    ParseResult pr = parse_wire(*frame, clk & 0x3f, uap_, Observer::ThirdParty);
    CaptureRecord rec;
    rec.sim_time_us = slot * kSlotUs;
    rec.channel = ch;
    rec.clock27_guess = clk;
    rec.type = pr.packet.ptype;
    rec.payload_class = pr.packet.payload_class;
    char buf[128];
    bool fail = false;
    switch (pr.status) {
        case ParseStatus::Decoded: {
            const PacketType t = pr.packet.ptype;
            rec.outcome = t == PacketType::Null   ? CaptureOutcome::DecodedNull
                          : t == PacketType::Poll ? CaptureOutcome::DecodedPoll
                                                  : CaptureOutcome::Decoded;
            bool data = pr.packet.payload_class == PayloadClass::Data && packet_has_payload(t) && t != PacketType::Fhs;
            std::snprintf(buf, sizeof buf, "  Packet decoded with clock 0x%02x (rv=1) type=%s class=%s", clk & 0x3f,
                          packet_type_name(t), data ? "data" : "control");
            if (rec.outcome == CaptureOutcome::DecodedNull) ++counters_.nulls;
            else if (rec.outcome == CaptureOutcome::DecodedPoll) ++counters_.polls;
            else ++counters_.decoded;
            if (data) ++counters_.good_data;
            if (!counters_.first_decode_us) counters_.first_decode_us = printed_time_us(slot);
            break;
        }
        case ParseStatus::Undecodable:
            rec.outcome = CaptureOutcome::Undecodable;
            std::snprintf(buf, sizeof buf, "  Payload not demodulated (EDR) with clock 0x%02x type=%s", clk & 0x3f,
                          packet_type_name(pr.packet.ptype));
            ++counters_.undecodable;
            break;
        default:
            rec.outcome = CaptureOutcome::FailedDecode;
            std::snprintf(buf, sizeof buf, "  Failed to decode packet with clock 0x%02x (%s)", clk & 0x3f,
                          parse_status_name(pr.status));
            ++counters_.failed;
            fail = pr.status == ParseStatus::HecMismatch;
            break;
    }
    log(buf);
    records_.push_back(rec);
    recent_fail_.push_back(fail);
    recent_fail_count_ += fail;
    if (static_cast<int>(recent_fail_.size()) > kLockWindow) {
        recent_fail_count_ -= recent_fail_.front();
        recent_fail_.pop_front();
    }
    if (static_cast<int>(recent_fail_.size()) == kLockWindow && recent_fail_count_ > kLockMaxFailures)
        lose_lock(slot, "header errors");
}

void Sniffer::observe(const Medium& m) {
    const int64_t slot = m.slot();
    if (!counters_.start_us) {
        counters_.start_us = printed_time_us(slot);
        log("systime=" + format_time(slot) + " capture start mode=" + sniffer_mode_name(cfg_.mode));
    }
    if (survey_) {
        survey_->observe(m);
        if (slot >= next_survey_) {
            map_ = infer_afh_map(survey_->table(), survey_->window_s(), cfg_.inference);
            afh_log_ += export_map_line(printed_time_us(slot) / 1000000, map_);
            next_survey_ = slot + std::max<int64_t>(1, std::llround(1e6 / kSlotUs / cfg_.survey_rate));
            if (following_) rebuild_follow_predictor();
        }
    }
    if (done(slot)) return;

    const int ch = choose_channel(slot);
    tuned_ = ch;
    const Transmission* bt = m.bluetooth_on(ch);
    const WireFrame* frame = nullptr;
    WireFrame corrupted;
    Party src = Party::BtMaster;
    if (bt && bt->frame && !bt->continuation && !bt->frame->bits.empty() &&
        (!cfg_.known_lap || bt->frame->lap == *cfg_.known_lap)) {
        if (auto o = m.outcome(bt->id, Party::Sniffer)) {
            last_capture_ = slot;
            src = bt->source;
            frame = bt->frame;
            if (*o == Outcome::Collided) {
                corrupted = *bt->frame;
                // Corruption always reaches the header.
                corrupted.bits[rng_.below(18)] ^= 1;
                for (int i = 0; i < 2; ++i) corrupted.bits[rng_.below(corrupted.bits.size())] ^= 1;
                frame = &corrupted;
            }
        }
    }

    if (cfg_.mode != SnifferMode::Follow || !cfg_.known_lap) {
        if (frame) log(rx_line(slot, ch, m, src, static_cast<uint32_t>(slot)));
        return;
    }
    if (following_) {
        follow_step(slot, ch, frame, m, src);
        return;
    }
    if (frame) {
        log(rx_line(slot, ch, m, src, static_cast<uint32_t>(slot)));
        acquire_step(slot, ch, *frame);
    }
}

SingleChannelCheck single_channel_probability_check(int pairing_run_count, uint64_t seed, int channel,
                                                    const std::optional<AfhMap>& hop_set, HopKernel kernel) {
    SingleChannelCheck out;
    const double n = hop_set ? hop_set->n() : kNumChannels;
    out.analytic = 1.0 - std::pow(1.0 - 1.0 / n, 7);
    out.union_bound = 7.0 / n;
    Rng rng(seed);
    for (int run = 0; run < pairing_run_count; ++run) {
        Device master, slave;
        master.addr = BdAddr::from_u64(rng.next() & 0xffffffffffffULL);
        slave.addr = BdAddr::from_u64(rng.next() & 0xffffffffffffULL);
        master.clock.raw = static_cast<uint32_t>(rng.next()) & kClockMask & ~3u;
        slave.clock.raw = static_cast<uint32_t>(rng.next()) & kClockMask;
        std::string pin = std::to_string(1000 + rng.below(9000));
        SnifferConfig sc;
        sc.mode = SnifferMode::SingleChannel;
        sc.channel = channel;
        sc.infer_afh = false;
        Sniffer sniffer(sc, derive_seed(seed, 2 * run + 1));
        std::array<bool, 8> seen{};
        PairingRunOptions opt;
        opt.piconet.kernel = kernel;
        opt.piconet.fixed_map = hop_set;
        opt.observer = [&](const Medium& m, const SlotReport& r) {
            sniffer.observe(m);
            if (r.first_slot && r.pairing_index > 0 && sniffer.last_capture_slot() == m.slot()) seen[r.pairing_index] = true;
        };
        Medium medium;
        PairingSession s = run_legacy_pairing(master, slave, pin, medium, derive_seed(seed, 2 * run + 2), opt);
        if (!s.success) ++out.aborted;
        int hits = 0;
        for (int i = 1; i <= 7; ++i) hits += seen[i];
        ++out.runs;
        if (hits > 0) ++out.observed_any;
        if (hits == 7) ++out.observed_all;
    }
    out.rate = out.runs ? static_cast<double>(out.observed_any) / out.runs : 0.0;
    return out;
}

}  // namespace simbt
