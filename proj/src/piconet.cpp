#include "simbt/piconet.hpp"

#include <algorithm>
#include <cmath>

namespace simbt {

const char* role_name(Role r) {
    switch (r) {
        case Role::Idle: return "Idle";
        case Role::Master: return "Master";
        case Role::Slave: return "Slave";
    }
    return "?";
}

std::optional<Role> role_from_name(std::string_view s) {
    if (s == "Idle") return Role::Idle;
    if (s == "Master") return Role::Master;
    if (s == "Slave") return Role::Slave;
    return std::nullopt;
}

ClockState Device::master_clock() const {
    int64_t v = static_cast<int64_t>(clock.raw) + clock_offset_to_master;
    v %= int64_t{kClockMask} + 1;
    if (v < 0) v += int64_t{kClockMask} + 1;
    return ClockState{static_cast<uint32_t>(v)};
}

namespace {

int64_t signed_tick_diff(uint32_t a, uint32_t b) {
    int64_t d = (static_cast<int64_t>(a) - static_cast<int64_t>(b)) & kClockMask;
    if (d >= (int64_t{1} << 27)) d -= int64_t{1} << 28;
    return d;
}

Key128 random_key(Rng& rng) {
    Key128 k{};
    uint64_t a = rng.next(), b = rng.next();
    for (int i = 0; i < 8; ++i) {
        k[i] = static_cast<uint8_t>(a >> (8 * i));
        k[8 + i] = static_cast<uint8_t>(b >> (8 * i));
    }
    return k;
}

PairingKind pairing_kind_of(int index) {
    switch (index) {
        case 1: return PairingKind::InRand;
        case 2:
        case 3: return PairingKind::CombKey;
        case 4:
        case 6: return PairingKind::AuRand;
        default: return PairingKind::Sres;
    }
}

}  // namespace

Piconet::Piconet(Device master, Device slave, PiconetConfig cfg, uint64_t seed)
    : cfg_(std::move(cfg)),
      master_(std::move(master)),
      slave_(std::move(slave)),
      rng_(seed),
      selector_(cfg_.kernel, HopAddress::from(master_.addr)),
      classifier_(cfg_.afh_policy) {
    master_.role = Role::Master;
    slave_.role = Role::Slave;
    master_.clock_offset_to_master = 0;
    slave_.clock_offset_to_master = signed_tick_diff(master_.clock.raw, slave_.clock.raw);
    master_.afh_map = cfg_.fixed_map ? *cfg_.fixed_map : AfhMap{};
    apply_map(master_.afh_map);
    if (cfg_.afh_enabled && !cfg_.fixed_map) classifier_.enable(0);
}

void Piconet::apply_map(const AfhMap& m) {
    master_.afh_map = m;
    slave_.afh_map = m;
    bank_ = selector_.afh_bank(m);
    for (int ch = 0; ch < kNumChannels; ++ch) usable_[ch] = m.usable(ch);
}

int Piconet::channel_at(uint32_t clock27) const {
    if (master_.afh_map.n() == kNumChannels) return selector_.basic(clock27);
    return selector_.adaptive(clock27, bank_, usable_);
}

int64_t Piconet::lmp_delay() { return rng_.range(cfg_.lmp_delay_min_slots, cfg_.lmp_delay_max_slots); }

std::optional<Piconet::Outgoing> Piconet::next_master_packet() {
    for (auto it = master_q_.begin(); it != master_q_.end(); ++it) {
        if (it->ready <= slot_) {
            Outgoing o = std::move(*it);
            master_q_.erase(it);
            return o;
        }
    }
    BasebandPacket p = generate_traffic(cfg_.traffic, {true, master_.addr.lap, slot_}, rng_);
    if (!is_keepalive(p)) return Outgoing{std::move(p), slot_, 0, std::nullopt};
    if (slot_ - last_master_tx_ >= cfg_.poll_interval_slots) return Outgoing{std::move(p), slot_, 0, std::nullopt};
    return std::nullopt;
}

std::optional<Piconet::Outgoing> Piconet::next_slave_packet() {
    for (auto it = slave_q_.begin(); it != slave_q_.end(); ++it) {
        if (it->ready <= slot_) {
            Outgoing o = std::move(*it);
            slave_q_.erase(it);
            return o;
        }
    }
    return Outgoing{generate_traffic(cfg_.traffic, {false, master_.addr.lap, slot_}, rng_), slot_, 0, std::nullopt};
}

void Piconet::begin_slot(Medium& medium) {
    report_ = SlotReport{};
    report_.slot = slot_;
    uint32_t clk = master_.clock.clock27();
    report_.clock27 = clk;

    if (pending_map_ && slot_ >= pending_map_->first) {
        apply_map(pending_map_->second);
        pending_map_.reset();
    }

    if (cur_ && cur_->slots_left > 0) {
        Transmission tx;
        tx.source = cur_->from == Role::Master ? Party::BtMaster : Party::BtSlave;
        tx.channel_lo = tx.channel_hi = cur_->channel;
        tx.receivers = {cur_->from == Role::Master ? Party::BtSlave : Party::BtMaster, Party::Sniffer, Party::Scout};
        tx.frame = &cur_->frame;
        tx.continuation = true;
        cur_tx_id_ = medium.add(std::move(tx));
        report_.transmitter = cur_->from;
        report_.channel = cur_->channel;
        report_.packet = &cur_->packet;
        report_.pairing_index = cur_->pairing_index;
        return;
    }
    cur_.reset();

    bool master_slot = (clk & 1) == 0;
    std::optional<Outgoing> out;
    if (master_slot) {
        out = next_master_packet();
    } else if (slave_reply_due_) {
        out = next_slave_packet();
        slave_reply_due_ = false;
    }
    if (!out) return;

    InFlight f;
    f.from = master_slot ? Role::Master : Role::Slave;
    f.packet = std::move(out->packet);
    f.pairing_index = out->pairing_index;
    f.afh = std::move(out->afh);
    f.from_queue = out->pairing_index > 0 || f.afh || f.packet.ptype == PacketType::Lmp;
    f.start_slot = slot_;
    if (f.afh) {
        std::vector<uint8_t> params;
        uint32_t instant = (clk + static_cast<uint32_t>(cfg_.afh_instant_slots)) & kClock27Mask;
        for (int i = 0; i < 4; ++i) params.push_back(static_cast<uint8_t>(instant >> (8 * i)));
        std::string bits = f.afh->bad_bits();
        std::vector<uint8_t> map_bytes(10, 0);
        for (int ch = 0; ch < kNumChannels; ++ch)
            if (bits[ch] == '0') map_bytes[ch / 8] |= static_cast<uint8_t>(1u << (ch % 8));
        params.insert(params.end(), map_bytes.begin(), map_bytes.end());
        f.packet = make_lmp_packet(lmp::kSetAfh, master_.addr.lap, params);
    }
    f.channel = channel_at(clk);
    f.slots_left = f.packet.slots;
    f.frame = build_wire(f.packet, clk & 0x3f, master_.addr.uap);
    cur_ = std::move(f);

    Transmission tx;
    tx.source = master_slot ? Party::BtMaster : Party::BtSlave;
    tx.channel_lo = tx.channel_hi = cur_->channel;
    tx.receivers = {master_slot ? Party::BtSlave : Party::BtMaster, Party::Sniffer, Party::Scout};
    tx.frame = &cur_->frame;
    cur_tx_id_ = medium.add(std::move(tx));

    if (master_slot) last_master_tx_ = slot_;
    ++stats_.packets;
    ++stats_.by_type[static_cast<size_t>(cur_->packet.ptype)];
    if (packet_has_payload(cur_->packet.ptype) && cur_->packet.ptype != PacketType::Fhs) {
        bool acl = cur_->packet.ptype == PacketType::Dm1 || cur_->packet.ptype == PacketType::Dh1 ||
                   cur_->packet.ptype == PacketType::Dh3 || cur_->packet.ptype == PacketType::Dh5;
        if (acl) ++stats_.payload_packets;
        if (acl && cur_->packet.payload_class == PayloadClass::Data) {
            ++stats_.data_packets;
            if (cur_->packet.modulation == Modulation::Edr) ++stats_.data_edr;
        }
    }
    if (cur_->pairing_index > 0 && pairing_) {
        auto& s = *pairing_;
        bool first = !s.transcript.find(cur_->pairing_index);
        if (first) {
            Side src = transcript_src(cur_->pairing_index);
            s.transcript.records.push_back({cur_->pairing_index, src, src == Side::A ? Side::B : Side::A,
                                            pairing_payloads_[cur_->pairing_index]});
        }
        s.wire.push_back({cur_->pairing_index, slot_, cur_->channel, false});
    }

    report_.transmitter = cur_->from;
    report_.channel = cur_->channel;
    report_.first_slot = true;
    report_.packet = &cur_->packet;
    report_.pairing_index = cur_->pairing_index;
}

void Piconet::queue_pairing(int index, int64_t now) {
    BasebandPacket p = make_pairing_packet(pairing_kind_of(index), master_.addr.lap, pairing_payloads_[index]);
    Outgoing o{std::move(p), now + lmp_delay(), index, std::nullopt};
    if (transcript_src(index) == Side::A) master_q_.push_back(std::move(o));
    else slave_q_.push_back(std::move(o));
}

void Piconet::start_pairing(std::string pin_a, std::string pin_b, const CipherSuite& suite) {
    suite_ = &suite;
    PairingSession s;
    s.pin = std::move(pin_a);
    s.pin_b = std::move(pin_b);
    s.in_rand = random_key(rng_);
    s.lk_rand_a = random_key(rng_);
    s.lk_rand_b = random_key(rng_);
    s.au_rand_a = random_key(rng_);
    s.au_rand_b = random_key(rng_);
    const BdAddr& a = master_.addr;
    const BdAddr& b = slave_.addr;
    Key128 k_init_a = suite.e22(s.pin, a, s.in_rand);
    Key128 k_init_b = suite.e22(s.pin_b, a, s.in_rand);
    Key128 masked_a = xor128(s.lk_rand_a, k_init_a);
    Key128 masked_b = xor128(s.lk_rand_b, k_init_b);
    s.k_init = k_init_a;
    s.k_ab = combine_link_key(suite, s.lk_rand_a, a, xor128(masked_b, k_init_a), b);
    s.k_ab_b = combine_link_key(suite, xor128(masked_a, k_init_b), a, s.lk_rand_b, b);
    Key128 auth_b = suite.e1(s.k_ab_b, b, s.au_rand_a);
    s.sres_b = sres_of(auth_b);
    s.aco = aco_of(suite.e1(s.k_ab, b, s.au_rand_a));
    s.sres_a = sres_of(suite.e1(s.k_ab, a, s.au_rand_b));
    s.start_slot = slot_;

    pairing_payloads_[1].assign(s.in_rand.begin(), s.in_rand.end());
    pairing_payloads_[2].assign(masked_a.begin(), masked_a.end());
    pairing_payloads_[3].assign(masked_b.begin(), masked_b.end());
    pairing_payloads_[4].assign(s.au_rand_a.begin(), s.au_rand_a.end());
    pairing_payloads_[5].assign(s.sres_b.begin(), s.sres_b.end());
    pairing_payloads_[6].assign(s.au_rand_b.begin(), s.au_rand_b.end());
    pairing_payloads_[7].assign(s.sres_a.begin(), s.sres_a.end());
    pairing_ = std::move(s);
    queue_pairing(1, slot_);
}

void Piconet::on_delivered(const InFlight& f) {
    if (f.from == Role::Master) slave_reply_due_ = true;
    if (f.packet.payload_class == PayloadClass::Data && f.packet.ptype != PacketType::Lmp &&
        f.packet.ptype != PacketType::Pairing && packet_has_payload(f.packet.ptype))
        ++stats_.data_delivered;

    if (f.afh) {
        pending_map_ = std::make_pair(f.start_slot + cfg_.afh_instant_slots, *f.afh);
        afh_in_flight_ = false;
        ++stats_.afh_broadcasts;
        return;
    }
    if (f.packet.ptype == PacketType::Lmp && f.from == Role::Master && !f.packet.payload.empty() &&
        (f.packet.payload[0] >> 1) != lmp::kAccepted) {
        uint8_t op = f.packet.payload[0] >> 1;
        slave_q_.push_back({make_lmp_packet(lmp::kAccepted, master_.addr.lap, std::span<const uint8_t>(&op, 1)),
                            slot_ + 1, 0, std::nullopt});
        return;
    }
    if (f.pairing_index == 0 || !pairing_ || pairing_->done) return;
    PairingSession& s = *pairing_;
    for (auto it = s.wire.rbegin(); it != s.wire.rend(); ++it)
        if (it->index == f.pairing_index) {
            it->delivered = true;
            break;
        }
    const CipherSuite& suite = suite_ ? *suite_ : default_suite();
    int k = f.pairing_index;
    if (k == 5) {
        Sres expect = sres_of(suite.e1(s.k_ab, slave_.addr, s.au_rand_a));
        if (expect != s.sres_b) {
            s.done = true;
            s.aborted_at = 5;
            s.end_slot = slot_;
            return;
        }
    }
    if (k == 7) {
        Sres expect = sres_of(suite.e1(s.k_ab_b, master_.addr, s.au_rand_b));
        s.done = true;
        s.end_slot = slot_;
        if (expect != s.sres_a) {
            s.aborted_at = 7;
            return;
        }
        s.success = true;
        master_.link_keys[slave_.addr.to_u64()] = s.k_ab;
        slave_.link_keys[master_.addr.to_u64()] = s.k_ab_b;
        return;
    }
    queue_pairing(k + 1, slot_);
}

void Piconet::on_lost(InFlight& f) {
    if (f.from == Role::Master) slave_reply_due_ = false;
    bool retransmit = f.from_queue || (packet_has_payload(f.packet.ptype) && !is_keepalive(f.packet));
    if (!retransmit) return;
    ++stats_.retransmissions;
    Outgoing o{f.packet, slot_, f.pairing_index, f.afh};
    if (f.from == Role::Master) master_q_.push_front(std::move(o));
    else slave_q_.push_front(std::move(o));
}

SlotReport Piconet::end_slot(const Medium& medium) {
    bool slave_heard_master = false;
    if (cur_ && cur_->slots_left > 0) {
        Party peer = cur_->from == Role::Master ? Party::BtSlave : Party::BtMaster;
        auto o = medium.outcome(cur_tx_id_, peer);
        if (o && *o == Outcome::Collided) cur_->failed = true;
        if (--cur_->slots_left == 0) {
            report_.completed = true;
            report_.delivered = !cur_->failed;
            classifier_.record_attempt(cur_->channel, slot_, !cur_->failed);
            if (!cur_->failed) {
                slave_heard_master = cur_->from == Role::Master;
                on_delivered(*cur_);
            } else {
                on_lost(*cur_);
            }
        }
    }

    if (cfg_.lmp_rate_hz > 0 && rng_.chance(cfg_.lmp_rate_hz / 1600.0)) {
        uint8_t params[2] = {static_cast<uint8_t>(rng_.next()), static_cast<uint8_t>(rng_.next())};
        master_q_.push_back({make_lmp_packet(lmp::kSupervision, master_.addr.lap, params), slot_, 0, std::nullopt});
    }

    if (classifier_.enabled()) {
        scan_channel_ = (scan_channel_ + 1) % kNumChannels;
        classifier_.record_energy(scan_channel_, slot_, medium.energy_dbm(scan_channel_, Party::BtMaster, Party::BtSlave));
        if (!afh_in_flight_ && !pending_map_) {
            if (auto up = classifier_.tick(master_.afh_map, slot_)) {
                master_q_.push_front({make_lmp_packet(lmp::kSetAfh, master_.addr.lap, {}), slot_, 0, up->map});
                afh_in_flight_ = true;
            }
        }
    }

    sync_error_us_ += (slave_.drift_ppm - master_.drift_ppm) * 1e-6 * static_cast<double>(kSlotUs);
    if (slave_heard_master) {
        sync_error_us_ = (rng_.uniform() * 2.0 - 1.0) * cfg_.jitter_us;
        stats_.max_sync_error_after_rx_us = std::max(stats_.max_sync_error_after_rx_us, std::abs(sync_error_us_));
    }
    stats_.max_sync_error_us = std::max(stats_.max_sync_error_us, std::abs(sync_error_us_));

    master_.clock.advance_slot();
    slave_.clock.advance_slot();
    ++slot_;
    ++stats_.slots;
    return report_;
}

SlotReport Piconet::step_slot(Medium& medium) {
    medium.begin_slot(slot_);
    begin_slot(medium);
    medium.resolve();
    return end_slot(medium);
}

}  // namespace simbt
