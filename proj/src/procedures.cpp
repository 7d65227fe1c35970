#include <algorithm>

#include "simbt/piconet.hpp"

namespace simbt {

const char* page_error_name(PageError e) {
    switch (e) {
        case PageError::None: return "none";
        case PageError::Timeout: return "timeout";
        case PageError::NotConnectable: return "not-connectable";
    }
    return "?";
}

namespace {

bool in_scan_window(const Device& d) {
    if (d.scan_window_slots >= d.scan_interval_slots) return true;
    return static_cast<int>(d.clock.clock27() % static_cast<uint32_t>(d.scan_interval_slots)) < d.scan_window_slots;
}

Transmission bt_tx(Party src, int channel, Party rx, const WireFrame* frame) {
    Transmission t;
    t.source = src;
    t.channel_lo = t.channel_hi = channel;
    t.receivers = {rx, Party::Sniffer, Party::Scout};
    t.frame = frame;
    return t;
}

bool heard(const Medium& m, int tx_id, Party rx) {
    auto o = m.outcome(tx_id, rx);
    return o && *o != Outcome::Collided;
}

}  // namespace

std::vector<FhsResponse> run_inquiry(Device& inquirer, std::vector<Device*> in_range, Medium& medium, uint64_t seed,
                                     const InquiryOptions& opt) {
    Rng rng(seed);
    struct Scanner {
        Device* dev;
        bool done = false;
        int64_t listen_from = -1;  // continuous listening after a backoff
        int respond_channel = -1;  // FHS due next slot
        WireFrame fhs;
    };
    std::vector<Scanner> scanners;
    for (Device* d : in_range)
        if (d && d->discoverable) scanners.push_back(Scanner{d, false, -1, -1, {}});

    std::vector<FhsResponse> out;
    WireFrame id_frame{kGiacLap, {}, Modulation::BasicRate, 1};
    const int64_t train_slots = 16LL * opt.train_repetitions;

    for (int64_t slot = 0; slot < opt.timeout_slots; ++slot) {
        if (!scanners.empty() && std::all_of(scanners.begin(), scanners.end(), [](auto& s) { return s.done; })) break;
        medium.begin_slot(slot);
        bool tx_slot = inquirer.clock.clock1() == 0;
        InquiryTrain train = (slot / train_slots) % 2 == 0 ? InquiryTrain::A : InquiryTrain::B;
        int ids[2] = {-1, -1};
        int id_ch[2] = {-1, -1};
        std::vector<std::pair<Scanner*, int>> fhs_tx;
        if (tx_slot) {
            for (int h = 0; h < 2; ++h) {
                ClockState c = inquirer.clock;
                c.tick(h);
                id_ch[h] = inquiry_hop(c, train);
                ids[h] = medium.add(bt_tx(Party::BtMaster, id_ch[h], Party::BtSlave, &id_frame));
            }
        } else {
            for (Scanner& s : scanners) {
                if (s.done || s.respond_channel < 0) continue;
                s.fhs = build_wire(make_packet(PacketType::Fhs, s.dev->addr.lap, fhs_body(s.dev->addr, s.dev->clock.clock27())),
                                   s.dev->clock.clock6(), s.dev->addr.uap);
                fhs_tx.push_back({&s, medium.add(bt_tx(Party::BtSlave, s.respond_channel, Party::BtMaster, &s.fhs))});
            }
        }
        medium.resolve();

        if (tx_slot) {
            for (Scanner& s : scanners) {
                if (s.done) continue;
                bool listening = s.listen_from >= 0 ? slot >= s.listen_from : in_scan_window(*s.dev);
                if (!listening) continue;
                int ch = inquiry_scan_channel(s.dev->clock);
                for (int h = 0; h < 2; ++h) {
                    if (id_ch[h] == ch && heard(medium, ids[h], Party::BtSlave)) {
                        s.respond_channel = ch;
                        break;
                    }
                }
            }
        } else {
            for (auto& [s, id] : fhs_tx) {
                if (heard(medium, id, Party::BtMaster)) {
                    s->done = true;
                    out.push_back({s->dev->addr, s->dev->clock.clock27(), slot, s->respond_channel});
                } else {
                    s->listen_from = slot + 1 + rng.range(0, opt.max_backoff_slots);
                }
                s->respond_channel = -1;
            }
        }
        inquirer.clock.advance_slot();
        for (Scanner& s : scanners) s.dev->clock.advance_slot();
    }
    return out;
}

ConnectionResult run_page(Device& initiator, Device& target, ClockState clock_estimate, Medium& medium,
                          const PageOptions& opt) {
    ConnectionResult res;
    if (!target.connectable) {
        res.error = PageError::NotConnectable;
        return res;
    }
    const HopAddress target_hop = HopAddress::from(target.addr);
    // Pager's estimate of the target clock tracks its own clock at a fixed offset.
    const uint32_t est_offset = (clock_estimate.raw - initiator.clock.raw) & kClockMask;
    auto estimate = [&](uint32_t extra_ticks) {
        return ClockState{(initiator.clock.raw + est_offset + extra_ticks) & kClockMask};
    };
    auto advance = [&] {
        initiator.clock.advance_slot();
        target.clock.advance_slot();
    };

    // Start the train at the pager's transmit slot whose first ID lands on
    // the estimated scan channel.
    for (int i = 0; i < 64; ++i) {
        if (initiator.clock.clock1() == 0 && initiator.clock.clock0() == 0) {
            ClockState e0 = estimate(0), e1 = estimate(1);
            int scan = page_scan_channel(e0, target_hop);
            if (page_hop(e0, target_hop) == scan || page_hop(e1, target_hop) == scan) break;
        }
        advance();
    }

    WireFrame id_frame{target.addr.lap, {}, Modulation::BasicRate, 1};
    WireFrame fhs_frame, poll_frame, null_frame;
    enum class Step { Paging, SlaveId, MasterFhs, SlaveAck, Poll, Null } step = Step::Paging;
    int hit_channel = -1;
    const int64_t train_slots = 16LL * 128;
    const HopSelector link(HopKernel{}, HopAddress::from(initiator.addr));

    for (int64_t slot = 0; slot < opt.timeout_slots; ++slot) {
        medium.begin_slot(slot);
        bool tx_slot = initiator.clock.clock1() == 0;
        int ids[2] = {-1, -1};
        int id_ch[2] = {-1, -1};
        int tx = -1;
        Party rx = Party::BtSlave;
        switch (step) {
            case Step::Paging:
                if (tx_slot) {
                    InquiryTrain train = (slot / train_slots) % 2 == 0 ? InquiryTrain::A : InquiryTrain::B;
                    for (int h = 0; h < 2; ++h) {
                        id_ch[h] = page_hop(estimate(static_cast<uint32_t>(h)), target_hop, train);
                        ids[h] = medium.add(bt_tx(Party::BtMaster, id_ch[h], Party::BtSlave, &id_frame));
                    }
                }
                break;
            case Step::SlaveId:
            case Step::SlaveAck:
                tx = medium.add(bt_tx(Party::BtSlave, hit_channel, Party::BtMaster, &id_frame));
                rx = Party::BtMaster;
                break;
            case Step::MasterFhs:
                fhs_frame = build_wire(make_packet(PacketType::Fhs, target.addr.lap,
                                                   fhs_body(initiator.addr, initiator.clock.clock27())),
                                       target.clock.clock6(), target.addr.uap);
                tx = medium.add(bt_tx(Party::BtMaster, hit_channel, Party::BtSlave, &fhs_frame));
                break;
            case Step::Poll: {
                poll_frame = build_wire(make_packet(PacketType::Poll, initiator.addr.lap), initiator.clock.clock6(),
                                        initiator.addr.uap);
                tx = medium.add(bt_tx(Party::BtMaster, link.basic(initiator.clock.clock27()), Party::BtSlave, &poll_frame));
                break;
            }
            case Step::Null: {
                null_frame = build_wire(make_packet(PacketType::Null, initiator.addr.lap), initiator.clock.clock6(),
                                        initiator.addr.uap);
                tx = medium.add(bt_tx(Party::BtSlave, link.basic(initiator.clock.clock27()), Party::BtMaster, &null_frame));
                rx = Party::BtMaster;
                break;
            }
        }
        medium.resolve();

        if (step == Step::Paging) {
            if (tx_slot && in_scan_window(target)) {
                int ch = page_scan_channel(target.clock, HopAddress::from(target.addr));
                for (int h = 0; h < 2; ++h) {
                    if (id_ch[h] == ch && heard(medium, ids[h], Party::BtSlave)) {
                        hit_channel = ch;
                        if (res.first_hit_slot < 0) res.first_hit_slot = slot;
                        step = Step::SlaveId;
                        break;
                    }
                }
            }
        } else if (!heard(medium, tx, rx)) {
            step = Step::Paging;
        } else {
            switch (step) {
                case Step::SlaveId: step = Step::MasterFhs; break;
                case Step::MasterFhs: step = Step::SlaveAck; break;
                case Step::SlaveAck: step = Step::Poll; break;
                case Step::Poll: step = Step::Null; break;
                case Step::Null:
                    advance();
                    res.latency_slots = slot + 1;
                    res.slave_offset_ticks =
                        static_cast<int64_t>((initiator.clock.raw - target.clock.raw) & kClockMask);
                    if (res.slave_offset_ticks >= (int64_t{1} << 27)) res.slave_offset_ticks -= int64_t{1} << 28;
                    initiator.role = Role::Master;
                    initiator.clock_offset_to_master = 0;
                    target.role = Role::Slave;
                    target.clock_offset_to_master = res.slave_offset_ticks;
                    return res;
                default: break;
            }
        }
        advance();
    }
    res.error = PageError::Timeout;
    return res;
}

PairingSession run_legacy_pairing(Device& master, Device& slave, std::string_view pin, Medium& medium, uint64_t seed,
                                  const PairingRunOptions& opt) {
    PiconetConfig cfg = opt.piconet;
    cfg.traffic.kind = TrafficKind::PairingOnly;
    Piconet net(master, slave, cfg, seed);
    std::string pin_b = slave.fixed_pin.value_or(std::string(pin));
    net.start_pairing(std::string(pin), pin_b);
    for (int64_t i = 0; i < opt.timeout_slots && !net.pairing()->done; ++i) {
        medium.begin_slot(net.slot());
        net.begin_slot(medium);
        medium.resolve();
        SlotReport r = net.end_slot(medium);
        if (opt.observer) opt.observer(medium, r);
    }
    master = net.master();
    slave = net.slave();
    return *net.pairing();
}

}  // namespace simbt
