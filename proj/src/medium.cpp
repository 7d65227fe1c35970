#include "simbt/medium.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace simbt {

const char* party_name(Party p) {
    switch (p) {
        case Party::BtMaster: return "bt-master";
        case Party::BtSlave: return "bt-slave";
        case Party::WifiTx: return "wifi-tx";
        case Party::WifiRx: return "wifi-rx";
        case Party::Sniffer: return "sniffer";
        case Party::Scout: return "scout";
    }
    return "?";
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Clean: return "Clean";
        case Outcome::Collided: return "Collided";
        case Outcome::Captured: return "Captured";
    }
    return "?";
}

LinkBudget::LinkBudget() {
    for (auto& row : dbm) row.fill(kNoiseFloorDbm);
    for (Party bt : {Party::BtMaster, Party::BtSlave}) {
        set(bt, Party::Sniffer, -70);
        set(bt, Party::Scout, -70);
        set(bt, Party::WifiRx, -65);
        set(bt, Party::WifiTx, -65);
    }
    set(Party::BtMaster, Party::BtSlave, -60);
    set(Party::BtSlave, Party::BtMaster, -60);
    set(Party::WifiTx, Party::BtMaster, -72);
    set(Party::WifiTx, Party::BtSlave, -72);
    set(Party::WifiTx, Party::WifiRx, -65);
    set(Party::WifiTx, Party::Sniffer, -70);
    set(Party::WifiTx, Party::Scout, -70);
}

std::vector<Delivery> deliver_slot(std::span<const Transmission> txs, const LinkBudget& budget, double capture_db) {
    std::vector<Delivery> out;
    for (const Transmission& tx : txs) {
        for (Party rx : tx.receivers) {
            double strongest = -1e9;
            bool interfered = false;
            for (const Transmission& other : txs) {
                if (other.id == tx.id || other.source == rx) continue;
                if (!other.overlaps(tx.channel_lo, tx.channel_hi)) continue;
                interfered = true;
                strongest = std::max(strongest, budget.rssi(other.source, rx));
            }
            Outcome o = Outcome::Clean;
            if (interfered)
                o = budget.rssi(tx.source, rx) >= strongest + capture_db ? Outcome::Captured : Outcome::Collided;
            out.push_back({tx.id, rx, o});
        }
    }
    return out;
}

Medium::Medium(MediumConfig cfg) : cfg_(std::move(cfg)) {}

void Medium::begin_slot(int64_t slot) {
    slot_ = slot;
    txs_.clear();
    deliveries_.clear();
    resolved_ = false;
}

int Medium::add(Transmission tx) {
    if (tx.source == Party::Sniffer || tx.source == Party::Scout)
        throw std::logic_error("receive-only radio attempted to transmit");
    tx.id = static_cast<int>(txs_.size());
    ++sent_[int(tx.source)];
    expected_ += tx.receivers.size();
    txs_.push_back(std::move(tx));
    return txs_.back().id;
}

void Medium::resolve() {
    deliveries_ = deliver_slot(txs_, cfg_.budget, cfg_.capture_db);
    for (const Delivery& d : deliveries_) {
        Tally& t = tallies_[int(d.receiver)];
        if (d.outcome == Outcome::Clean) ++t.clean;
        else if (d.outcome == Outcome::Collided) ++t.collided;
        else ++t.captured;
    }
    resolved_ = true;
}

std::optional<Outcome> Medium::outcome(int tx_id, Party receiver) const {
    for (const Delivery& d : deliveries_)
        if (d.tx_id == tx_id && d.receiver == receiver) return d.outcome;
    return std::nullopt;
}

double Medium::energy_dbm(int channel, Party rx, std::optional<Party> exclude) const {
    double e = kNoiseFloorDbm;
    for (const Transmission& tx : txs_) {
        if (tx.source == rx || (exclude && tx.source == *exclude)) continue;
        if (!tx.overlaps(channel, channel)) continue;
        e = std::max(e, cfg_.budget.rssi(tx.source, rx));
    }
    return e;
}

const Transmission* Medium::bluetooth_on(int channel) const {
    for (const Transmission& tx : txs_)
        if (!tx.is_wifi() && tx.channel_lo == channel) return &tx;
    return nullptr;
}

std::string SpectrumTrace::to_text() const {
    std::string out;
    for (size_t i = 0; i < rows.size(); ++i) {
        out += std::to_string(first_second + static_cast<int64_t>(i));
        for (int v : rows[i]) {
            out += ' ';
            out += std::to_string(v);
        }
        out += '\n';
    }
    return out;
}

int SpectrumRecorder::sample_slot(int channel, int64_t second) {
    return static_cast<int>(channel * 20 + (second * 7) % 20);
}

void SpectrumRecorder::observe(const Medium& m) {
    int64_t slot = m.slot();
    int64_t sec = slot / 1600;
    int s_in = static_cast<int>(slot % 1600);
    while (static_cast<int64_t>(trace_.rows.size()) <= sec) {
        std::array<int, kNumChannels> row;
        row.fill(static_cast<int>(kNoiseFloorDbm));
        trace_.rows.push_back(row);
    }
    int k = static_cast<int>((sec * 7) % 20);
    if (s_in < k || (s_in - k) % 20 != 0) return;
    int ch = (s_in - k) / 20;
    if (ch >= kNumChannels) return;
    double e = std::clamp(m.energy_dbm(ch, monitor_), kNoiseFloorDbm, kStrongDbm);
    trace_.rows[sec][ch] = static_cast<int>(std::lround(e));
}

SpectrumTrace rssi_trace(const SpectrumTrace& trace, int64_t from_s, int64_t to_s) {
    SpectrumTrace out;
    out.first_second = std::max<int64_t>(from_s, trace.first_second);
    for (int64_t s = out.first_second; s < to_s; ++s) {
        int64_t i = s - trace.first_second;
        if (i < 0 || i >= static_cast<int64_t>(trace.rows.size())) break;
        out.rows.push_back(trace.rows[i]);
    }
    return out;
}

}  // namespace simbt
