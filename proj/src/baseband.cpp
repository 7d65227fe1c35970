#include "simbt/baseband.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>

namespace simbt {

uint64_t BdAddr::to_u64() const {
    return (uint64_t{nap} << 32) | (uint64_t{uap} << 24) | (lap & 0xffffff);
}

BdAddr BdAddr::from_u64(uint64_t v) {
    return BdAddr{static_cast<uint16_t>(v >> 32), static_cast<uint8_t>(v >> 24),
                  static_cast<uint32_t>(v & 0xffffff)};
}

std::optional<BdAddr> BdAddr::parse(std::string_view text) {
    std::string digits;
    for (char c : text) {
        if (c == ':' || c == '-') continue;
        if (!std::isxdigit(static_cast<unsigned char>(c))) return std::nullopt;
        digits.push_back(c);
    }
    if (digits.size() != 12) return std::nullopt;
    return from_u64(std::stoull(digits, nullptr, 16));
}

std::string BdAddr::to_string() const {
    char buf[32];
    uint64_t v = to_u64();
    std::snprintf(buf, sizeof buf, "%02X:%02X:%02X:%02X:%02X:%02X",
                  unsigned((v >> 40) & 0xff), unsigned((v >> 32) & 0xff), unsigned((v >> 24) & 0xff),
                  unsigned((v >> 16) & 0xff), unsigned((v >> 8) & 0xff), unsigned(v & 0xff));
    return buf;
}

std::optional<AfhMap> AfhMap::from_entries(const std::array<AfhClass, kNumChannels>& entries) {
    AfhMap m;
    m.entries_ = entries;
    m.n_ = 0;
    for (AfhClass c : entries)
        if (c != AfhClass::Bad) ++m.n_;
    if (m.n_ < kMinUsableChannels) return std::nullopt;
    return m;
}

std::optional<AfhMap> AfhMap::with_bad(std::span<const int> bad) {
    std::array<AfhClass, kNumChannels> e;
    e.fill(AfhClass::Unknown);
    for (int ch : bad) {
        if (ch < 0 || ch >= kNumChannels) return std::nullopt;
        e[ch] = AfhClass::Bad;
    }
    return from_entries(e);
}

bool AfhMap::set(int ch, AfhClass c) {
    if (ch < 0 || ch >= kNumChannels) return false;
    AfhClass old = entries_[ch];
    int n = n_ - (old != AfhClass::Bad) + (c != AfhClass::Bad);
    if (n < kMinUsableChannels) return false;
    entries_[ch] = c;
    n_ = n;
    return true;
}

std::vector<int> AfhMap::usable_channels() const {
    std::vector<int> out;
    for (int ch = 0; ch < kNumChannels; ++ch)
        if (usable(ch)) out.push_back(ch);
    return out;
}

std::vector<int> AfhMap::bad_channels() const {
    std::vector<int> out;
    for (int ch = 0; ch < kNumChannels; ++ch)
        if (!usable(ch)) out.push_back(ch);
    return out;
}

std::string AfhMap::bad_bits() const {
    std::string s(kNumChannels, '0');
    for (int ch = 0; ch < kNumChannels; ++ch)
        if (!usable(ch)) s[ch] = '1';
    return s;
}

const char* packet_type_name(PacketType t) {
    switch (t) {
        case PacketType::Id: return "ID";
        case PacketType::Fhs: return "FHS";
        case PacketType::Poll: return "POLL";
        case PacketType::Null: return "NULL";
        case PacketType::Dm1: return "DM1";
        case PacketType::Dh1: return "DH1";
        case PacketType::Dh3: return "DH3";
        case PacketType::Dh5: return "DH5";
        case PacketType::Lmp: return "LMP";
        case PacketType::Pairing: return "PAIRING";
    }
    return "?";
}

std::optional<PacketType> packet_type_from_name(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(PacketType::Pairing); ++i) {
        auto t = static_cast<PacketType>(i);
        if (name == packet_type_name(t)) return t;
    }
    return std::nullopt;
}

bool packet_has_payload(PacketType t) {
    return t != PacketType::Id && t != PacketType::Poll && t != PacketType::Null;
}

uint8_t packet_slots(PacketType t) {
    if (t == PacketType::Dh3) return 3;
    if (t == PacketType::Dh5) return 5;
    return 1;
}

size_t packet_max_body(PacketType t) {
    switch (t) {
        case PacketType::Fhs: return 10;
        case PacketType::Dm1:
        case PacketType::Lmp:
        case PacketType::Pairing: return 17;
        case PacketType::Dh1: return 27;
        case PacketType::Dh3: return 183;
        case PacketType::Dh5: return 339;
        default: return 0;
    }
}

uint8_t pairing_opcode(PairingKind k) {
    switch (k) {
        case PairingKind::InRand: return lmp::kInRand;
        case PairingKind::CombKey: return lmp::kCombKey;
        case PairingKind::AuRand: return lmp::kAuRand;
        case PairingKind::Sres: return lmp::kSres;
    }
    return 0;
}

static std::optional<PairingKind> pairing_kind_for(uint8_t opcode) {
    switch (opcode) {
        case lmp::kInRand: return PairingKind::InRand;
        case lmp::kCombKey: return PairingKind::CombKey;
        case lmp::kAuRand: return PairingKind::AuRand;
        case lmp::kSres: return PairingKind::Sres;
        default: return std::nullopt;
    }
}

static size_t pairing_value_bytes(PairingKind k) { return k == PairingKind::Sres ? 4 : 16; }

BasebandPacket make_packet(PacketType t, uint32_t lap, std::vector<uint8_t> payload) {
    BasebandPacket p;
    p.sync_lap = lap & 0xffffff;
    p.ptype = t;
    p.slots = packet_slots(t);
    p.payload = std::move(payload);
    bool acl = t == PacketType::Dm1 || t == PacketType::Dh1 || t == PacketType::Dh3 ||
               t == PacketType::Dh5;
    p.payload_class = acl ? PayloadClass::Data : PayloadClass::Control;
    return p;
}

BasebandPacket make_pairing_packet(PairingKind k, uint32_t lap, std::span<const uint8_t> value) {
    std::vector<uint8_t> body;
    body.push_back(static_cast<uint8_t>(pairing_opcode(k) << 1));
    body.insert(body.end(), value.begin(), value.end());
    BasebandPacket p = make_packet(PacketType::Pairing, lap, std::move(body));
    p.pairing_kind = k;
    return p;
}

BasebandPacket make_lmp_packet(uint8_t opcode, uint32_t lap, std::span<const uint8_t> params) {
    std::vector<uint8_t> body;
    body.push_back(static_cast<uint8_t>(opcode << 1));
    body.insert(body.end(), params.begin(), params.end());
    return make_packet(PacketType::Lmp, lap, std::move(body));
}

bool packet_valid(const BasebandPacket& p, std::string* why) {
    auto fail = [&](const char* msg) {
        if (why) *why = msg;
        return false;
    };
    if (p.slots != packet_slots(p.ptype)) return fail("slot count does not match type");
    if (p.lt_addr > 7) return fail("lt_addr exceeds 3 bits");
    if (p.sync_lap > 0xffffff) return fail("lap exceeds 24 bits");
    bool has = packet_has_payload(p.ptype);
    if (!has && !p.payload.empty()) return fail("type carries no payload");
    if (has && p.payload.empty()) return fail("type requires a payload");
    if (p.payload.size() > packet_max_body(p.ptype)) return fail("payload too long for type");
    bool edr_type = p.ptype == PacketType::Dh1 || p.ptype == PacketType::Dh3 || p.ptype == PacketType::Dh5;
    if (p.modulation == Modulation::Edr && !edr_type) return fail("EDR only applies to DH1/DH3/DH5");
    bool acl = p.ptype == PacketType::Dm1 || edr_type;
    if (!acl && p.payload_class != PayloadClass::Control) return fail("only ACL types carry Data class");
    if (p.ptype == PacketType::Fhs && p.payload.size() != 10) return fail("FHS body is 10 bytes");
    if (p.ptype == PacketType::Pairing) {
        if (p.payload.empty() || (p.payload[0] >> 1) != pairing_opcode(p.pairing_kind))
            return fail("pairing opcode does not match kind");
        if (p.payload.size() != 1 + pairing_value_bytes(p.pairing_kind))
            return fail("pairing value size");
    } else if (p.pairing_kind != PairingKind::InRand) {
        return fail("pairing kind set on non-pairing packet");
    }
    if (p.ptype == PacketType::Lmp && pairing_kind_for(p.payload[0] >> 1))
        return fail("pairing opcodes must use the Pairing type");
    return true;
}

uint8_t type_code(const BasebandPacket& p) {
    switch (p.ptype) {
        case PacketType::Null: return 0;
        case PacketType::Poll: return 1;
        case PacketType::Fhs: return 2;
        case PacketType::Dm1:
        case PacketType::Lmp:
        case PacketType::Pairing: return 3;
        case PacketType::Dh1: return 4;
        case PacketType::Dh3: return 11;
        case PacketType::Dh5: return 15;
        case PacketType::Id: return 0;
    }
    return 0;
}

uint16_t header_bits(const BasebandPacket& p) {
    return static_cast<uint16_t>((p.lt_addr & 7) | (type_code(p) << 3) | (p.flow << 7) | (p.arqn << 8) |
                                 (p.seqn << 9));
}

WhiteningWord derive_whitening_word(uint32_t clock6) {
    return WhiteningWord{static_cast<uint8_t>(0x40 | (clock6 & 0x3f))};
}

Bits whitening_keystream(WhiteningWord word, size_t n) {
    Bits out(n);
    unsigned r = word.bits & 0x7f;
    for (size_t i = 0; i < n; ++i) {
        unsigned z = (r >> 6) & 1;
        out[i] = static_cast<uint8_t>(z);
        r = ((r << 1) & 0x7f) | z;
        if (z) r ^= 0x10;
    }
    return out;
}

Bits whiten(const Bits& data, WhiteningWord word) {
    Bits ks = whitening_keystream(word, data.size());
    for (size_t i = 0; i < data.size(); ++i) ks[i] ^= data[i] & 1;
    return ks;
}

uint8_t compute_hec(uint16_t header10, uint8_t uap) {
    unsigned reg = uap;
    for (int i = 0; i < 10; ++i) {
        unsigned fb = ((header10 >> i) & 1) ^ ((reg >> 7) & 1);
        reg = (reg << 1) & 0xff;
        if (fb) reg ^= 0xa7;
    }
    return static_cast<uint8_t>(reg);
}

uint8_t uap_from_hec(uint16_t header10, uint8_t hec) {
    unsigned reg = hec;
    for (int i = 9; i >= 0; --i) {
        unsigned fb = reg & 1;
        if (fb) reg ^= 0xa7;
        reg >>= 1;
        reg |= (fb ^ ((header10 >> i) & 1)) << 7;
    }
    return static_cast<uint8_t>(reg);
}

uint16_t crc_init(uint8_t uap) { return static_cast<uint16_t>(uap << 8); }

uint16_t compute_crc(std::span<const uint8_t> payload, uint8_t uap) {
    unsigned reg = crc_init(uap);
    for (uint8_t byte : payload) {
        for (int i = 0; i < 8; ++i) {
            unsigned fb = ((byte >> i) & 1) ^ ((reg >> 15) & 1);
            reg = (reg << 1) & 0xffff;
            if (fb) reg ^= 0x1021;
        }
    }
    return static_cast<uint16_t>(reg);
}

namespace {

struct CrcTables {
    std::array<uint16_t, 256> t{};
    std::array<uint8_t, 256> rev{};
    CrcTables() {
        for (unsigned i = 0; i < 256; ++i) {
            unsigned reg = i << 8;
            for (int b = 0; b < 8; ++b) reg = (reg & 0x8000) ? ((reg << 1) ^ 0x1021) : (reg << 1);
            t[i] = static_cast<uint16_t>(reg);
            unsigned r = 0;
            for (int b = 0; b < 8; ++b)
                if (i & (1u << b)) r |= 0x80u >> b;
            rev[i] = static_cast<uint8_t>(r);
        }
    }
};

const CrcTables& crc_tables() {
    static const CrcTables tables;
    return tables;
}

void push_bits(Bits& out, uint64_t value, int count) {
    for (int i = 0; i < count; ++i) out.push_back(static_cast<uint8_t>((value >> i) & 1));
}

uint64_t read_bits(const Bits& in, size_t offset, int count) {
    uint64_t v = 0;
    for (int i = 0; i < count; ++i) v |= uint64_t{in[offset + i] & 1u} << i;
    return v;
}

// Wire payload region: optional 2-byte payload header, body, then CRC.
std::vector<uint8_t> payload_region(const BasebandPacket& p) {
    std::vector<uint8_t> bytes;
    if (p.ptype != PacketType::Fhs) {
        unsigned llid = (p.ptype == PacketType::Lmp || p.ptype == PacketType::Pairing) ? 3 : 2;
        unsigned ctl = p.payload_class == PayloadClass::Control ? 1 : 0;
        unsigned ph = llid | (1u << 2) | (static_cast<unsigned>(p.payload.size()) << 3) | (ctl << 13);
        bytes.push_back(static_cast<uint8_t>(ph & 0xff));
        bytes.push_back(static_cast<uint8_t>(ph >> 8));
    }
    bytes.insert(bytes.end(), p.payload.begin(), p.payload.end());
    return bytes;
}

}  // namespace

uint16_t crc_bytes_fast(std::span<const uint8_t> bytes, uint16_t reg) {
    const CrcTables& ct = crc_tables();
    unsigned r = reg;
    for (uint8_t b : bytes) r = ((r << 8) ^ ct.t[((r >> 8) ^ ct.rev[b]) & 0xff]) & 0xffff;
    return static_cast<uint16_t>(r);
}

BasebandPacket with_checks(BasebandPacket p, uint8_t uap) {
    if (p.ptype == PacketType::Id) {
        p.hec = 0;
        p.crc = 0;
        return p;
    }
    p.hec = compute_hec(header_bits(p), uap);
    p.crc = packet_has_payload(p.ptype) ? compute_crc(payload_region(p), uap) : 0;
    return p;
}

WireFrame build_wire(const BasebandPacket& p, uint32_t clock6, uint8_t uap) {
    WireFrame f;
    f.lap = p.sync_lap & 0xffffff;
    f.modulation = p.modulation;
    f.slots = p.slots;
    if (p.ptype == PacketType::Id) return f;
    BasebandPacket q = with_checks(p, uap);
    Bits raw;
    push_bits(raw, header_bits(q), 10);
    push_bits(raw, q.hec, 8);
    if (packet_has_payload(q.ptype)) {
        for (uint8_t b : payload_region(q)) push_bits(raw, b, 8);
        push_bits(raw, q.crc, 16);
    }
    f.bits = whiten(raw, derive_whitening_word(clock6));
    return f;
}

const char* parse_status_name(ParseStatus s) {
    switch (s) {
        case ParseStatus::Decoded: return "Decoded";
        case ParseStatus::HecMismatch: return "HecMismatch";
        case ParseStatus::CrcMismatch: return "CrcMismatch";
        case ParseStatus::Malformed: return "Malformed";
        case ParseStatus::Undecodable: return "Undecodable";
    }
    return "?";
}

uint16_t dewhitened_header(const WireFrame& frame, uint32_t clock6, uint8_t* hec_out) {
    Bits ks = whitening_keystream(derive_whitening_word(clock6), 18);
    uint32_t v = 0;
    for (int i = 0; i < 18 && i < static_cast<int>(frame.bits.size()); ++i)
        v |= uint32_t((frame.bits[i] ^ ks[i]) & 1) << i;
    if (hec_out) *hec_out = static_cast<uint8_t>(v >> 10);
    return static_cast<uint16_t>(v & 0x3ff);
}

ParseResult parse_wire(const WireFrame& frame, uint32_t clock6_guess, uint8_t uap_guess, Observer observer) {
    ParseResult r;
    BasebandPacket& p = r.packet;
    p.sync_lap = frame.lap;
    if (frame.bits.empty()) {
        p = make_packet(PacketType::Id, frame.lap);
        r.status = ParseStatus::Decoded;
        return r;
    }
    if (frame.bits.size() < 18) {
        r.status = ParseStatus::Malformed;
        return r;
    }
    Bits bits = whiten(frame.bits, derive_whitening_word(clock6_guess));
    uint16_t header = static_cast<uint16_t>(read_bits(bits, 0, 10));
    uint8_t hec = static_cast<uint8_t>(read_bits(bits, 10, 8));
    if (compute_hec(header, uap_guess) != hec) {
        r.status = ParseStatus::HecMismatch;
        return r;
    }
    p.hec = hec;
    p.lt_addr = header & 7;
    unsigned code = (header >> 3) & 0xf;
    p.flow = (header >> 7) & 1;
    p.arqn = (header >> 8) & 1;
    p.seqn = (header >> 9) & 1;
    p.payload_class = PayloadClass::Control;
    switch (code) {
        case 0: p.ptype = PacketType::Null; break;
        case 1: p.ptype = PacketType::Poll; break;
        case 2: p.ptype = PacketType::Fhs; break;
        case 3: p.ptype = PacketType::Dm1; break;
        case 4: p.ptype = PacketType::Dh1; break;
        case 11: p.ptype = PacketType::Dh3; break;
        case 15: p.ptype = PacketType::Dh5; break;
        default: r.status = ParseStatus::Malformed; return r;
    }
    p.slots = packet_slots(p.ptype);
    p.modulation = frame.modulation;
    if (!packet_has_payload(p.ptype)) {
        r.status = bits.size() == 18 ? ParseStatus::Decoded : ParseStatus::Malformed;
        p.modulation = Modulation::BasicRate;
        return r;
    }
    if (frame.modulation == Modulation::Edr && observer == Observer::ThirdParty) {
        r.status = ParseStatus::Undecodable;
        return r;
    }
    size_t region_bits = bits.size() - 18;
    if (region_bits % 8 != 0 || region_bits < 24) {
        r.status = ParseStatus::Malformed;
        return r;
    }
    std::vector<uint8_t> bytes(region_bits / 8);
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<uint8_t>(read_bits(bits, 18 + 8 * i, 8));
    uint16_t crc_rx = static_cast<uint16_t>(bytes[bytes.size() - 2] | (bytes.back() << 8));
    std::span<const uint8_t> covered(bytes.data(), bytes.size() - 2);
    if (compute_crc(covered, uap_guess) != crc_rx) {
        r.status = ParseStatus::CrcMismatch;
        return r;
    }
    p.crc = crc_rx;
    r.status = ParseStatus::Malformed;
    if (p.ptype == PacketType::Fhs) {
        if (covered.size() != 10) return r;
        p.payload.assign(covered.begin(), covered.end());
        p.modulation = Modulation::BasicRate;
    } else {
        if (covered.size() < 3) return r;
        unsigned ph = covered[0] | (covered[1] << 8);
        unsigned llid = ph & 3;
        size_t len = (ph >> 3) & 0x3ff;
        unsigned ctl = (ph >> 13) & 1;
        if (len + 2 != covered.size() || len == 0) return r;
        p.payload.assign(covered.begin() + 2, covered.end());
        p.payload_class = ctl ? PayloadClass::Control : PayloadClass::Data;
        if (llid == 3) {
            if (p.ptype != PacketType::Dm1 || !ctl) return r;
            if (auto k = pairing_kind_for(p.payload[0] >> 1)) {
                p.ptype = PacketType::Pairing;
                p.pairing_kind = *k;
            } else {
                p.ptype = PacketType::Lmp;
            }
        } else if (llid != 2) {
            return r;
        }
    }
    if (!packet_valid(p)) return r;
    r.status = ParseStatus::Decoded;
    return r;
}

std::vector<uint8_t> fhs_body(const BdAddr& addr, uint32_t clock27) {
    clock27 &= kClock27Mask;
    return {static_cast<uint8_t>(addr.lap), static_cast<uint8_t>(addr.lap >> 8), static_cast<uint8_t>(addr.lap >> 16),
            addr.uap, static_cast<uint8_t>(addr.nap), static_cast<uint8_t>(addr.nap >> 8),
            static_cast<uint8_t>(clock27), static_cast<uint8_t>(clock27 >> 8), static_cast<uint8_t>(clock27 >> 16),
            static_cast<uint8_t>(clock27 >> 24)};
}

std::optional<std::pair<BdAddr, uint32_t>> parse_fhs_body(std::span<const uint8_t> b) {
    if (b.size() != 10) return std::nullopt;
    BdAddr a;
    a.lap = uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16;
    a.uap = b[3];
    a.nap = static_cast<uint16_t>(b[4] | b[5] << 8);
    uint32_t clk = uint32_t(b[6]) | uint32_t(b[7]) << 8 | uint32_t(b[8]) << 16 | uint32_t(b[9]) << 24;
    if (clk > kClock27Mask) return std::nullopt;
    return std::make_pair(a, clk);
}

}  // namespace simbt
