#include <doctest.h>

#include <set>

#include "simbt/baseband.hpp"
#include "simbt/rng.hpp"

using namespace simbt;

namespace {

// Remainder of a GF(2) polynomial held in a uint64_t, highest power first.
uint64_t poly_mod(uint64_t value, int value_degree, uint64_t divisor, int divisor_degree) {
    for (int i = value_degree; i >= divisor_degree; --i)
        if ((value >> i) & 1) value ^= divisor << (i - divisor_degree);
    return value;
}

// HEC by long division: the UAP preloads the register, which amounts to
// UAP * x^10 + H(x) * x^8 mod g(x) with the first header bit highest.
uint8_t hec_oracle(uint16_t header10, uint8_t uap) {
    uint64_t h = 0;
    for (int i = 0; i < 10; ++i) h = (h << 1) | ((header10 >> i) & 1);
    uint64_t dividend = (uint64_t{uap} << 10) ^ (h << 8);
    return static_cast<uint8_t>(poly_mod(dividend, 17, 0x1a7, 8));
}

// Bit-serial CRC-16-CCITT over an LSB-first bit stream, preloaded with
// UAP in the high byte, evaluated as polynomial division one bit at a time.
uint16_t crc_oracle(const std::vector<uint8_t>& bytes, uint8_t uap) {
    uint32_t rem = uint32_t{uap} << 8;
    for (uint8_t b : bytes) {
        for (int i = 0; i < 8; ++i) {
            uint32_t next = (rem << 1) | 0u;
            uint32_t in = ((b >> i) & 1u) << 16;
            next ^= in;
            if (next & 0x10000) next ^= 0x11021;
            rem = next;
        }
    }
    return static_cast<uint16_t>(rem);
}

std::vector<uint8_t> random_bytes(Rng& rng, size_t n) {
    std::vector<uint8_t> v(n);
    for (auto& b : v) b = static_cast<uint8_t>(rng.next());
    return v;
}

}  // namespace

TEST_CASE("whitening keystream follows x^7+x^4+1") {
    for (uint32_t clk6 = 0; clk6 < 64; ++clk6) {
        WhiteningWord w = derive_whitening_word(clk6);
        CHECK(w.bits == (0x40 | clk6));
        Bits ks = whitening_keystream(w, 400);
        for (size_t n = 0; n + 7 < ks.size(); ++n) REQUIRE(ks[n + 7] == (ks[n + 4] ^ ks[n]));
        // Primitive polynomial: period 127 from every nonzero seed.
        for (size_t n = 0; n + 127 < ks.size(); ++n) REQUIRE(ks[n] == ks[n + 127]);
        bool shorter = false;
        for (int p = 1; p < 127 && !shorter; ++p) {
            if (127 % p) continue;
            shorter = std::equal(ks.begin(), ks.begin() + 200, ks.begin() + p);
        }
        CHECK_FALSE(shorter);
        // The first output bit is the top register bit, always set.
        CHECK(ks[0] == 1);
    }
}

TEST_CASE("whitening word is distinct per clock6 and whiten is an involution") {
    std::set<std::vector<uint8_t>> seen;
    Rng rng(3);
    Bits data(64);
    for (auto& b : data) b = static_cast<uint8_t>(rng.below(2));
    for (uint32_t clk6 = 0; clk6 < 64; ++clk6) {
        seen.insert(whitening_keystream(derive_whitening_word(clk6), 18));
        CHECK(whiten(whiten(data, derive_whitening_word(clk6)), derive_whitening_word(clk6)) == data);
    }
    CHECK(seen.size() == 64);
}

TEST_CASE("HEC matches polynomial long division and inverts to the UAP") {
    for (unsigned uap = 0; uap < 256; ++uap) {
        for (uint16_t h = 0; h < 1024; h += 7) {
            uint8_t hec = compute_hec(h, static_cast<uint8_t>(uap));
            REQUIRE(hec == hec_oracle(h, static_cast<uint8_t>(uap)));
            REQUIRE(uap_from_hec(h, hec) == uap);
        }
    }
}

TEST_CASE("CRC matches a bit-serial division and the table path") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        auto bytes = random_bytes(rng, rng.below(40));
        uint8_t uap = static_cast<uint8_t>(rng.next());
        uint16_t crc = compute_crc(bytes, uap);
        REQUIRE(crc == crc_oracle(bytes, uap));
        REQUIRE(crc == crc_bytes_fast(bytes, crc_init(uap)));
    }
    CHECK(crc_init(0x47) == 0x4700);
    // Empty input leaves the preload untouched.
    CHECK(compute_crc({}, 0x5a) == 0x5a00);
}

TEST_CASE("wire round trip for every Basic Rate type") {
    Rng rng(5);
    const PacketType types[] = {PacketType::Null, PacketType::Poll, PacketType::Dm1,
                                PacketType::Dh1,  PacketType::Dh3,  PacketType::Dh5};
    for (PacketType t : types) {
        for (int i = 0; i < 50; ++i) {
            std::vector<uint8_t> body;
            if (packet_has_payload(t)) body = random_bytes(rng, 1 + rng.below(packet_max_body(t)));
            BasebandPacket p = make_packet(t, static_cast<uint32_t>(rng.below(1u << 24)), body);
            p.lt_addr = static_cast<uint8_t>(rng.below(8));
            REQUIRE(packet_valid(p));
            uint8_t uap = static_cast<uint8_t>(rng.next());
            uint32_t clk6 = static_cast<uint32_t>(rng.below(64));
            WireFrame f = build_wire(p, clk6, uap);
            ParseResult r = parse_wire(f, clk6, uap);
            REQUIRE(r.status == ParseStatus::Decoded);
            CHECK(r.packet.ptype == t);
            CHECK(r.packet.payload == p.payload);
            CHECK(r.packet.lt_addr == p.lt_addr);
            CHECK(r.packet.hec == compute_hec(header_bits(p), uap));
        }
    }
}

TEST_CASE("FHS body round trip") {
    BdAddr a = BdAddr::from_u64(0x0002729c1d2eULL);
    auto body = fhs_body(a, 0x5a5a5a5);
    REQUIRE(body.size() == 10);
    auto back = parse_fhs_body(body);
    REQUIRE(back);
    CHECK(back->first == a);
    CHECK(back->second == 0x5a5a5a5);
    BasebandPacket p = make_packet(PacketType::Fhs, 0x9e8b33u, body);
    WireFrame f = build_wire(p, 9, 0x00);
    CHECK(parse_wire(f, 9, 0x00).status == ParseStatus::Decoded);
}

TEST_CASE("parse statuses") {
    BasebandPacket p = make_packet(PacketType::Dh1, 0x123456, {1, 2, 3});
    WireFrame f = build_wire(p, 17, 0x9c);
    // Every wrong clock with the right UAP fails the HEC or the CRC.
    for (uint32_t c = 0; c < 64; ++c) {
        if (c == 17) continue;
        auto s = parse_wire(f, c, 0x9c).status;
        CHECK(s != ParseStatus::Decoded);
    }
    WireFrame bad_crc = f;
    bad_crc.bits.back() ^= 1;
    CHECK(parse_wire(bad_crc, 17, 0x9c).status == ParseStatus::CrcMismatch);
    WireFrame bad_hec = f;
    bad_hec.bits[12] ^= 1;
    CHECK(parse_wire(bad_hec, 17, 0x9c).status == ParseStatus::HecMismatch);
    WireFrame short_frame = f;
    short_frame.bits.resize(10);
    CHECK(parse_wire(short_frame, 17, 0x9c).status == ParseStatus::Malformed);

    BasebandPacket e = p;
    e.modulation = Modulation::Edr;
    WireFrame ef = build_wire(e, 17, 0x9c);
    CHECK(parse_wire(ef, 17, 0x9c).status == ParseStatus::Undecodable);
    auto peer = parse_wire(ef, 17, 0x9c, Observer::Peer);
    REQUIRE(peer.status == ParseStatus::Decoded);
    CHECK(peer.packet.payload == e.payload);
}

TEST_CASE("packet validity rules") {
    std::string why;
    BasebandPacket p = make_packet(PacketType::Null, 1);
    p.payload = {1};
    CHECK_FALSE(packet_valid(p, &why));
    CHECK(why == "type carries no payload");
    BasebandPacket q = make_packet(PacketType::Dm1, 1, std::vector<uint8_t>(packet_max_body(PacketType::Dm1) + 1));
    CHECK_FALSE(packet_valid(q));
    BasebandPacket r = make_packet(PacketType::Dm1, 1, {1});
    r.modulation = Modulation::Edr;
    CHECK_FALSE(packet_valid(r));
}

TEST_CASE("clock fields") {
    ClockState c = ClockState::from_clock27(0x7ffffff);
    CHECK(c.clock27() == 0x7ffffff);
    CHECK(c.clock6() == 0x3f);
    c.advance_slot();
    CHECK(c.raw == 0);
    CHECK(c.clock1() == 0);
    c.tick();
    CHECK(c.clock0() == 1);
}

TEST_CASE("AfhMap keeps at least 20 usable channels") {
    std::vector<int> bad;
    for (int ch = 0; ch < 59; ++ch) bad.push_back(ch);
    auto m = AfhMap::with_bad(bad);
    REQUIRE(m);
    CHECK(m->n() == 20);
    AfhMap mm = *m;
    CHECK_FALSE(mm.set(70, AfhClass::Bad));
    CHECK(mm.n() == 20);
    bad.push_back(60);
    CHECK_FALSE(AfhMap::with_bad(bad));
    CHECK(m->bad_bits().substr(0, 3) == "111");
    CHECK(m->bad_bits().size() == 79);
}

TEST_CASE("BdAddr parsing") {
    auto a = BdAddr::parse("00:02:72:9C:1D:2E");
    REQUIRE(a);
    CHECK(a->nap == 0x0002);
    CHECK(a->uap == 0x72);
    CHECK(a->lap == 0x9c1d2e);
    CHECK(BdAddr::parse("0002729c1d2e") == a);
    CHECK_FALSE(BdAddr::parse("0002729c1d2"));
    CHECK_FALSE(BdAddr::parse("zz02729c1d2e"));
}
