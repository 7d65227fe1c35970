#include <doctest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "simbt/attacks.hpp"
#include "simbt/rng.hpp"

using namespace simbt;

namespace {

// SipHash-2-4 with 128-bit output, straight from the reference algorithm.
struct SipOracle {
    uint64_t v0, v1, v2, v3;

    static uint64_t rotl(uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }
    static uint64_t le64(const uint8_t* p) {
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    void round() {
        v0 += v1; v1 = rotl(v1, 13); v1 ^= v0; v0 = rotl(v0, 32);
        v2 += v3; v3 = rotl(v3, 16); v3 ^= v2;
        v0 += v3; v3 = rotl(v3, 21); v3 ^= v0;
        v2 += v1; v1 = rotl(v1, 17); v1 ^= v2; v2 = rotl(v2, 32);
    }

    static Key128 hash(const Key128& key, const std::vector<uint8_t>& msg) {
        uint64_t k0 = le64(key.data()), k1 = le64(key.data() + 8);
        SipOracle s{k0 ^ 0x736f6d6570736575ULL, k1 ^ 0x646f72616e646f6dULL, k0 ^ 0x6c7967656e657261ULL,
                    k1 ^ 0x7465646279746573ULL};
        s.v1 ^= 0xee;
        size_t full = msg.size() / 8 * 8;
        for (size_t i = 0; i < full; i += 8) {
            uint64_t m = le64(msg.data() + i);
            s.v3 ^= m;
            s.round();
            s.round();
            s.v0 ^= m;
        }
        uint64_t last = uint64_t(msg.size() & 0xff) << 56;
        for (size_t i = full; i < msg.size(); ++i) last |= uint64_t(msg[i]) << (8 * (i - full));
        s.v3 ^= last;
        s.round();
        s.round();
        s.v0 ^= last;
        s.v2 ^= 0xee;
        for (int i = 0; i < 4; ++i) s.round();
        uint64_t lo = s.v0 ^ s.v1 ^ s.v2 ^ s.v3;
        s.v1 ^= 0xdd;
        for (int i = 0; i < 4; ++i) s.round();
        uint64_t hi = s.v0 ^ s.v1 ^ s.v2 ^ s.v3;
        Key128 out{};
        for (int i = 0; i < 8; ++i) {
            out[i] = uint8_t(lo >> (8 * i));
            out[8 + i] = uint8_t(hi >> (8 * i));
        }
        return out;
    }
};

std::vector<uint8_t> addr_bytes(const BdAddr& a) {
    return {uint8_t(a.nap >> 8), uint8_t(a.nap), a.uap, uint8_t(a.lap >> 16), uint8_t(a.lap >> 8), uint8_t(a.lap)};
}

Key128 random_key(Rng& rng) {
    Key128 k{};
    for (auto& b : k) b = static_cast<uint8_t>(rng.next());
    return k;
}

// Link key of the fixture pairing, frozen from SipOracle over the
// unmasked LK_RAND values.
constexpr const char* kGoldenKab = "cb1d6a048ad124f35ea5c22d9dd01e99";

}  // namespace

TEST_CASE("SipHash oracle reproduces the reference 128-bit vector") {
    Key128 key{};
    for (int i = 0; i < 16; ++i) key[i] = static_cast<uint8_t>(i);
    CHECK(to_hex(SipOracle::hash(key, {})) == "a3817f04ba25a8e66df67214c7550293");
}

TEST_CASE("stand-in suite functions match the oracle") {
    Rng rng(31);
    const ReferenceSuite suite;
    for (int i = 0; i < 50; ++i) {
        BdAddr a = BdAddr::from_u64(rng.next() & 0xffffffffffffULL);
        Key128 k1 = random_key(rng), k2 = random_key(rng);
        std::string pin = std::to_string(1000 + rng.below(9000));

        std::vector<uint8_t> m22 = {0x22, static_cast<uint8_t>(pin.size())};
        m22.insert(m22.end(), pin.begin(), pin.end());
        auto ab = addr_bytes(a);
        m22.insert(m22.end(), ab.begin(), ab.end());
        CHECK(suite.e22(pin, a, k1) == SipOracle::hash(k1, m22));

        std::vector<uint8_t> m21 = {0x21};
        m21.insert(m21.end(), ab.begin(), ab.end());
        CHECK(suite.e21(k1, a) == SipOracle::hash(k1, m21));

        std::vector<uint8_t> m1 = {0x01};
        m1.insert(m1.end(), k2.begin(), k2.end());
        m1.insert(m1.end(), ab.begin(), ab.end());
        CHECK(suite.e1(k1, a, k2) == SipOracle::hash(k1, m1));
    }
}

TEST_CASE("session derivation is symmetric") {
    Rng rng(32);
    BdAddr a = BdAddr::from_u64(0x0002729c1d2eULL), b = BdAddr::from_u64(0x001a7dda7113ULL);
    Key128 in = random_key(rng), la = random_key(rng), lb = random_key(rng), aa = random_key(rng), abr = random_key(rng);
    auto k = derive_session("0000", a, b, in, la, lb, aa, abr);
    const auto& s = default_suite();
    // B computes the same link key from the masked values it receives.
    Key128 k_init_b = s.e22("0000", a, in);
    CHECK(k_init_b == k.k_init);
    CHECK(combine_link_key(s, xor128(xor128(la, k.k_init), k_init_b), a, lb, b) == k.k_ab);
    CHECK(k.sres_b == sres_of(s.e1(k.k_ab, b, aa)));
    CHECK(k.sres_a == sres_of(s.e1(k.k_ab, a, abr)));
    CHECK(derive_session("0001", a, b, in, la, lb, aa, abr).k_init != k.k_init);
    CHECK_THROWS(derive_session("123", a, b, in, la, lb, aa, abr));
    CHECK_THROWS(derive_session("12a4", a, b, in, la, lb, aa, abr));
}

TEST_CASE("transcript text round trip and validation") {
    Rng rng(33);
    Key128 k = random_key(rng);
    Sres s{1, 2, 3, 4};
    auto t = make_transcript(k, k, k, k, s, k, s);
    CHECK(t.complete());
    auto back = PairingTranscript::parse(t.to_text());
    REQUIRE(back);
    CHECK(*back == t);

    std::string err;
    CHECK_FALSE(PairingTranscript::parse("1 A B zz\n", &err));
    CHECK(err == "line 1: bad hex payload");
    CHECK_FALSE(PairingTranscript::parse("9 A B 00\n", &err));
    PairingTranscript partial = t;
    partial.records.pop_back();
    std::string why;
    CHECK_FALSE(partial.complete(&why));
    CHECK(why == "missing packet 7");
    CrackResult r = crack_pin(partial, BdAddr{}, BdAddr{});
    CHECK_FALSE(r.found);
    CHECK(r.error == "missing packet 7");
}

TEST_CASE("crack recovers PINs of each length") {
    Rng rng(34);
    for (std::string pin : {"0000", "9999", "31337", "123456", "000007"}) {
        BdAddr a = BdAddr::from_u64(rng.next() & 0xffffffffffffULL), b = BdAddr::from_u64(rng.next() & 0xffffffffffffULL);
        Key128 in = random_key(rng), la = random_key(rng), lb = random_key(rng), aa = random_key(rng), ab = random_key(rng);
        auto k = derive_session(pin, a, b, in, la, lb, aa, ab);
        auto t = make_transcript(in, xor128(la, k.k_init), xor128(lb, k.k_init), aa, k.sres_b, ab, k.sres_a);
        CrackOptions opt;
        opt.workers = 2;
        opt.chunk = 1000;
        CrackResult r = crack_pin(t, a, b, opt);
        REQUIRE(r.found);
        CHECK(r.pin == pin);
        CHECK(r.k_ab == k.k_ab);
        // Candidates run through 4-digit PINs first, in ascending order.
        uint64_t expect = 0;
        if (pin.size() == 4) expect = std::stoull(pin) + 1;
        if (pin.size() == 5) expect = 10000 + std::stoull(pin) + 1;
        if (pin.size() == 6) expect = 110000 + std::stoull(pin) + 1;
        CHECK(r.candidates_tested == expect);
    }
}

TEST_CASE("crack reports a PIN outside the search range as not found") {
    Rng rng(35);
    BdAddr a{}, b = BdAddr::from_u64(1);
    Key128 in = random_key(rng), la = random_key(rng), lb = random_key(rng), aa = random_key(rng), ab = random_key(rng);
    auto k = derive_session("123456", a, b, in, la, lb, aa, ab);
    auto t = make_transcript(in, xor128(la, k.k_init), xor128(lb, k.k_init), aa, k.sres_b, ab, k.sres_a);
    CrackOptions opt;
    opt.max_digits = 5;
    CrackResult r = crack_pin(t, a, b, opt);
    CHECK_FALSE(r.found);
    CHECK(r.candidates_tested == 110000);
}

TEST_CASE("golden transcript fixture") {
    std::ifstream in(std::string(SIMBT_FIXTURE_DIR) + "/transcript.txt");
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    auto t = PairingTranscript::parse(ss.str());
    REQUIRE(t);
    REQUIRE(t->complete());
    CrackOptions opt;
    opt.exhaustive = true;
    CrackResult r = crack_pin(*t, *BdAddr::parse("0002729c1d2e"), *BdAddr::parse("001a7dda7113"), opt);
    CHECK(r.found);
    CHECK(r.pin == "4729");
    CHECK(r.accepting == 1);
    CHECK_FALSE(r.multiple_accepting);
    CHECK(to_hex(r.k_ab) == std::string(kGoldenKab));
}
