#include "simbt/attacks.hpp"

#include <sodium.h>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace simbt {

namespace {

constexpr uint8_t kTagE22 = 0x22;
constexpr uint8_t kTagE21 = 0x21;
constexpr uint8_t kTagE1 = 0x01;

void put_addr(uint8_t* out, const BdAddr& a) {
    out[0] = uint8_t(a.nap >> 8);
    out[1] = uint8_t(a.nap);
    out[2] = a.uap;
    out[3] = uint8_t(a.lap >> 16);
    out[4] = uint8_t(a.lap >> 8);
    out[5] = uint8_t(a.lap);
}

Key128 siphash128(const Key128& key, const uint8_t* msg, size_t len) {
    Key128 out{};
    crypto_shorthash_siphashx24(out.data(), msg, len, key.data());
    return out;
}

}  // namespace

Key128 ReferenceSuite::e22(std::string_view pin, const BdAddr& addr, const Key128& in_rand) const {
    uint8_t msg[2 + 16 + 6];
    msg[0] = kTagE22;
    msg[1] = static_cast<uint8_t>(pin.size());
    size_t n = std::min<size_t>(pin.size(), 16);
    std::copy_n(pin.data(), n, msg + 2);
    put_addr(msg + 2 + n, addr);
    return siphash128(in_rand, msg, 2 + n + 6);
}

Key128 ReferenceSuite::e21(const Key128& lk_rand, const BdAddr& addr) const {
    uint8_t msg[7];
    msg[0] = kTagE21;
    put_addr(msg + 1, addr);
    return siphash128(lk_rand, msg, sizeof msg);
}

Key128 ReferenceSuite::e1(const Key128& k_ab, const BdAddr& addr, const Key128& au_rand) const {
    uint8_t msg[1 + 16 + 6];
    msg[0] = kTagE1;
    std::copy(au_rand.begin(), au_rand.end(), msg + 1);
    put_addr(msg + 17, addr);
    return siphash128(k_ab, msg, sizeof msg);
}

const CipherSuite& default_suite() {
    static const ReferenceSuite suite;
    return suite;
}

Sres sres_of(const Key128& e1_out) {
    Sres s{};
    std::copy_n(e1_out.begin(), 4, s.begin());
    return s;
}

Aco aco_of(const Key128& e1_out) {
    Aco a{};
    std::copy_n(e1_out.begin() + 4, 12, a.begin());
    return a;
}

Key128 xor128(const Key128& a, const Key128& b) {
    Key128 out{};
    for (size_t i = 0; i < 16; ++i) out[i] = a[i] ^ b[i];
    return out;
}

Key128 combine_link_key(const CipherSuite& s, const Key128& lk_rand_a, const BdAddr& addr_a,
                        const Key128& lk_rand_b, const BdAddr& addr_b) {
    return xor128(s.e21(lk_rand_a, addr_a), s.e21(lk_rand_b, addr_b));
}

bool pin_valid(std::string_view pin) {
    if (pin.size() < 4 || pin.size() > 6) return false;
    return std::all_of(pin.begin(), pin.end(), [](char c) { return c >= '0' && c <= '9'; });
}

SessionKeys derive_session(std::string_view pin, const BdAddr& addr_a, const BdAddr& addr_b, const Key128& in_rand,
                           const Key128& lk_rand_a, const Key128& lk_rand_b, const Key128& au_rand_a,
                           const Key128& au_rand_b, const CipherSuite& suite) {
    if (!pin_valid(pin)) throw std::invalid_argument("pin must be 4 to 6 decimal digits");
    SessionKeys k;
    k.k_init = suite.e22(pin, addr_a, in_rand);
    k.k_ab = combine_link_key(suite, lk_rand_a, addr_a, lk_rand_b, addr_b);
    Key128 auth_b = suite.e1(k.k_ab, addr_b, au_rand_a);
    k.sres_b = sres_of(auth_b);
    k.aco = aco_of(auth_b);
    k.sres_a = sres_of(suite.e1(k.k_ab, addr_a, au_rand_b));
    return k;
}

Side transcript_src(int index) {
    return (index == 3 || index == 5 || index == 6) ? Side::B : Side::A;
}

size_t transcript_size(int index) { return (index == 5 || index == 7) ? 4 : 16; }

const TranscriptRecord* PairingTranscript::find(int index) const {
    for (const auto& r : records)
        if (r.index == index) return &r;
    return nullptr;
}

bool PairingTranscript::complete(std::string* why) const {
    for (int i = 1; i <= 7; ++i) {
        const TranscriptRecord* r = find(i);
        std::string msg;
        if (!r) msg = "missing packet " + std::to_string(i);
        else if (r->src != transcript_src(i) || r->dst == r->src) msg = "packet " + std::to_string(i) + " has the wrong direction";
        else if (r->payload.size() != transcript_size(i)) msg = "packet " + std::to_string(i) + " has the wrong length";
        if (!msg.empty()) {
            if (why) *why = msg;
            return false;
        }
    }
    return true;
}

std::string to_hex(std::span<const uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        s += digits[b >> 4];
        s += digits[b & 15];
    }
    return s;
}

std::optional<std::vector<uint8_t>> from_hex(std::string_view text) {
    if (text.size() % 2) return std::nullopt;
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::vector<uint8_t> out;
    for (size_t i = 0; i < text.size(); i += 2) {
        int h = nib(text[i]), l = nib(text[i + 1]);
        if (h < 0 || l < 0) return std::nullopt;
        out.push_back(uint8_t(h << 4 | l));
    }
    return out;
}

static char side_char(Side s) { return s == Side::A ? 'A' : 'B'; }

std::string PairingTranscript::to_text() const {
    std::string out;
    for (const auto& r : records) {
        out += std::to_string(r.index);
        out += ' ';
        out += side_char(r.src);
        out += ' ';
        out += side_char(r.dst);
        out += ' ';
        out += to_hex(r.payload);
        out += '\n';
    }
    return out;
}

std::optional<PairingTranscript> PairingTranscript::parse(std::string_view text, std::string* error) {
    PairingTranscript t;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& m) -> std::optional<PairingTranscript> {
        if (error) *error = "line " + std::to_string(lineno) + ": " + m;
        return std::nullopt;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int idx;
        std::string src, dst, hex, extra;
        if (!(ls >> idx >> src >> dst >> hex) || (ls >> extra)) return fail("expected <index> <src> <dst> <hex>");
        if (idx < 1 || idx > 7) return fail("index out of range");
        if ((src != "A" && src != "B") || (dst != "A" && dst != "B")) return fail("side must be A or B");
        auto bytes = from_hex(hex);
        if (!bytes) return fail("bad hex payload");
        if (t.find(idx)) return fail("duplicate index");
        t.records.push_back({idx, src == "A" ? Side::A : Side::B, dst == "A" ? Side::A : Side::B, *bytes});
    }
    std::sort(t.records.begin(), t.records.end(), [](auto& a, auto& b) { return a.index < b.index; });
    return t;
}

PairingTranscript make_transcript(const Key128& in_rand, const Key128& masked_lk_a, const Key128& masked_lk_b,
                                  const Key128& au_rand_a, const Sres& sres_b, const Key128& au_rand_b,
                                  const Sres& sres_a) {
    PairingTranscript t;
    auto add = [&](int i, auto& v) {
        Side s = transcript_src(i);
        t.records.push_back({i, s, s == Side::A ? Side::B : Side::A, std::vector<uint8_t>(v.begin(), v.end())});
    };
    add(1, in_rand);
    add(2, masked_lk_a);
    add(3, masked_lk_b);
    add(4, au_rand_a);
    add(5, sres_b);
    add(6, au_rand_b);
    add(7, sres_a);
    return t;
}

namespace {

uint64_t pow10(int d) {
    uint64_t v = 1;
    while (d-- > 0) v *= 10;
    return v;
}

template <size_t N>
std::array<uint8_t, N> to_array(const std::vector<uint8_t>& v) {
    std::array<uint8_t, N> a{};
    std::copy_n(v.begin(), N, a.begin());
    return a;
}

}  // namespace

CrackResult crack_pin(const PairingTranscript& t, const BdAddr& addr_a, const BdAddr& addr_b,
                      const CrackOptions& opt, const CipherSuite& suite) {
    CrackResult res;
    std::string why;
    if (!t.complete(&why)) {
        res.error = why;
        return res;
    }
    if (opt.min_digits < 1 || opt.max_digits < opt.min_digits || opt.max_digits > 16) {
        res.error = "invalid digit range";
        return res;
    }
    const Key128 in_rand = to_array<16>(t.find(1)->payload);
    const Key128 m_a = to_array<16>(t.find(2)->payload);
    const Key128 m_b = to_array<16>(t.find(3)->payload);
    const Key128 au_a = to_array<16>(t.find(4)->payload);
    const Sres sres_b = to_array<4>(t.find(5)->payload);
    const Key128 au_b = to_array<16>(t.find(6)->payload);
    const Sres sres_a = to_array<4>(t.find(7)->payload);

    // Global candidate index: lengths min..max in turn, ascending values.
    std::vector<uint64_t> starts;
    uint64_t total = 0;
    for (int d = opt.min_digits; d <= opt.max_digits; ++d) {
        starts.push_back(total);
        total += pow10(d);
    }
    auto pin_at = [&](uint64_t idx) {
        int li = 0;
        while (li + 1 < static_cast<int>(starts.size()) && idx >= starts[li + 1]) ++li;
        int digits = opt.min_digits + li;
        uint64_t v = idx - starts[li];
        std::string pin(static_cast<size_t>(digits), '0');
        for (int i = digits - 1; i >= 0; --i, v /= 10) pin[i] = char('0' + v % 10);
        return pin;
    };

    std::atomic<uint64_t> next{0};
    std::atomic<uint64_t> best{UINT64_MAX};
    std::mutex mu;
    std::vector<uint64_t> singles;
    std::vector<uint64_t> accepts;

    auto worker = [&] {
        std::vector<uint64_t> my_singles, my_accepts;
        while (true) {
            uint64_t lo = next.fetch_add(opt.chunk);
            if (lo >= total) break;
            if (!opt.exhaustive && lo > best.load()) break;
            uint64_t hi = std::min<uint64_t>(total, lo + opt.chunk);
            for (uint64_t idx = lo; idx < hi; ++idx) {
                std::string pin = pin_at(idx);
                Key128 k_init = suite.e22(pin, addr_a, in_rand);
                Key128 k_ab = combine_link_key(suite, xor128(m_a, k_init), addr_a, xor128(m_b, k_init), addr_b);
                bool ok_b = sres_of(suite.e1(k_ab, addr_b, au_a)) == sres_b;
                bool ok_a = sres_of(suite.e1(k_ab, addr_a, au_b)) == sres_a;
                if (ok_a && ok_b) {
                    my_accepts.push_back(idx);
                    uint64_t cur = best.load();
                    while (idx < cur && !best.compare_exchange_weak(cur, idx)) {
                    }
                    if (!opt.exhaustive) break;
                } else if (ok_a || ok_b) {
                    my_singles.push_back(idx);
                }
            }
        }
        std::lock_guard<std::mutex> lk(mu);
        singles.insert(singles.end(), my_singles.begin(), my_singles.end());
        accepts.insert(accepts.end(), my_accepts.begin(), my_accepts.end());
    };

    int workers = opt.workers > 0 ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    uint64_t found = best.load();
    uint64_t limit = opt.exhaustive || found == UINT64_MAX ? total : found + 1;
    res.candidates_tested = limit;
    res.single_match = static_cast<uint64_t>(std::count_if(singles.begin(), singles.end(), [&](uint64_t i) { return i < limit; }));
    if (opt.exhaustive) {
        res.accepting = accepts.size();
        res.multiple_accepting = accepts.size() > 1;
    } else {
        res.accepting = found == UINT64_MAX ? 0 : 1;
    }
    if (found != UINT64_MAX) {
        res.found = true;
        res.pin = pin_at(found);
        Key128 k_init = suite.e22(res.pin, addr_a, in_rand);
        res.k_ab = combine_link_key(suite, xor128(m_a, k_init), addr_a, xor128(m_b, k_init), addr_b);
    }
    return res;
}

}  // namespace simbt
