#include <doctest.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <set>
#include <stdexcept>

#include "simbt/hopping.hpp"
#include "simbt/rng.hpp"

using namespace simbt;

namespace {

// Hop selection written from the bit-field definitions: every input is
// pulled out bit by bit and the butterfly is applied stage by stage.
struct HopOracle {
    uint32_t addr;

    static uint32_t bit(uint32_t v, int i) { return (v >> i) & 1; }
    static uint32_t field(uint32_t v, int hi, int lo) { return (v >> lo) & ((1u << (hi - lo + 1)) - 1); }
    uint32_t gather(std::initializer_list<int> positions) const {
        uint32_t out = 0;
        int k = 0;
        for (int p : positions) out |= bit(addr, p) << k++;
        return out;
    }

    // Stages from first to last; each swaps two bit positions under one
    // control bit.
    static uint32_t butterfly(uint32_t z, uint32_t ctrl14) {
        struct Stage {
            int control, a, b;
        };
        static constexpr Stage stages[14] = {{13, 1, 2}, {12, 0, 3}, {11, 1, 3}, {10, 2, 4}, {9, 0, 3},
                                             {8, 1, 4},  {7, 3, 4},  {6, 0, 2},  {5, 1, 3},  {4, 0, 4},
                                             {3, 3, 4},  {2, 1, 2},  {1, 2, 3},  {0, 0, 1}};
        for (const Stage& s : stages) {
            if (!bit(ctrl14, s.control)) continue;
            uint32_t x = bit(z, s.a), y = bit(z, s.b);
            z &= ~((1u << s.a) | (1u << s.b));
            z |= (x << s.b) | (y << s.a);
        }
        return z;
    }

    // Returns the kernel output index before channel mapping, with the F
    // term reduced modulo `n`.
    uint32_t index(uint32_t clock27, uint32_t n) const {
        uint32_t clk = clock27 << 1;
        uint32_t x = field(clk, 6, 2);
        uint32_t y1 = bit(clk, 1);
        uint32_t a = field(addr, 27, 23) ^ field(clk, 25, 21);
        uint32_t b = field(addr, 22, 19);
        uint32_t c = gather({0, 2, 4, 6, 8}) ^ field(clk, 20, 16);
        uint32_t d = field(addr, 18, 10) ^ field(clk, 15, 7);
        uint32_t e = gather({1, 3, 5, 7, 9, 11, 13});
        uint64_t f = (16ull * field(clk, 27, 7)) % n;
        uint32_t ctrl = (d & 0x1ff) | ((c ^ (y1 ? 0x1f : 0)) << 9);
        uint32_t z = butterfly(((x + a) % 32) ^ b, ctrl);
        return static_cast<uint32_t>((z + e + f + 32 * y1) % n);
    }

    static int channel_of_index(uint32_t k) { return k < 40 ? int(2 * k) : int(2 * (k - 40) + 1); }

    int basic(uint32_t clock27) const { return channel_of_index(index(clock27, 79)); }

    int adaptive(uint32_t clock27, const AfhMap& map) const {
        int ch = basic(clock27);
        if (map.usable(ch)) return ch;
        std::vector<int> bank;
        for (uint32_t k = 0; k < 79; ++k)
            if (map.usable(channel_of_index(k))) bank.push_back(channel_of_index(k));
        return bank[index(clock27, static_cast<uint32_t>(bank.size()))];
    }
};

}  // namespace

TEST_CASE("basic hop matches the bit-field oracle") {
    Rng rng(21);
    for (int a = 0; a < 200; ++a) {
        HopAddress addr = HopAddress::from_parts(static_cast<uint8_t>(rng.next()), static_cast<uint32_t>(rng.below(1u << 24)));
        HopOracle o{addr.value};
        for (int i = 0; i < 200; ++i) {
            uint32_t clk = static_cast<uint32_t>(rng.below(1u << 27));
            REQUIRE(basic_hop({}, addr, clk) == o.basic(clk));
        }
    }
}

TEST_CASE("adaptive hop matches the oracle") {
    Rng rng(22);
    for (int m = 0; m < 30; ++m) {
        std::vector<int> bad;
        int count = static_cast<int>(rng.below(60));
        std::set<int> chosen;
        while (static_cast<int>(chosen.size()) < count) chosen.insert(static_cast<int>(rng.below(79)));
        bad.assign(chosen.begin(), chosen.end());
        auto map = AfhMap::with_bad(bad);
        REQUIRE(map);
        HopAddress addr = HopAddress::from_parts(static_cast<uint8_t>(rng.next()), static_cast<uint32_t>(rng.below(1u << 24)));
        HopOracle o{addr.value};
        for (int i = 0; i < 300; ++i) {
            uint32_t clk = static_cast<uint32_t>(rng.below(1u << 27));
            int ch = adaptive_hop({}, addr, clk, *map);
            REQUIRE(ch == o.adaptive(clk, *map));
            REQUIRE(map->usable(ch));
        }
    }
}

TEST_CASE("32 consecutive master slots of a segment are distinct channels") {
    HopAddress addr = HopAddress::from_parts(0x6b, 0x9c1d2e);
    for (uint32_t base : {0u, 0x1234500u, 0x7ffff00u}) {
        base &= ~0x3fu;
        std::set<int> seen;
        // Master slots: clock27 bit 0 clear; x runs over clock27 bits 1..5.
        for (uint32_t x = 0; x < 32; ++x) seen.insert(basic_hop({}, addr, base + 2 * x));
        CHECK(seen.size() == 32);
    }
}

TEST_CASE("both kernels cover all channels roughly uniformly") {
    for (KernelKind k : {KernelKind::BasicSpec, KernelKind::ReferenceHash}) {
        std::array<int, 79> counts{};
        HopAddress addr = HopAddress::from_parts(0x21, 0x4a5b6c);
        const int n = 79 * 2000;
        auto seq = predict_sequence({k}, addr, 12345, nullptr, n);
        for (int ch : seq) counts[ch]++;
        for (int c : counts) {
            CHECK(c > 2000 * 0.8);
            CHECK(c < 2000 * 1.2);
        }
    }
}

TEST_CASE("predict_sequence steps one slot per element") {
    HopAddress addr = HopAddress::from_parts(0x9c, 0x123456);
    auto map = AfhMap::with_bad(std::vector<int>{10, 11, 12, 13, 40});
    auto seq = predict_sequence({}, addr, 0x7fffff0, nullptr, 40);
    auto aseq = predict_sequence({}, addr, 0x7fffff0, &*map, 40);
    for (uint32_t i = 0; i < 40; ++i) {
        CHECK(seq[i] == basic_hop({}, addr, (0x7fffff0 + i) & kClock27Mask));
        CHECK(aseq[i] == adaptive_hop({}, addr, (0x7fffff0 + i) & kClock27Mask, *map));
    }
    CHECK_THROWS_AS(predict_sequence({}, addr, 0, nullptr, 0), std::invalid_argument);
}

TEST_CASE("ReferenceHash adaptive hop stays in the usable set") {
    std::vector<int> bad;
    for (int ch = 0; ch < 59; ++ch) bad.push_back(ch);
    auto map = AfhMap::with_bad(bad);
    HopAddress addr = HopAddress::from_parts(1, 2);
    std::set<int> seen;
    for (uint32_t c = 0; c < 5000; ++c) {
        int ch = adaptive_hop({KernelKind::ReferenceHash}, addr, c, *map);
        REQUIRE(map->usable(ch));
        seen.insert(ch);
    }
    CHECK(seen.size() == 20);
}

TEST_CASE("wake-up trains") {
    HopAddress target = HopAddress::from_parts(0x72, 0x9c1d2e);
    auto wake = wakeup_channels(target);
    CHECK(std::set<int>(wake.begin(), wake.end()).size() == 32);
    // Trains A and B together cover the 32 wake-up channels.
    std::set<int> trains;
    for (uint32_t tick = 0; tick < 32; ++tick) {
        ClockState c{tick};
        trains.insert(page_hop(c, target, InquiryTrain::A));
        trains.insert(page_hop(c, target, InquiryTrain::B));
    }
    CHECK(trains == std::set<int>(wake.begin(), wake.end()));
    // Train A holds the scan channel of the estimated clock.
    ClockState est{0x1234 << 12};
    int scan = page_scan_channel(est, target);
    std::set<int> a;
    for (uint32_t tick = 0; tick < 32; ++tick) a.insert(page_hop(ClockState{est.raw + tick}, target, InquiryTrain::A));
    CHECK(a.size() == 16);
    CHECK(a.count(scan) == 1);

    auto giac = wakeup_channels(kInquiryAddress);
    for (uint32_t k = 0; k < 64; ++k) {
        int ch = inquiry_scan_channel(ClockState{k << 12});
        CHECK(std::binary_search(giac.begin(), giac.end(), ch));
    }
}

TEST_CASE("golden hop sequence fixture") {
    // One line per sequence: kernel, hop address, start clock27, bad
    // channels (or -), then the channels.
    std::ifstream in(std::string(SIMBT_FIXTURE_DIR) + "/hop_sequences.txt");
    REQUIRE(in);
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kernel, bad_text;
        uint32_t addr = 0, start = 0;
        ls >> kernel >> std::hex >> addr >> start >> std::dec >> bad_text;
        std::optional<AfhMap> map;
        if (bad_text != "-") {
            std::vector<int> bad;
            std::istringstream bs(bad_text);
            std::string tok;
            while (std::getline(bs, tok, ',')) bad.push_back(std::stoi(tok));
            map = AfhMap::with_bad(bad);
            REQUIRE(map);
        }
        std::vector<int> expect;
        int ch;
        while (ls >> ch) expect.push_back(ch);
        HopKernel k{kernel == "BasicSpec" ? KernelKind::BasicSpec : KernelKind::ReferenceHash};
        auto seq = predict_sequence(k, HopAddress{addr}, start, map ? &*map : nullptr, expect.size());
        CHECK(seq == expect);
        ++checked;
    }
    CHECK(checked >= 4);
}
