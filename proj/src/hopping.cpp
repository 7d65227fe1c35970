#include "simbt/hopping.hpp"

#include <algorithm>
#include <stdexcept>

#include "simbt/rng.hpp"

namespace simbt {

namespace {

constexpr uint8_t kIndex1[14] = {0, 2, 1, 3, 0, 1, 0, 3, 1, 0, 2, 1, 0, 1};
constexpr uint8_t kIndex2[14] = {1, 3, 2, 4, 4, 3, 2, 4, 4, 3, 4, 3, 3, 2};

// Butterfly permutation of the 5 bits of z under 14 control bits: p_low
// supplies controls 0..8 and p_high controls 9..13, applied from 13 down.
uint32_t perm5(uint32_t z, uint32_t p_high, uint32_t p_low) {
    uint32_t p = (p_low & 0x1ff) | ((p_high & 0x1f) << 9);
    uint8_t zb[5];
    for (int i = 0; i < 5; ++i) zb[i] = (z >> i) & 1;
    for (int i = 13; i >= 0; --i) {
        if ((p >> i) & 1) std::swap(zb[kIndex1[i]], zb[kIndex2[i]]);
    }
    uint32_t out = 0;
    for (int i = 0; i < 5; ++i) out |= uint32_t(zb[i]) << i;
    return out;
}

inline int bank_channel(uint32_t index) { return static_cast<int>((2 * index) % kNumChannels); }

uint64_t ref_hash(uint32_t addr, uint32_t clock27, uint64_t salt) {
    return splitmix64((uint64_t{addr} << 32) ^ clock27 ^ (salt << 60));
}

}  // namespace

const char* kernel_name(KernelKind k) {
    return k == KernelKind::BasicSpec ? "BasicSpec" : "ReferenceHash";
}

HopSelector::HopSelector(HopKernel kernel, HopAddress addr) : kernel_(kernel), addr_(addr) {
    uint32_t a = addr.value;
    a1_ = (a >> 23) & 0x1f;
    b_ = (a >> 19) & 0x0f;
    c1_ = ((a >> 4) & 0x10) | ((a >> 3) & 0x08) | ((a >> 2) & 0x04) | ((a >> 1) & 0x02) | (a & 0x01);
    d1_ = (a >> 10) & 0x1ff;
    e_ = ((a >> 7) & 0x40) | ((a >> 6) & 0x20) | ((a >> 5) & 0x10) | ((a >> 4) & 0x08) |
         ((a >> 3) & 0x04) | ((a >> 2) & 0x02) | ((a >> 1) & 0x01);
}

uint32_t HopSelector::perm_input(uint32_t clk, uint32_t* y2, uint32_t* base_f) const {
    uint32_t x = (clk >> 2) & 0x1f;
    uint32_t y1 = (clk >> 1) & 1;
    uint32_t a = (a1_ ^ (clk >> 21)) & 0x1f;
    uint32_t c = (c1_ ^ (clk >> 16)) & 0x1f;
    uint32_t d = (d1_ ^ (clk >> 7)) & 0x1ff;
    *y2 = y1 << 5;
    *base_f = (clk >> 3) & 0x1fffff0;
    return perm5(((x + a) % 32) ^ b_, (y1 * 0x1f) ^ c, d);
}

int HopSelector::basic(uint32_t clock27) const {
    clock27 &= kClock27Mask;
    if (kernel_.kind == KernelKind::ReferenceHash)
        return static_cast<int>(ref_hash(addr_.value, clock27, 1) % kNumChannels);
    uint32_t clk = clock27 << 1;
    uint32_t y2, base_f;
    uint32_t perm = perm_input(clk, &y2, &base_f);
    return bank_channel((perm + e_ + base_f % kNumChannels + y2) % kNumChannels);
}

std::vector<int> HopSelector::afh_bank(const AfhMap& map) const {
    std::vector<int> bank;
    if (kernel_.kind == KernelKind::ReferenceHash) return map.usable_channels();
    for (uint32_t i = 0; i < kNumChannels; ++i) {
        int ch = bank_channel(i);
        if (map.usable(ch)) bank.push_back(ch);
    }
    return bank;
}

int HopSelector::adaptive(uint32_t clock27, const std::vector<int>& bank,
                          const std::array<bool, kNumChannels>& is_usable) const {
    clock27 &= kClock27Mask;
    uint32_t n = static_cast<uint32_t>(bank.size());
    if (kernel_.kind == KernelKind::ReferenceHash) {
        int ch = static_cast<int>(ref_hash(addr_.value, clock27, 1) % kNumChannels);
        if (is_usable[ch]) return ch;
        return bank[ref_hash(addr_.value, clock27, 2) % n];
    }
    uint32_t clk = clock27 << 1;
    uint32_t y2, base_f;
    uint32_t perm = perm_input(clk, &y2, &base_f);
    int ch = bank_channel((perm + e_ + base_f % kNumChannels + y2) % kNumChannels);
    if (is_usable[ch]) return ch;
    return bank[(perm + e_ + base_f % n + y2) % n];
}

int HopSelector::adaptive(uint32_t clock27, const AfhMap& map) const {
    std::array<bool, kNumChannels> ok{};
    for (int ch = 0; ch < kNumChannels; ++ch) ok[ch] = map.usable(ch);
    return adaptive(clock27, afh_bank(map), ok);
}

int HopSelector::wakeup(uint32_t x, uint32_t y1) const {
    uint32_t perm = perm5(((x + a1_) % 32) ^ b_, (y1 * 0x1f) ^ c1_, d1_);
    return bank_channel((perm + e_ + 32 * y1) % kNumChannels);
}

int basic_hop(HopKernel kernel, HopAddress addr, uint32_t clock27) {
    return HopSelector(kernel, addr).basic(clock27);
}

int adaptive_hop(HopKernel kernel, HopAddress addr, uint32_t clock27, const AfhMap& map) {
    return HopSelector(kernel, addr).adaptive(clock27, map);
}

std::array<int, 32> wakeup_channels(HopAddress addr) {
    HopSelector sel({}, addr);
    std::array<int, 32> out{};
    for (uint32_t x = 0; x < 32; ++x) out[x] = sel.wakeup(x);
    std::sort(out.begin(), out.end());
    return out;
}

static const HopSelector& inquiry_selector() {
    static const HopSelector sel({}, kInquiryAddress);
    return sel;
}

static uint32_t train_index(uint32_t clk, InquiryTrain train) {
    uint32_t koffset = train == InquiryTrain::A ? 24 : 8;
    uint32_t hi = (clk >> 12) & 31;
    uint32_t lo = (((clk >> 2) & 7) << 1) | (clk & 1);
    return (hi + koffset + ((lo + 32 - hi) % 16)) % 32;
}

int inquiry_hop(ClockState clock, std::optional<InquiryTrain> phase) {
    uint32_t x = phase ? train_index(clock.raw, *phase) : (clock.raw & 31);
    return inquiry_selector().wakeup(x);
}

int inquiry_scan_channel(ClockState clock) { return inquiry_selector().wakeup((clock.raw >> 12) & 31); }

int page_hop(ClockState clock_estimate, HopAddress target, InquiryTrain train) {
    return HopSelector({}, target).wakeup(train_index(clock_estimate.raw, train));
}

int page_scan_channel(ClockState clock, HopAddress self) {
    return HopSelector({}, self).wakeup((clock.raw >> 12) & 31);
}

std::vector<int> predict_sequence(HopKernel kernel, HopAddress addr, uint32_t start_clock27, const AfhMap* map,
                                  size_t length) {
    if (length == 0) throw std::invalid_argument("predict_sequence: length must be at least 1");
    if (length > (size_t{1} << 27)) throw std::invalid_argument("predict_sequence: length exceeds clock period");
    HopSelector sel(kernel, addr);
    std::vector<int> out(length);
    if (!map) {
        for (size_t i = 0; i < length; ++i) out[i] = sel.basic(start_clock27 + static_cast<uint32_t>(i));
        return out;
    }
    std::vector<int> bank = sel.afh_bank(*map);
    std::array<bool, kNumChannels> ok{};
    for (int ch = 0; ch < kNumChannels; ++ch) ok[ch] = map->usable(ch);
    for (size_t i = 0; i < length; ++i) out[i] = sel.adaptive(start_clock27 + static_cast<uint32_t>(i), bank, ok);
    return out;
}

}  // namespace simbt
