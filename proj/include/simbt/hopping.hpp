#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "simbt/baseband.hpp"

namespace simbt {

enum class KernelKind : uint8_t { BasicSpec, ReferenceHash };

struct HopKernel {
    KernelKind kind = KernelKind::BasicSpec;
};

const char* kernel_name(KernelKind k);

struct HopAddress {
    uint32_t value = 0;  // (uap & 0xF) << 24 | lap

    static HopAddress from(const BdAddr& a) { return from_parts(a.uap, a.lap); }
    static HopAddress from_parts(uint8_t uap, uint32_t lap) {
        return HopAddress{(uint32_t(uap & 0x0f) << 24) | (lap & 0xffffff)};
    }
    bool operator==(const HopAddress&) const = default;
};

// General inquiry access code used as the inquiry hopping address.
constexpr uint32_t kGiacLap = 0x9e8b33;
constexpr HopAddress kInquiryAddress{kGiacLap};

// Hop selection with the address-dependent terms precomputed, for loops
// that evaluate many clocks against one address.
class HopSelector {
public:
    HopSelector(HopKernel kernel, HopAddress addr);

    int basic(uint32_t clock27) const;
    int adaptive(uint32_t clock27, const AfhMap& map) const;
    // Same as adaptive() with the usable channels of `map` already laid out
    // by afh_bank(); `is_usable` has 79 entries.
    int adaptive(uint32_t clock27, const std::vector<int>& bank, const std::array<bool, kNumChannels>& is_usable) const;
    // Channel for a wake-up index x in 0..31 (no clock terms).
    int wakeup(uint32_t x, uint32_t y1 = 0) const;

    // Usable channels in the order the remap indexes them.
    std::vector<int> afh_bank(const AfhMap& map) const;

private:
    uint32_t perm_input(uint32_t clk, uint32_t* y2, uint32_t* base_f) const;

    HopKernel kernel_;
    HopAddress addr_;
    uint32_t a1_, b_, c1_, d1_, e_;
};

int basic_hop(HopKernel kernel, HopAddress addr, uint32_t clock27);
// Precondition n >= 20 is carried by the AfhMap type.
int adaptive_hop(HopKernel kernel, HopAddress addr, uint32_t clock27, const AfhMap& map);

enum class InquiryTrain : uint8_t { A, B };

// The 32 wake-up channels of an address, ascending.
std::array<int, 32> wakeup_channels(HopAddress addr);

// Inquirer transmit channel at a tick. Without a train the full 32-set
// rotates once every 32 ticks.
int inquiry_hop(ClockState clock, std::optional<InquiryTrain> phase = std::nullopt);
// Channel an inquiry-scanning device listens on; constant for 1.28 s.
int inquiry_scan_channel(ClockState clock);
// Pager transmit channel at a tick, using the pager's estimate of the
// target's clock. Train A is the 16 channels centred on the estimated scan
// channel, train B the other 16.
int page_hop(ClockState clock_estimate, HopAddress target, InquiryTrain train = InquiryTrain::A);
int page_scan_channel(ClockState clock, HopAddress self);

// Element i is the hop at start_clock27 + i (one slot, two ticks, per step).
// Throws std::invalid_argument for length 0 or longer than 2^27.
std::vector<int> predict_sequence(HopKernel kernel, HopAddress addr, uint32_t start_clock27,
                                  const AfhMap* map, size_t length);

}  // namespace simbt
