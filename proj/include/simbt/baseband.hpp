#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simbt {

constexpr int kNumChannels = 79;
constexpr int kMinUsableChannels = 20;
constexpr uint32_t kClockMask = (1u << 28) - 1;
constexpr uint32_t kClock27Mask = (1u << 27) - 1;
constexpr int64_t kSlotUs = 625;

struct BdAddr {
    uint16_t nap = 0;
    uint8_t uap = 0;
    uint32_t lap = 0;  // 24 bits

    uint64_t to_u64() const;
    static BdAddr from_u64(uint64_t v);
    // Accepts "11:22:33:44:55:66" or 12 hex digits, NAP first.
    static std::optional<BdAddr> parse(std::string_view text);
    std::string to_string() const;

    bool operator==(const BdAddr&) const = default;
};

// 28-bit counter of a 3200 Hz clock. Two ticks per 625 us slot.
struct ClockState {
    uint32_t raw = 0;

    static ClockState from_clock27(uint32_t clock27) { return {(clock27 << 1) & kClockMask}; }

    uint32_t clock0() const { return raw & 1; }
    uint32_t clock1() const { return (raw >> 1) & 1; }
    uint32_t clock6() const { return (raw >> 1) & 0x3f; }
    uint32_t clock27() const { return raw >> 1; }

    void tick(uint32_t n = 1) { raw = (raw + n) & kClockMask; }
    void advance_slot() { tick(2); }

    bool operator==(const ClockState&) const = default;
};

enum class AfhClass : uint8_t { Unknown, Good, Bad };

// 79-entry channel classification. The usable count never drops below 20;
// mutators that would break that refuse and return false.
class AfhMap {
public:
    AfhMap() { entries_.fill(AfhClass::Unknown); }

    static std::optional<AfhMap> from_entries(const std::array<AfhClass, kNumChannels>& entries);
    // Marks exactly the listed channels Bad, the rest Unknown.
    static std::optional<AfhMap> with_bad(std::span<const int> bad);

    AfhClass get(int ch) const { return entries_[ch]; }
    bool usable(int ch) const { return entries_[ch] != AfhClass::Bad; }
    int n() const { return n_; }
    bool set(int ch, AfhClass c);
    const std::array<AfhClass, kNumChannels>& entries() const { return entries_; }
    std::vector<int> usable_channels() const;
    std::vector<int> bad_channels() const;
    // '1' for Bad, '0' otherwise, channel 0 first.
    std::string bad_bits() const;

    bool operator==(const AfhMap& o) const { return entries_ == o.entries_; }

private:
    std::array<AfhClass, kNumChannels> entries_{};
    int n_ = kNumChannels;
};

enum class PacketType : uint8_t { Id, Fhs, Poll, Null, Dm1, Dh1, Dh3, Dh5, Lmp, Pairing };
enum class PairingKind : uint8_t { InRand, CombKey, AuRand, Sres };
enum class Modulation : uint8_t { BasicRate, Edr };
// Data marks application traffic, Control marks signalling carried over ACL.
enum class PayloadClass : uint8_t { Data, Control };

const char* packet_type_name(PacketType t);
std::optional<PacketType> packet_type_from_name(std::string_view name);
bool packet_has_payload(PacketType t);
uint8_t packet_slots(PacketType t);
// Largest body in bytes that the type carries.
size_t packet_max_body(PacketType t);

// LMP opcodes used by the link manager.
namespace lmp {
constexpr uint8_t kInRand = 8;
constexpr uint8_t kCombKey = 9;
constexpr uint8_t kAuRand = 11;
constexpr uint8_t kSres = 12;
constexpr uint8_t kAccepted = 3;
constexpr uint8_t kSupervision = 55;
constexpr uint8_t kSetAfh = 60;
}  // namespace lmp

uint8_t pairing_opcode(PairingKind k);

struct BasebandPacket {
    uint32_t sync_lap = 0;
    uint8_t lt_addr = 1;
    PacketType ptype = PacketType::Null;
    PairingKind pairing_kind = PairingKind::InRand;  // only meaningful for Pairing
    bool flow = true;
    bool arqn = false;
    bool seqn = false;
    uint8_t hec = 0;
    std::vector<uint8_t> payload;  // body bytes; LMP and Pairing start with the opcode byte
    uint16_t crc = 0;
    uint8_t slots = 1;
    Modulation modulation = Modulation::BasicRate;
    PayloadClass payload_class = PayloadClass::Data;

    bool operator==(const BasebandPacket&) const = default;
};

BasebandPacket make_packet(PacketType t, uint32_t lap, std::vector<uint8_t> payload = {});
BasebandPacket make_pairing_packet(PairingKind k, uint32_t lap, std::span<const uint8_t> value);
BasebandPacket make_lmp_packet(uint8_t opcode, uint32_t lap, std::span<const uint8_t> params);
// Checks the structural invariants (payload presence, slot count, sizes).
bool packet_valid(const BasebandPacket& p, std::string* why = nullptr);
// The 10 header content bits, LSB first: LT_ADDR(3) TYPE(4) FLOW ARQN SEQN.
uint16_t header_bits(const BasebandPacket& p);
uint8_t type_code(const BasebandPacket& p);

struct WhiteningWord {
    uint8_t bits = 0;  // register position i holds bit i
    bool operator==(const WhiteningWord&) const = default;
};

using Bits = std::vector<uint8_t>;  // one bit per element

WhiteningWord derive_whitening_word(uint32_t clock6);
Bits whitening_keystream(WhiteningWord word, size_t n);
Bits whiten(const Bits& data, WhiteningWord word);

uint8_t compute_hec(uint16_t header10, uint8_t uap);
// Runs the HEC register backwards from the received value to its initial load.
uint8_t uap_from_hec(uint16_t header10, uint8_t hec);
uint16_t compute_crc(std::span<const uint8_t> payload, uint8_t uap);
// Table-driven compute_crc continuing from register value `reg`.
uint16_t crc_bytes_fast(std::span<const uint8_t> bytes, uint16_t reg);
uint16_t crc_init(uint8_t uap);

struct WireFrame {
    uint32_t lap = 0;  // access code role, never whitened
    Bits bits;         // whitened header (18 bits) followed by payload region
    Modulation modulation = Modulation::BasicRate;
    uint8_t slots = 1;

    bool has_payload() const { return bits.size() > 18; }
    bool operator==(const WireFrame&) const = default;
};

// FHS body: LAP (3 bytes, little-endian), UAP, NAP (2 bytes, little-endian),
// CLK27 (4 bytes, little-endian).
std::vector<uint8_t> fhs_body(const BdAddr& addr, uint32_t clock27);
std::optional<std::pair<BdAddr, uint32_t>> parse_fhs_body(std::span<const uint8_t> body);

// Fills in hec and crc as build_wire would.
BasebandPacket with_checks(BasebandPacket p, uint8_t uap);
WireFrame build_wire(const BasebandPacket& p, uint32_t clock6, uint8_t uap);

enum class ParseStatus : uint8_t { Decoded, HecMismatch, CrcMismatch, Malformed, Undecodable };
enum class Observer : uint8_t { ThirdParty, Peer };

struct ParseResult {
    ParseStatus status = ParseStatus::HecMismatch;
    BasebandPacket packet;  // full packet when Decoded, header fields when Undecodable
};

const char* parse_status_name(ParseStatus s);
ParseResult parse_wire(const WireFrame& frame, uint32_t clock6_guess, uint8_t uap_guess,
                       Observer observer = Observer::ThirdParty);

// Header fields of a frame after de-whitening; no validity checks.
uint16_t dewhitened_header(const WireFrame& frame, uint32_t clock6, uint8_t* hec_out);

}  // namespace simbt
