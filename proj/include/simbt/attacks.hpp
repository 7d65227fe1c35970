#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simbt/baseband.hpp"

namespace simbt {

using Key128 = std::array<uint8_t, 16>;
using Sres = std::array<uint8_t, 4>;
using Aco = std::array<uint8_t, 12>;

enum class SuiteKind : uint8_t { ReferenceStandIn };

// Keyed-hash stand-in for the E-series functions. Each function is
// SipHash-2-4 with 128-bit output, keyed by its 128-bit secret argument,
// over a one-byte domain tag followed by the remaining arguments:
//   e22: key in_rand, message 0x22 | len(pin) | pin digits (ASCII) | addr
//   e21: key lk_rand, message 0x21 | addr
//   e1:  key k_ab,    message 0x01 | au_rand | addr
// addr is the 6-byte BD_ADDR, NAP first.
class CipherSuite {
public:
    virtual ~CipherSuite() = default;
    virtual SuiteKind kind() const = 0;
    virtual Key128 e22(std::string_view pin, const BdAddr& addr, const Key128& in_rand) const = 0;
    virtual Key128 e21(const Key128& lk_rand, const BdAddr& addr) const = 0;
    virtual Key128 e1(const Key128& k_ab, const BdAddr& addr, const Key128& au_rand) const = 0;
};

class ReferenceSuite final : public CipherSuite {
public:
    SuiteKind kind() const override { return SuiteKind::ReferenceStandIn; }
    Key128 e22(std::string_view pin, const BdAddr& addr, const Key128& in_rand) const override;
    Key128 e21(const Key128& lk_rand, const BdAddr& addr) const override;
    Key128 e1(const Key128& k_ab, const BdAddr& addr, const Key128& au_rand) const override;
};

const CipherSuite& default_suite();

// SRES is the top 32 bits of the e1 output, ACO the low 96.
Sres sres_of(const Key128& e1_out);
Aco aco_of(const Key128& e1_out);
Key128 xor128(const Key128& a, const Key128& b);
// K_AB combines the two sides' e21 outputs by XOR.
Key128 combine_link_key(const CipherSuite& s, const Key128& lk_rand_a, const BdAddr& addr_a,
                        const Key128& lk_rand_b, const BdAddr& addr_b);

bool pin_valid(std::string_view pin);

struct SessionKeys {
    Key128 k_init{};
    Key128 k_ab{};
    Sres sres_a{};  // A's response to AU_RAND_B
    Sres sres_b{};  // B's response to AU_RAND_A
    Aco aco{};      // from B's authentication
    bool operator==(const SessionKeys&) const = default;
};

// Throws std::invalid_argument for a malformed pin.
SessionKeys derive_session(std::string_view pin, const BdAddr& addr_a, const BdAddr& addr_b, const Key128& in_rand,
                           const Key128& lk_rand_a, const Key128& lk_rand_b, const Key128& au_rand_a,
                           const Key128& au_rand_b, const CipherSuite& suite = default_suite());

enum class Side : uint8_t { A, B };

struct TranscriptRecord {
    int index = 0;  // 1..7
    Side src = Side::A;
    Side dst = Side::B;
    std::vector<uint8_t> payload;  // 16 bytes, or 4 for SRES
    bool operator==(const TranscriptRecord&) const = default;
};

// The seven pairing packets in exchange order. Missing records stay absent.
struct PairingTranscript {
    std::vector<TranscriptRecord> records;

    const TranscriptRecord* find(int index) const;
    bool complete(std::string* why = nullptr) const;
    std::string to_text() const;
    static std::optional<PairingTranscript> parse(std::string_view text, std::string* error = nullptr);
    bool operator==(const PairingTranscript&) const = default;
};

// Expected direction and size of each record, index 1..7.
Side transcript_src(int index);
size_t transcript_size(int index);

PairingTranscript make_transcript(const Key128& in_rand, const Key128& masked_lk_a, const Key128& masked_lk_b,
                                  const Key128& au_rand_a, const Sres& sres_b, const Key128& au_rand_b,
                                  const Sres& sres_a);

struct CrackOptions {
    int min_digits = 4;
    int max_digits = 6;
    int workers = 0;           // 0 = hardware concurrency
    bool exhaustive = false;   // keep searching to detect further accepting PINs
    uint32_t chunk = 4096;     // candidates claimed per worker step
};

struct CrackResult {
    bool found = false;
    std::string pin;
    Key128 k_ab{};
    uint64_t candidates_tested = 0;
    uint64_t single_match = 0;     // candidates that matched exactly one SRES
    uint64_t accepting = 0;        // candidates that matched both (counted when exhaustive)
    bool multiple_accepting = false;
    std::string error;             // set when the transcript cannot be attacked
};

// Candidate order is length-major, ascending within a length. The result is
// the first accepting candidate in that order for any worker count.
CrackResult crack_pin(const PairingTranscript& t, const BdAddr& addr_a, const BdAddr& addr_b,
                      const CrackOptions& opt = {}, const CipherSuite& suite = default_suite());

std::string to_hex(std::span<const uint8_t> bytes);
std::optional<std::vector<uint8_t>> from_hex(std::string_view text);

}  // namespace simbt
