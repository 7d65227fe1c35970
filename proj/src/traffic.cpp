#include "simbt/piconet.hpp"

namespace simbt {

const char* traffic_kind_name(TrafficKind k) {
    switch (k) {
        case TrafficKind::Idle: return "Idle";
        case TrafficKind::PairingOnly: return "PairingOnly";
        case TrafficKind::AudioStream: return "AudioStream";
    }
    return "?";
}

const char* rate_class_name(RateClass r) { return r == RateClass::MixedEdr ? "MixedEdr" : "BasicRateOnly"; }

namespace {

std::vector<uint8_t> random_body(Rng& rng, size_t n) {
    std::vector<uint8_t> body(n);
    for (size_t i = 0; i < n; i += 8) {
        uint64_t v = rng.next();
        for (size_t j = i; j < n && j < i + 8; ++j, v >>= 8) body[j] = static_cast<uint8_t>(v);
    }
    return body;
}

BasebandPacket control_packet(PacketType t, uint32_t lap, Rng& rng) {
    size_t n = static_cast<size_t>(rng.range(20, static_cast<int64_t>(packet_max_body(t))));
    BasebandPacket p = make_packet(t, lap, random_body(rng, n));
    p.payload_class = PayloadClass::Control;
    return p;
}

}  // namespace

bool is_keepalive(const BasebandPacket& p) { return p.ptype == PacketType::Poll || p.ptype == PacketType::Null; }

BasebandPacket generate_traffic(const TrafficProfile& profile, const SlotContext& ctx, Rng& rng) {
    if (!ctx.master || profile.kind != TrafficKind::AudioStream)
        return make_packet(ctx.master ? PacketType::Poll : PacketType::Null, ctx.lap);

    if (profile.rate == RateClass::BasicRateOnly) {
        if (rng.chance(profile.control_fraction)) return control_packet(PacketType::Dh3, ctx.lap, rng);
        return make_packet(PacketType::Dh5, ctx.lap, random_body(rng, packet_max_body(PacketType::Dh5)));
    }
    if (rng.chance(profile.edr_fraction)) {
        BasebandPacket p = make_packet(PacketType::Dh5, ctx.lap, random_body(rng, packet_max_body(PacketType::Dh5)));
        p.modulation = Modulation::Edr;
        return p;
    }
    return control_packet(rng.chance(0.5) ? PacketType::Dh3 : PacketType::Dh5, ctx.lap, rng);
}

}  // namespace simbt
