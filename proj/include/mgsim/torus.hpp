#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace mgsim {

struct TorusGeom {
    uint32_t width = 4;
    uint32_t height = 4;

    uint32_t num_nodes() const { return width * height; }
    uint32_t col(uint32_t id) const { return id % width; }
    uint32_t row(uint32_t id) const { return id / width; }
    uint32_t id_at(uint32_t c, uint32_t r) const { return r * width + c; }
};

// Picks the most square W x H factorization for a power-of-two node count.
TorusGeom make_torus(uint32_t num_nodes);

// Relative position of a target seen from a current node, x east-positive
// and y north-positive (row index grows southward). Each component is
// wrapped to the shorter way around the ring; on an exact half-ring tie the
// positive direction wins so every pair has a unique coordinate.
struct RelCoord {
    int32_t x = 0;
    int32_t y = 0;
    bool operator==(const RelCoord&) const = default;
};

RelCoord rel_coord(uint32_t current, uint32_t target, const TorusGeom& geom);
uint32_t apply_rel(uint32_t current, RelCoord rel, const TorusGeom& geom);
uint32_t torus_distance(uint32_t a, uint32_t b, const TorusGeom& geom);

enum class Port : uint8_t { East = 0, West = 1, North = 2, South = 3, Local = 4 };

uint32_t neighbor_of(uint32_t node, Port port, const TorusGeom& geom);

// Congestion-adaptive minimal routing. Aligned packets have a unique
// productive port; diagonal packets pick the productive X or Y port whose
// downstream stress is smaller, X winning ties.
Port dyxy_next_hop(uint32_t current, uint32_t dest, const TorusGeom& geom,
                   const std::array<double, 4>& neighbor_stress);

// A router's stress value: routing-buffer occupancy clamped to [0, 1].
// Routers snapshot their neighbors' values once per stress period.
inline double stress_ratio(int64_t occupied_bytes, uint64_t capacity_bytes) {
    if (occupied_bytes <= 0 || capacity_bytes == 0) return 0.0;
    double r = double(occupied_bytes) / double(capacity_bytes);
    return r > 1.0 ? 1.0 : r;
}

enum class PacketKind : uint8_t { ReplicaMulticast = 0, ReplicaUnicast = 1, EndSignal = 2 };

// Routable unit. Payload data is never materialized, only its length; the
// byte size model is what the traffic counters bill.
struct Packet {
    PacketKind kind = PacketKind::ReplicaUnicast;
    uint32_t next_dest = 0;
    uint32_t source_vid = 0;
    uint32_t round_id = 0;
    uint32_t layer = 1;
    uint32_t payload_elements = 0;
    std::vector<uint32_t> dest_nodes;  // sorted ascending
    std::vector<uint32_t> offsets;     // |dest_nodes|+1 indices into neighbors
    std::vector<uint32_t> neighbors;   // destination vertex ids

    uint64_t payload_bytes() const {
        return kind == PacketKind::EndSignal ? 0 : 4ull * payload_elements;
    }
    uint64_t size_bytes() const;
};

// header 16 + 2 per destination node + 4 per offset entry + 4 per neighbor
// + 4 per payload element; end signals are header only.
uint64_t packet_size_bytes(PacketKind kind, size_t dest_nodes, size_t neighbors,
                           uint32_t payload_elements);

// One forwarded piece of a multicast split: the packet to send plus the
// representative it is aimed at. The representative may not itself be a
// member; the packet re-splits when it arrives there.
struct SplitPart {
    Packet packet;
    uint32_t toward = 0;
};

struct SplitResult {
    // Index range [local_begin, local_end) into the parent's neighbor list
    // covering destinations on the current node, if any.
    bool has_local = false;
    uint32_t local_begin = 0;
    uint32_t local_end = 0;
    std::vector<SplitPart> parts;
};

// Region id in 0..8 of a wrapped relative coordinate per the nine split
// predicates; region 0 is the origin only.
int split_region(RelCoord rc);

// Splits a multicast packet that has arrived at `current` into its local
// share and up to four forwarded packets.
SplitResult split_multicast(const Packet& pkt, uint32_t current, const TorusGeom& geom);

} // namespace mgsim
