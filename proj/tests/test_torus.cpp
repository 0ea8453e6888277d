#include "mgsim/torus.hpp"
#include "mgsim/graph.hpp"
#include "mgsim/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace mgsim;

namespace {

// brute-force minimal ring distance, for checking the wrapped coordinates
uint32_t ring_dist(uint32_t a, uint32_t b, uint32_t extent) {
    uint32_t d = a > b ? a - b : b - a;
    return std::min(d, extent - d);
}

// Walks a packet through the fabric with per-hop routing decisions and
// recursive splits, recording how many payload copies each node consumes.
void walk_multicast(Packet pkt, uint32_t at, const TorusGeom& geom,
                    std::map<uint32_t, std::vector<uint32_t>>& delivered, uint32_t depth = 0) {
    REQUIRE(depth < 64);
    std::array<double, 4> stress{0, 0, 0, 0};
    while (at != pkt.next_dest) {
        Port port = dyxy_next_hop(at, pkt.next_dest, geom, stress);
        REQUIRE(port != Port::Local);
        at = neighbor_of(at, port, geom);
    }
    SplitResult split = split_multicast(pkt, at, geom);
    if (split.has_local)
        for (uint32_t k = split.local_begin; k < split.local_end; k++)
            delivered[at].push_back(pkt.neighbors[k]);
    for (auto& part : split.parts)
        walk_multicast(std::move(part.packet), at, geom, delivered, depth + 1);
}

} // namespace

TEST_CASE("torus factorization") {
    CHECK(make_torus(16).width == 4);
    CHECK(make_torus(16).height == 4);
    CHECK(make_torus(8).width == 4);
    CHECK(make_torus(8).height == 2);
    CHECK(make_torus(1).width == 1);
    CHECK_THROWS_AS(make_torus(12), ConfigError);
}

TEST_CASE("relative coordinates match the worked example") {
    TorusGeom g{4, 4};
    CHECK(rel_coord(1, 6, g) == RelCoord{1, -1});  // N1 -> N6
    CHECK(rel_coord(5, 5, g) == RelCoord{0, 0});
    CHECK(rel_coord(0, 12, g) == RelCoord{0, 1});  // wraps north, 1 hop not 3
}

TEST_CASE("wrapping picks the shorter way and positive ties") {
    for (TorusGeom g : {TorusGeom{4, 4}, TorusGeom{5, 5}, TorusGeom{8, 2}}) {
        for (uint32_t a = 0; a < g.num_nodes(); a++) {
            for (uint32_t b = 0; b < g.num_nodes(); b++) {
                RelCoord rc = rel_coord(a, b, g);
                CHECK(uint32_t(std::abs(rc.x)) == ring_dist(g.col(a), g.col(b), g.width));
                CHECK(uint32_t(std::abs(rc.y)) == ring_dist(g.row(a), g.row(b), g.height));
                CHECK(apply_rel(a, rc, g) == b);
                if (g.width % 2 == 0 && uint32_t(std::abs(rc.x)) * 2 == g.width)
                    CHECK(rc.x > 0);
            }
        }
    }
}

TEST_CASE("routing: local, aligned, and stress-adaptive cases") {
    TorusGeom g{4, 4};
    std::array<double, 4> stress{0, 0, 0, 0};
    CHECK(dyxy_next_hop(5, 5, g, stress) == Port::Local);

    // aligned on a row: two east hops regardless of stress
    CHECK(dyxy_next_hop(1, 3, g, {0.9, 0.9, 0.9, 0.9}) == Port::East);
    CHECK(dyxy_next_hop(2, 3, g, {0.9, 0.9, 0.9, 0.9}) == Port::East);

    // diagonal: pick the productive port with smaller stress
    std::array<double, 4> s1{0.2, 0.0, 0.0, 0.8};  // east cheap, south busy
    CHECK(dyxy_next_hop(0, 5, g, s1) == Port::East);
    std::array<double, 4> s2{0.8, 0.0, 0.0, 0.2};
    CHECK(dyxy_next_hop(0, 5, g, s2) == Port::South);
    // tie goes to the X port
    std::array<double, 4> tie{0.5, 0.5, 0.5, 0.5};
    CHECK(dyxy_next_hop(0, 5, g, tie) == Port::East);
}

TEST_CASE("routing always follows a shortest path under random stress") {
    Rng rng(1234);
    for (TorusGeom g : {TorusGeom{4, 4}, TorusGeom{4, 2}}) {
        for (uint32_t src = 0; src < g.num_nodes(); src++) {
            for (uint32_t dst = 0; dst < g.num_nodes(); dst++) {
                for (int trial = 0; trial < 20; trial++) {
                    uint32_t at = src;
                    uint32_t hops = 0;
                    while (at != dst) {
                        std::array<double, 4> stress;
                        for (auto& s : stress) s = rng.next_double();
                        Port port = dyxy_next_hop(at, dst, g, stress);
                        REQUIRE(port != Port::Local);
                        at = neighbor_of(at, port, g);
                        hops++;
                        REQUIRE(hops <= g.width + g.height);
                    }
                    CHECK(hops == torus_distance(src, dst, g));
                }
            }
        }
    }
}

TEST_CASE("the nine split regions partition every wrapped coordinate") {
    for (TorusGeom g : {TorusGeom{4, 4}, TorusGeom{5, 5}, TorusGeom{6, 6}}) {
        for (uint32_t target = 0; target < g.num_nodes(); target++) {
            RelCoord rc = rel_coord(0, target, g);
            int region = split_region(rc);
            CHECK(region >= 0);
            CHECK(region <= 8);
            CHECK((region == 0) == (rc.x == 0 && rc.y == 0));
        }
    }
}

TEST_CASE("packet byte size model") {
    CHECK(packet_size_bytes(PacketKind::EndSignal, 0, 0, 0) == 16);
    CHECK(packet_size_bytes(PacketKind::ReplicaUnicast, 1, 1, 512) == 2078);
    CHECK(packet_size_bytes(PacketKind::ReplicaMulticast, 3, 4, 500) == 2054);
    Packet p;
    p.kind = PacketKind::ReplicaMulticast;
    p.dest_nodes = {3, 6, 7};
    p.offsets = {0, 2, 3, 4};
    p.neighbors = {35, 51, 54, 39};
    p.payload_elements = 500;
    CHECK(p.size_bytes() == 2054);
}

TEST_CASE("split at the origin reproduces the worked multicast") {
    TorusGeom g{4, 4};
    Packet p;
    p.kind = PacketKind::ReplicaMulticast;
    p.next_dest = 1;
    p.source_vid = 0;
    p.payload_elements = 20;
    p.dest_nodes = {3, 6, 7};
    p.offsets = {0, 2, 3, 4};
    p.neighbors = {35, 51, 54, 39};

    SplitResult split = split_multicast(p, 1, g);
    CHECK(!split.has_local);
    REQUIRE(split.parts.size() == 2);

    // region P2 holds {N3 at [2,0], N7 at [2,-1]} and aims at [2,0] = N3;
    // region P3 holds {N6 at [1,-1]} and aims at N6
    const SplitPart* toward3 = nullptr;
    const SplitPart* toward6 = nullptr;
    for (auto& part : split.parts) {
        if (part.toward == 3) toward3 = &part;
        if (part.toward == 6) toward6 = &part;
    }
    REQUIRE(toward3 != nullptr);
    REQUIRE(toward6 != nullptr);
    CHECK(toward3->packet.dest_nodes == std::vector<uint32_t>{3, 7});
    CHECK(toward3->packet.neighbors == std::vector<uint32_t>{35, 51, 39});
    CHECK(toward6->packet.dest_nodes == std::vector<uint32_t>{6});
    CHECK(toward6->packet.neighbors == std::vector<uint32_t>{54});

    // full delivery: every destination consumes its slice exactly once
    std::map<uint32_t, std::vector<uint32_t>> delivered;
    walk_multicast(p, 1, g, delivered);
    REQUIRE(delivered.size() == 3);
    CHECK(delivered[3] == std::vector<uint32_t>{35, 51});
    CHECK(delivered[6] == std::vector<uint32_t>{54});
    CHECK(delivered[7] == std::vector<uint32_t>{39});
}

TEST_CASE("split keeps everything local when the only member is here") {
    TorusGeom g{4, 4};
    Packet p;
    p.kind = PacketKind::ReplicaMulticast;
    p.next_dest = 5;
    p.dest_nodes = {5};
    p.offsets = {0, 2};
    p.neighbors = {21, 37};
    p.payload_elements = 8;
    SplitResult split = split_multicast(p, 5, g);
    CHECK(split.has_local);
    CHECK(split.local_begin == 0);
    CHECK(split.local_end == 2);
    CHECK(split.parts.empty());
}

TEST_CASE("random multicasts deliver exactly one copy per destination") {
    Rng rng(777);
    TorusGeom g{4, 4};
    for (int trial = 0; trial < 1000; trial++) {
        uint32_t origin = static_cast<uint32_t>(rng.next_below(16));
        std::set<uint32_t> dests;
        uint32_t count = 1 + static_cast<uint32_t>(rng.next_below(16));
        for (uint32_t i = 0; i < count; i++)
            dests.insert(static_cast<uint32_t>(rng.next_below(16)));

        Packet p;
        p.kind = PacketKind::ReplicaMulticast;
        p.next_dest = origin;
        p.payload_elements = 4;
        p.offsets.push_back(0);
        for (uint32_t d : dests) {
            p.dest_nodes.push_back(d);
            p.neighbors.push_back(d * 16);  // one synthetic vertex per node
            p.offsets.push_back(static_cast<uint32_t>(p.neighbors.size()));
        }

        std::map<uint32_t, std::vector<uint32_t>> delivered;
        walk_multicast(p, origin, g, delivered);
        REQUIRE(delivered.size() == dests.size());
        for (uint32_t d : dests) {
            REQUIRE(delivered.count(d) == 1);
            CHECK(delivered[d].size() == 1);
        }
    }
}

TEST_CASE("splitting preserves payload bytes per part") {
    TorusGeom g{4, 4};
    Packet p;
    p.kind = PacketKind::ReplicaMulticast;
    p.next_dest = 0;
    p.payload_elements = 128;
    p.offsets.push_back(0);
    for (uint32_t d = 1; d < 16; d++) {
        p.dest_nodes.push_back(d);
        p.neighbors.push_back(d);
        p.offsets.push_back(d);
    }
    SplitResult split = split_multicast(p, 0, g);
    uint64_t neighbors_total = 0;
    for (auto& part : split.parts) {
        CHECK(part.packet.payload_bytes() == p.payload_bytes());
        CHECK(part.packet.size_bytes() <= p.size_bytes());
        neighbors_total += part.packet.neighbors.size();
    }
    CHECK(neighbors_total == p.neighbors.size());
}

TEST_CASE("stress value is the clamped occupancy ratio") {
    CHECK(stress_ratio(0, 1 << 20) == 0.0);
    CHECK(stress_ratio(1 << 19, 1 << 20) == 0.5);
    CHECK(stress_ratio(3 << 20, 1 << 20) == 1.0);  // transient overdraft clamps
    Rng rng(4);
    for (int i = 0; i < 100; i++) {
        uint64_t cap = 1 + rng.next_below(1 << 20);
        uint64_t occ = rng.next_below(cap + 1);
        CHECK(stress_ratio(int64_t(occ), cap) == doctest::Approx(double(occ) / double(cap)));
    }
}
