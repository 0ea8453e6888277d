#include "mgsim/torus.hpp"
#include "mgsim/graph.hpp"

#include <algorithm>
#include <cmath>

namespace mgsim {

TorusGeom make_torus(uint32_t num_nodes) {
    if (num_nodes == 0 || (num_nodes & (num_nodes - 1)) != 0)
        throw ConfigError("node count must be a power of two");
    uint32_t k = 0;
    while ((1u << k) < num_nodes) k++;
    TorusGeom g;
    g.width = 1u << ((k + 1) / 2);
    g.height = 1u << (k / 2);
    return g;
}

namespace {

// Wrap a ring delta into (-extent/2, extent/2], positive on ties.
int32_t wrap_delta(int64_t delta, uint32_t extent) {
    int64_t e = extent;
    int64_t w = ((delta % e) + e) % e;
    if (2 * w > e) w -= e;
    return static_cast<int32_t>(w);
}

} // namespace

RelCoord rel_coord(uint32_t current, uint32_t target, const TorusGeom& geom) {
    RelCoord rc;
    rc.x = wrap_delta(int64_t(geom.col(target)) - geom.col(current), geom.width);
    rc.y = wrap_delta(int64_t(geom.row(current)) - geom.row(target), geom.height);
    return rc;
}

uint32_t apply_rel(uint32_t current, RelCoord rel, const TorusGeom& geom) {
    int64_t c = (int64_t(geom.col(current)) + rel.x % int64_t(geom.width) + geom.width) % geom.width;
    int64_t r = (int64_t(geom.row(current)) - rel.y % int64_t(geom.height) + geom.height) % geom.height;
    return geom.id_at(static_cast<uint32_t>(c), static_cast<uint32_t>(r));
}

uint32_t torus_distance(uint32_t a, uint32_t b, const TorusGeom& geom) {
    RelCoord rc = rel_coord(a, b, geom);
    return static_cast<uint32_t>(std::abs(rc.x) + std::abs(rc.y));
}

uint32_t neighbor_of(uint32_t node, Port port, const TorusGeom& geom) {
    uint32_t c = geom.col(node), r = geom.row(node);
    switch (port) {
        case Port::East: return geom.id_at((c + 1) % geom.width, r);
        case Port::West: return geom.id_at((c + geom.width - 1) % geom.width, r);
        case Port::North: return geom.id_at(c, (r + geom.height - 1) % geom.height);
        case Port::South: return geom.id_at(c, (r + 1) % geom.height);
        default: return node;
    }
}

Port dyxy_next_hop(uint32_t current, uint32_t dest, const TorusGeom& geom,
                   const std::array<double, 4>& neighbor_stress) {
    RelCoord rc = rel_coord(current, dest, geom);
    if (rc.x == 0 && rc.y == 0) return Port::Local;
    Port px = rc.x > 0 ? Port::East : Port::West;
    Port py = rc.y > 0 ? Port::North : Port::South;
    if (rc.y == 0) return px;
    if (rc.x == 0) return py;
    double sx = neighbor_stress[static_cast<size_t>(px)];
    double sy = neighbor_stress[static_cast<size_t>(py)];
    return sy < sx ? py : px;  // tie goes to the X port
}

uint64_t packet_size_bytes(PacketKind kind, size_t dest_nodes, size_t neighbors,
                           uint32_t payload_elements) {
    if (kind == PacketKind::EndSignal) return 16;
    return 16 + 2ull * dest_nodes + 4ull * (dest_nodes + 1) + 4ull * neighbors +
           4ull * payload_elements;
}

uint64_t Packet::size_bytes() const {
    return packet_size_bytes(kind, dest_nodes.size(), neighbors.size(), payload_elements);
}

int split_region(RelCoord rc) {
    int32_t x = rc.x, y = rc.y;
    if (x == 0 && y == 0) return 0;
    if (y > 0 && y <= x) return 1;
    if (y <= 0 && y > -x) return 2;
    if (x > 0 && y <= -x) return 3;
    if (x <= 0 && y < x) return 4;
    if (y < 0 && y >= x) return 5;
    if (y >= 0 && y < -x) return 6;
    if (y >= -x && x < 0) return 7;
    return 8;  // x >= 0 && y > x
}

namespace {

struct Member {
    RelCoord rc;
    uint32_t index;  // position in parent's dest_nodes
};

int32_t min_x(const std::vector<Member>& m) {
    int32_t v = m[0].rc.x;
    for (auto& e : m) v = std::min(v, e.rc.x);
    return v;
}
int32_t max_x(const std::vector<Member>& m) {
    int32_t v = m[0].rc.x;
    for (auto& e : m) v = std::max(v, e.rc.x);
    return v;
}
int32_t min_y(const std::vector<Member>& m) {
    int32_t v = m[0].rc.y;
    for (auto& e : m) v = std::min(v, e.rc.y);
    return v;
}
int32_t max_y(const std::vector<Member>& m) {
    int32_t v = m[0].rc.y;
    for (auto& e : m) v = std::max(v, e.rc.y);
    return v;
}

} // namespace

SplitResult split_multicast(const Packet& pkt, uint32_t current, const TorusGeom& geom) {
    SplitResult out;
    std::array<std::vector<Member>, 9> region;
    for (uint32_t i = 0; i < pkt.dest_nodes.size(); i++) {
        RelCoord rc = rel_coord(current, pkt.dest_nodes[i], geom);
        region[split_region(rc)].push_back({rc, i});
    }

    if (!region[0].empty()) {
        uint32_t i = region[0][0].index;
        out.has_local = true;
        out.local_begin = pkt.offsets[i];
        out.local_end = pkt.offsets[i + 1];
    }

    auto emit = [&](std::vector<Member> members, RelCoord toward) {
        std::sort(members.begin(), members.end(),
                  [&](const Member& a, const Member& b) { return a.index < b.index; });
        SplitPart part;
        part.toward = apply_rel(current, toward, geom);
        Packet& np = part.packet;
        np.kind = pkt.kind;
        np.next_dest = part.toward;
        np.source_vid = pkt.source_vid;
        np.round_id = pkt.round_id;
        np.layer = pkt.layer;
        np.payload_elements = pkt.payload_elements;
        np.offsets.push_back(0);
        for (auto& m : members) {
            np.dest_nodes.push_back(pkt.dest_nodes[m.index]);
            for (uint32_t k = pkt.offsets[m.index]; k < pkt.offsets[m.index + 1]; k++)
                np.neighbors.push_back(pkt.neighbors[k]);
            np.offsets.push_back(static_cast<uint32_t>(np.neighbors.size()));
        }
        out.parts.push_back(std::move(part));
    };

    // Paired regions share a forwarding direction when both are populated;
    // otherwise each goes to its own corner representative.
    auto& p1 = region[1];
    auto& p2 = region[2];
    if (!p1.empty() && !p2.empty()) {
        std::vector<Member> u(p1);
        u.insert(u.end(), p2.begin(), p2.end());
        emit(std::move(u), {std::min(min_x(p1), min_x(p2)), 0});
    } else {
        if (!p1.empty()) emit(p1, {min_x(p1), min_y(p1)});
        if (!p2.empty()) emit(p2, {min_x(p2), max_y(p2)});
    }

    auto& p3 = region[3];
    auto& p4 = region[4];
    if (!p3.empty() && !p4.empty()) {
        std::vector<Member> u(p3);
        u.insert(u.end(), p4.begin(), p4.end());
        emit(std::move(u), {0, std::max(max_y(p3), max_y(p4))});
    } else {
        if (!p3.empty()) emit(p3, {min_x(p3), max_y(p3)});
        if (!p4.empty()) emit(p4, {max_x(p4), max_y(p4)});
    }

    auto& p5 = region[5];
    auto& p6 = region[6];
    if (!p5.empty() && !p6.empty()) {
        std::vector<Member> u(p5);
        u.insert(u.end(), p6.begin(), p6.end());
        emit(std::move(u), {std::max(max_x(p5), max_x(p6)), 0});
    } else {
        if (!p5.empty()) emit(p5, {max_x(p5), max_y(p5)});
        if (!p6.empty()) emit(p6, {max_x(p6), min_y(p6)});
    }

    auto& p7 = region[7];
    auto& p8 = region[8];
    if (!p7.empty() && !p8.empty()) {
        std::vector<Member> u(p7);
        u.insert(u.end(), p8.begin(), p8.end());
        emit(std::move(u), {0, std::min(min_y(p7), min_y(p8))});
    } else {
        if (!p7.empty()) emit(p7, {max_x(p7), min_y(p7)});
        if (!p8.empty()) emit(p8, {min_x(p8), min_y(p8)});
    }

    return out;
}

} // namespace mgsim
