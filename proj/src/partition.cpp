#include "mgsim/partition.hpp"
#include "mgsim/rng.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace mgsim {

FieldWidths compute_field_widths(uint32_t num_nodes, uint64_t agg_buffer_bytes,
                                 uint64_t replica_bytes, double alpha) {
    if (num_nodes == 0 || (num_nodes & (num_nodes - 1)) != 0)
        throw ConfigError("node count must be a power of two");
    if (agg_buffer_bytes == 0 || replica_bytes == 0)
        throw ConfigError("buffer and replica sizes must be positive");
    if (alpha <= 0.0 || alpha > 1.0)
        throw ConfigError("alpha must be in (0, 1]");

    FieldWidths w;
    w.num_nodes = num_nodes;
    w.agg_buffer_bytes = agg_buffer_bytes;
    w.replica_bytes = replica_bytes;
    w.alpha = alpha;
    while ((1u << (w.n + 1)) <= num_nodes) w.n++;

    double budget = alpha * double(agg_buffer_bytes) / double(replica_bytes);
    if (budget < 1.0)
        throw ConfigError("aggregation buffer cannot hold one replica");
    uint32_t x = 0;
    while (x + 1 < 24 && double(1u << (x + 1)) <= budget) x++;
    w.x = x;
    return w;
}

namespace {

// Splits an oversized per-source task so no packet carries more than
// max_neighbors destination entries; slices keep their (node, neighbor) order.
void push_task_split(std::vector<MulticastTask>& out, MulticastTask&& t,
                     uint32_t max_neighbors) {
    if (t.neighbors.size() <= max_neighbors) {
        out.push_back(std::move(t));
        return;
    }
    MulticastTask cur;
    cur.source_vid = t.source_vid;
    cur.round_id = t.round_id;
    cur.offsets.push_back(0);
    auto flush = [&]() {
        if (!cur.dest_nodes.empty()) {
            out.push_back(std::move(cur));
            cur = MulticastTask{};
            cur.source_vid = t.source_vid;
            cur.round_id = t.round_id;
            cur.offsets.push_back(0);
        }
    };
    for (size_t i = 0; i < t.dest_nodes.size(); i++) {
        uint32_t begin = t.offsets[i], end = t.offsets[i + 1];
        uint32_t pos = begin;
        while (pos < end) {
            uint32_t room = max_neighbors - static_cast<uint32_t>(cur.neighbors.size());
            if (room == 0) {
                flush();
                continue;
            }
            uint32_t take = std::min(room, end - pos);
            cur.dest_nodes.push_back(t.dest_nodes[i]);
            for (uint32_t k = pos; k < pos + take; k++) cur.neighbors.push_back(t.neighbors[k]);
            cur.offsets.push_back(static_cast<uint32_t>(cur.neighbors.size()));
            pos += take;
        }
    }
    flush();
}

PartitionPlan build_plan_impl(const CsrGraph& g, const FieldWidths& widths,
                              uint32_t max_packet_neighbors, bool single_round) {
    PartitionPlan plan;
    plan.widths = widths;
    plan.num_vertices = g.num_vertices;
    plan.single_round = single_round;

    uint32_t rounds = 1;
    if (!single_round) {
        for (uint32_t v = 0; v < g.num_vertices; v++)
            rounds = std::max(rounds, decode_vid(v, widths).round_id + 1);
    }
    plan.rounds = rounds;

    // Gather edges as (source, round, dest_node, dest_vertex). Walking the
    // in-CSR in destination order yields neighbor slices already sorted.
    struct Key {
        uint32_t src, round;
        bool operator<(const Key& o) const {
            return src != o.src ? src < o.src : round < o.round;
        }
    };
    std::map<Key, std::map<uint32_t, std::vector<uint32_t>>> grouped;
    for (uint32_t v = 0; v < g.num_vertices; v++) {
        VidDecode d = decode_vid(v, widths);
        uint32_t round = single_round ? 0 : d.round_id;
        for (const uint32_t* u = g.in_begin(v); u != g.in_end(v); ++u)
            grouped[{*u, round}][d.node_id].push_back(v);
    }

    plan.tasks.assign(rounds, std::vector<std::vector<MulticastTask>>(widths.num_nodes));
    for (auto& [key, by_node] : grouped) {
        MulticastTask t;
        t.source_vid = key.src;
        t.round_id = key.round;
        t.offsets.push_back(0);
        for (auto& [node, verts] : by_node) {
            t.dest_nodes.push_back(node);
            for (uint32_t v : verts) t.neighbors.push_back(v);
            t.offsets.push_back(static_cast<uint32_t>(t.neighbors.size()));
        }
        uint32_t src_home = home_node(key.src, widths);
        push_task_split(plan.tasks[key.round][src_home], std::move(t), max_packet_neighbors);
    }

    plan.combine_order = build_combine_order(widths, g.num_vertices);
    return plan;
}

} // namespace

PartitionPlan build_partition_plan(const CsrGraph& g, const FieldWidths& widths,
                                   uint32_t max_packet_neighbors) {
    return build_plan_impl(g, widths, max_packet_neighbors, false);
}

PartitionPlan build_single_round_plan(const CsrGraph& g, uint32_t num_nodes,
                                      uint32_t max_packet_neighbors) {
    FieldWidths w;
    w.num_nodes = num_nodes;
    while ((1u << (w.n + 1)) <= num_nodes) w.n++;
    w.x = 32 - w.n;  // the whole id above the node bits acts as the slot
    if (w.x > 24) w.x = 24;
    w.agg_buffer_bytes = 1;
    w.replica_bytes = 1;
    if (num_nodes == 0 || (num_nodes & (num_nodes - 1)) != 0)
        throw ConfigError("node count must be a power of two");
    return build_plan_impl(g, w, max_packet_neighbors, true);
}

PartitionPlan override_rounds(const PartitionPlan& plan, const CsrGraph& g,
                              uint32_t rounds, uint32_t max_packet_neighbors) {
    if (rounds == 0) throw ConfigError("round override must be positive");
    if (rounds >= plan.rounds) return plan;

    PartitionPlan out;
    out.widths = plan.widths;
    out.num_vertices = plan.num_vertices;
    out.single_round = rounds == 1;
    out.rounds = rounds;
    // Map natural round r to bucket floor(r * rounds / natural).
    auto bucket = [&](uint32_t r) {
        return static_cast<uint32_t>(uint64_t(r) * rounds / plan.rounds);
    };
    out.tasks.assign(rounds, std::vector<std::vector<MulticastTask>>(plan.widths.num_nodes));
    for (uint32_t node = 0; node < plan.widths.num_nodes; node++) {
        // Merge every source's tasks within one bucket into a single task.
        std::map<std::pair<uint32_t, uint32_t>, std::map<uint32_t, std::vector<uint32_t>>> grouped;
        for (uint32_t r = 0; r < plan.rounds; r++) {
            for (const auto& t : plan.tasks[r][node]) {
                auto& by_node = grouped[{t.source_vid, bucket(r)}];
                for (size_t i = 0; i < t.dest_nodes.size(); i++)
                    for (uint32_t k = t.offsets[i]; k < t.offsets[i + 1]; k++)
                        by_node[t.dest_nodes[i]].push_back(t.neighbors[k]);
            }
        }
        for (auto& [key, by_node] : grouped) {
            MulticastTask t;
            t.source_vid = key.first;
            t.round_id = key.second;
            t.offsets.push_back(0);
            for (auto& [dn, verts] : by_node) {
                std::sort(verts.begin(), verts.end());
                t.dest_nodes.push_back(dn);
                for (uint32_t v : verts) t.neighbors.push_back(v);
                t.offsets.push_back(static_cast<uint32_t>(t.neighbors.size()));
            }
            push_task_split(out.tasks[key.second][node], std::move(t), max_packet_neighbors);
        }
    }
    // Combine order keeps the natural (round, slot) sequence of the graph.
    out.combine_order = plan.combine_order;
    (void)g;
    return out;
}

std::vector<std::vector<uint32_t>> build_combine_order(const FieldWidths& widths,
                                                       uint32_t num_vertices) {
    std::vector<std::vector<uint32_t>> order(widths.num_nodes);
    struct Entry {
        uint32_t round, slot, vid;
    };
    std::vector<std::vector<Entry>> tmp(widths.num_nodes);
    for (uint32_t v = 0; v < num_vertices; v++) {
        VidDecode d = decode_vid(v, widths);
        tmp[d.node_id].push_back({d.round_id, d.slot, v});
    }
    for (uint32_t p = 0; p < widths.num_nodes; p++) {
        std::sort(tmp[p].begin(), tmp[p].end(), [](const Entry& a, const Entry& b) {
            if (a.round != b.round) return a.round < b.round;
            if (a.slot != b.slot) return a.slot < b.slot;
            return a.vid < b.vid;
        });
        order[p].reserve(tmp[p].size());
        for (auto& e : tmp[p]) order[p].push_back(e.vid);
    }
    return order;
}

bool vertex_kept(uint32_t vid, double fraction, uint64_t seed) {
    if (fraction >= 1.0) return true;
    if (fraction <= 0.0) return false;
    double u = (mix64(seed, vid) >> 11) * 0x1.0p-53;
    return u < fraction;
}

PartitionPlan subsample_vertices(const PartitionPlan& plan, double fraction, uint64_t seed) {
    if (fraction >= 1.0) return plan;
    PartitionPlan out;
    out.widths = plan.widths;
    out.num_vertices = plan.num_vertices;
    out.rounds = plan.rounds;
    out.single_round = plan.single_round;
    out.tasks.assign(plan.rounds,
                     std::vector<std::vector<MulticastTask>>(plan.widths.num_nodes));
    for (uint32_t r = 0; r < plan.rounds; r++) {
        for (uint32_t p = 0; p < plan.widths.num_nodes; p++) {
            for (const auto& t : plan.tasks[r][p]) {
                MulticastTask nt;
                nt.source_vid = t.source_vid;
                nt.round_id = t.round_id;
                nt.offsets.push_back(0);
                for (size_t i = 0; i < t.dest_nodes.size(); i++) {
                    size_t before = nt.neighbors.size();
                    for (uint32_t k = t.offsets[i]; k < t.offsets[i + 1]; k++)
                        if (vertex_kept(t.neighbors[k], fraction, seed))
                            nt.neighbors.push_back(t.neighbors[k]);
                    if (nt.neighbors.size() > before) {
                        nt.dest_nodes.push_back(t.dest_nodes[i]);
                        nt.offsets.push_back(static_cast<uint32_t>(nt.neighbors.size()));
                    }
                }
                if (!nt.dest_nodes.empty()) out.tasks[r][p].push_back(std::move(nt));
            }
        }
    }
    out.combine_order.assign(plan.combine_order.size(), {});
    for (size_t p = 0; p < plan.combine_order.size(); p++)
        for (uint32_t v : plan.combine_order[p])
            if (vertex_kept(v, fraction, seed)) out.combine_order[p].push_back(v);
    return out;
}

namespace {

constexpr char kPlanMagic[4] = {'M', 'G', 'P', 'P'};
constexpr uint32_t kPlanVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw ParseError("plan file: truncated");
    return v;
}

void put_vec(std::ostream& out, const std::vector<uint32_t>& v) {
    put<uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * 4));
}

std::vector<uint32_t> get_vec(std::istream& in) {
    uint64_t n = get<uint64_t>(in);
    std::vector<uint32_t> v(n);
    if (n && !in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 4)))
        throw ParseError("plan file: truncated");
    return v;
}

} // namespace

void save_plan(std::ostream& out, const PartitionPlan& plan) {
    out.write(kPlanMagic, 4);
    put<uint32_t>(out, kPlanVersion);
    put<uint32_t>(out, plan.widths.n);
    put<uint32_t>(out, plan.widths.x);
    put<uint32_t>(out, plan.widths.num_nodes);
    put<uint64_t>(out, plan.widths.agg_buffer_bytes);
    put<uint64_t>(out, plan.widths.replica_bytes);
    put<double>(out, plan.widths.alpha);
    put<uint32_t>(out, plan.num_vertices);
    put<uint32_t>(out, plan.rounds);
    put<uint8_t>(out, plan.single_round ? 1 : 0);
    for (uint32_t r = 0; r < plan.rounds; r++) {
        for (uint32_t p = 0; p < plan.widths.num_nodes; p++) {
            const auto& ts = plan.tasks[r][p];
            put<uint64_t>(out, ts.size());
            for (const auto& t : ts) {
                put<uint32_t>(out, t.source_vid);
                put<uint32_t>(out, t.round_id);
                put_vec(out, t.dest_nodes);
                put_vec(out, t.offsets);
                put_vec(out, t.neighbors);
            }
        }
    }
    for (const auto& ord : plan.combine_order) put_vec(out, ord);
}

PartitionPlan load_plan(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kPlanMagic, 4) != 0)
        throw ParseError("plan file: bad magic");
    if (get<uint32_t>(in) != kPlanVersion) throw ParseError("plan file: unknown version");
    PartitionPlan plan;
    plan.widths.n = get<uint32_t>(in);
    plan.widths.x = get<uint32_t>(in);
    plan.widths.num_nodes = get<uint32_t>(in);
    plan.widths.agg_buffer_bytes = get<uint64_t>(in);
    plan.widths.replica_bytes = get<uint64_t>(in);
    plan.widths.alpha = get<double>(in);
    plan.num_vertices = get<uint32_t>(in);
    plan.rounds = get<uint32_t>(in);
    plan.single_round = get<uint8_t>(in) != 0;
    plan.tasks.assign(plan.rounds,
                      std::vector<std::vector<MulticastTask>>(plan.widths.num_nodes));
    for (uint32_t r = 0; r < plan.rounds; r++) {
        for (uint32_t p = 0; p < plan.widths.num_nodes; p++) {
            uint64_t n = get<uint64_t>(in);
            auto& ts = plan.tasks[r][p];
            ts.resize(n);
            for (auto& t : ts) {
                t.source_vid = get<uint32_t>(in);
                t.round_id = get<uint32_t>(in);
                t.dest_nodes = get_vec(in);
                t.offsets = get_vec(in);
                t.neighbors = get_vec(in);
            }
        }
    }
    plan.combine_order.resize(plan.widths.num_nodes);
    for (auto& ord : plan.combine_order) ord = get_vec(in);
    return plan;
}

void save_plan_file(const std::string& path, const PartitionPlan& plan) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open plan file for writing: " + path);
    save_plan(out, plan);
}

PartitionPlan load_plan_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open plan file: " + path);
    return load_plan(in);
}

} // namespace mgsim
