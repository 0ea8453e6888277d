#pragma once

#include "mgsim/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mgsim {

// Vertex-id bit-field layout: bits [0,n) name the home node, bits [n,n+x)
// the aggregation-buffer slot, and bits [n+x,32) the round. x sizes a round
// so one round's replicas fit in the aggregation buffer: 2^x <= alpha*M/S.
struct FieldWidths {
    uint32_t n = 0;
    uint32_t x = 0;
    uint32_t num_nodes = 1;
    uint64_t agg_buffer_bytes = 1;  // M
    uint64_t replica_bytes = 1;     // S
    double alpha = 0.75;
};

FieldWidths compute_field_widths(uint32_t num_nodes, uint64_t agg_buffer_bytes,
                                 uint64_t replica_bytes, double alpha);

struct VidDecode {
    uint32_t node_id = 0;
    uint32_t slot = 0;
    uint32_t round_id = 0;
};

inline VidDecode decode_vid(uint32_t vid, const FieldWidths& w) {
    VidDecode d;
    d.node_id = vid & ((1u << w.n) - 1);
    d.slot = (vid >> w.n) & ((1u << w.x) - 1);
    d.round_id = (w.n + w.x) >= 32 ? 0 : (vid >> (w.n + w.x));
    return d;
}

inline uint32_t encode_vid(const VidDecode& d, const FieldWidths& w) {
    return (d.round_id << (w.n + w.x)) | (d.slot << w.n) | d.node_id;
}

inline uint32_t home_node(uint32_t vid, const FieldWidths& w) {
    return vid & ((1u << w.n) - 1);
}

// One source vertex's multicast metadata for one round: the destination
// node list, per-node offsets, and the concatenated destination vertices.
struct MulticastTask {
    uint32_t source_vid = 0;
    uint32_t round_id = 0;
    std::vector<uint32_t> dest_nodes;  // sorted ascending
    std::vector<uint32_t> offsets;     // |dest_nodes|+1
    std::vector<uint32_t> neighbors;   // ascending within each node slice
};

struct PartitionPlan {
    FieldWidths widths;
    uint32_t num_vertices = 0;
    uint32_t rounds = 1;
    bool single_round = false;  // whole-graph plan used by the no-round models
    // tasks[round][source_node] -> tasks ordered by (source_vid, first neighbor)
    std::vector<std::vector<std::vector<MulticastTask>>> tasks;
    // per node, local vertices ordered by (round, slot)
    std::vector<std::vector<uint32_t>> combine_order;
};

// Builds the per-round multicast metadata from the in-CSR. Every in-coming
// edge of vertex v lands in the task of its source for round(v); tasks with
// more than max_packet_neighbors destination entries are split.
PartitionPlan build_partition_plan(const CsrGraph& g, const FieldWidths& widths,
                                   uint32_t max_packet_neighbors = 1024);

// Whole-graph variant: one round spanning everything, used by the models
// that do not execute in rounds.
PartitionPlan build_single_round_plan(const CsrGraph& g, uint32_t num_nodes,
                                      uint32_t max_packet_neighbors = UINT32_MAX);

// Collapses the plan's natural rounds into at most `rounds` buckets of
// contiguous round ids. Exploration knob; the buffer-fit guarantee only
// holds for the natural round count.
PartitionPlan override_rounds(const PartitionPlan& plan, const CsrGraph& g,
                              uint32_t rounds, uint32_t max_packet_neighbors);

std::vector<std::vector<uint32_t>> build_combine_order(const FieldWidths& widths,
                                                       uint32_t num_vertices);

// Deterministic destination-vertex sampling: tasks keep only neighbors whose
// destination is in the sample, and sampled-out vertices are never combined.
bool vertex_kept(uint32_t vid, double fraction, uint64_t seed);
PartitionPlan subsample_vertices(const PartitionPlan& plan, double fraction, uint64_t seed);

// Plan dump/restore ("MGPP"), so partitioning can run once per dataset.
void save_plan(std::ostream& out, const PartitionPlan& plan);
PartitionPlan load_plan(std::istream& in);
void save_plan_file(const std::string& path, const PartitionPlan& plan);
PartitionPlan load_plan_file(const std::string& path);

} // namespace mgsim
