#include "mgsim/partition.hpp"
#include "mgsim/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace mgsim;

namespace {

CsrGraph rmat_graph(uint32_t scale, uint32_t degree, uint64_t seed, uint32_t f_in = 64,
                    uint32_t f_out = 16) {
    RmatParams p;
    p.scale = scale;
    p.avg_degree = degree;
    p.seed = seed;
    return build_csr(generate_rmat(p), f_in, f_out);
}

std::set<std::pair<uint32_t, uint32_t>> plan_edges(const PartitionPlan& plan) {
    std::set<std::pair<uint32_t, uint32_t>> out;
    for (const auto& per_round : plan.tasks)
        for (const auto& per_node : per_round)
            for (const auto& t : per_node)
                for (uint32_t v : t.neighbors) out.emplace(t.source_vid, v);
    return out;
}

uint64_t plan_neighbor_count(const PartitionPlan& plan) {
    uint64_t n = 0;
    for (const auto& per_round : plan.tasks)
        for (const auto& per_node : per_round)
            for (const auto& t : per_node) n += t.neighbors.size();
    return n;
}

} // namespace

TEST_CASE("field widths match the worked example") {
    FieldWidths w = compute_field_widths(16, 60, 20, 0.75);
    CHECK(w.n == 4);
    CHECK(w.x == 1);
}

TEST_CASE("field widths degenerate and derived cases") {
    FieldWidths one = compute_field_widths(1, 20, 20, 1.0);
    CHECK(one.n == 0);
    CHECK(one.x == 0);

    FieldWidths big = compute_field_widths(16, 1ull << 20, 2048, 0.75);
    CHECK(big.x == 8);  // 0.75 * 1 MiB / 2048 = 384, and 256 <= 384 < 512
}

TEST_CASE("field widths reject impossible configurations") {
    CHECK_THROWS_AS(compute_field_widths(16, 16, 64, 0.75), ConfigError);
    CHECK_THROWS_AS(compute_field_widths(12, 1024, 64, 0.75), ConfigError);
    CHECK_THROWS_AS(compute_field_widths(16, 1024, 64, 1.5), ConfigError);
}

TEST_CASE("vid decode matches the round partition figure") {
    FieldWidths w = compute_field_widths(16, 60, 20, 0.75);
    VidDecode d54 = decode_vid(54, w);
    CHECK(d54.node_id == 6);
    CHECK(d54.slot == 1);
    CHECK(d54.round_id == 1);

    VidDecode d15 = decode_vid(15, w);
    CHECK(d15.node_id == 15);
    CHECK(d15.round_id == 0);

    VidDecode d44 = decode_vid(44, w);
    CHECK(d44.node_id == 12);
    CHECK(d44.round_id == 1);
}

TEST_CASE("decode and encode are mutually inverse") {
    Rng rng(99);
    for (int i = 0; i < 2000; i++) {
        FieldWidths w;
        w.num_nodes = 1u << (rng.next_below(6));
        w.n = 0;
        while ((1u << (w.n + 1)) <= w.num_nodes) w.n++;
        w.x = static_cast<uint32_t>(rng.next_below(12));
        uint32_t vid = static_cast<uint32_t>(rng.next());
        CHECK(encode_vid(decode_vid(vid, w), w) == vid);
    }
}

TEST_CASE("single edge lands in the destination round and node") {
    EdgeList e;
    e.edges = {{0, 17}};
    e.num_vertices = 32;
    CsrGraph g = build_csr(e, 64, 16);
    FieldWidths w = compute_field_widths(16, 60, 20, 0.75);
    PartitionPlan plan = build_partition_plan(g, w);
    REQUIRE(plan.tasks[0][0].size() == 1);  // 17 = node 1, slot 1 -> round 0
    const MulticastTask& t = plan.tasks[0][0][0];
    CHECK(t.source_vid == 0);
    CHECK(t.round_id == 0);
    CHECK(t.dest_nodes == std::vector<uint32_t>{1});
    CHECK(t.neighbors == std::vector<uint32_t>{17});
}

TEST_CASE("multicast task for the worked multicast example") {
    // V0's feature goes to V35 and V51 on node 3, V39 on node 7, V54 on
    // node 6, all in round 1.
    EdgeList e;
    e.edges = {{0, 35}, {0, 51}, {0, 39}, {0, 54}};
    e.num_vertices = 64;
    CsrGraph g = build_csr(e, 64, 16);
    FieldWidths w = compute_field_widths(16, 60, 20, 0.75);
    PartitionPlan plan = build_partition_plan(g, w);
    REQUIRE(plan.rounds == 2);
    REQUIRE(plan.tasks[1][0].size() == 1);
    const MulticastTask& t = plan.tasks[1][0][0];
    CHECK(t.dest_nodes == std::vector<uint32_t>{3, 6, 7});
    CHECK(t.offsets == std::vector<uint32_t>{0, 2, 3, 4});
    CHECK(t.neighbors == std::vector<uint32_t>{35, 51, 54, 39});
}

TEST_CASE("plan conserves the edge set exactly") {
    CsrGraph g = rmat_graph(8, 8, 5);
    FieldWidths w = compute_field_widths(4, 4096, 256, 0.75);
    PartitionPlan plan = build_partition_plan(g, w);

    std::set<std::pair<uint32_t, uint32_t>> expected;
    for (uint32_t v = 0; v < g.num_vertices; v++)
        for (const uint32_t* u = g.in_begin(v); u != g.in_end(v); ++u) expected.emplace(*u, v);
    CHECK(plan_edges(plan) == expected);
    CHECK(plan_neighbor_count(plan) == g.num_edges);
}

TEST_CASE("round capacity: distinct destination slots per round per node") {
    CsrGraph g = rmat_graph(9, 6, 2);
    FieldWidths w = compute_field_widths(8, 1024, 64, 0.75);
    PartitionPlan plan = build_partition_plan(g, w);
    for (uint32_t r = 0; r < plan.rounds; r++) {
        std::map<uint32_t, std::set<uint32_t>> slots;  // node -> slots used
        for (const auto& per_node : plan.tasks[r])
            for (const auto& t : per_node)
                for (size_t i = 0; i < t.dest_nodes.size(); i++)
                    for (uint32_t k = t.offsets[i]; k < t.offsets[i + 1]; k++) {
                        VidDecode d = decode_vid(t.neighbors[k], w);
                        CHECK(d.node_id == t.dest_nodes[i]);
                        CHECK(d.round_id == r);
                        slots[d.node_id].insert(d.slot);
                    }
        for (auto& [node, used] : slots) CHECK(used.size() <= (1u << w.x));
    }
}

TEST_CASE("task splitting preserves the pair multiset") {
    CsrGraph g = rmat_graph(8, 16, 9);
    FieldWidths w = compute_field_widths(4, 1ull << 16, 256, 0.75);
    PartitionPlan whole = build_partition_plan(g, w, UINT32_MAX);
    PartitionPlan split = build_partition_plan(g, w, 4);
    CHECK(plan_edges(whole) == plan_edges(split));
    CHECK(plan_neighbor_count(whole) == plan_neighbor_count(split));
    for (const auto& per_round : split.tasks)
        for (const auto& per_node : per_round)
            for (const auto& t : per_node) CHECK(t.neighbors.size() <= 4);
}

TEST_CASE("combine order sorts by round then slot") {
    FieldWidths w = compute_field_widths(16, 60, 20, 0.75);
    auto order = build_combine_order(w, 64);
    // node 6 holds vids 6, 22, 38, 54: rounds 0,0,1,1 with slots 0,1,0,1
    CHECK(order[6] == std::vector<uint32_t>{6, 22, 38, 54});
    // every vertex appears exactly once across all nodes
    std::set<uint32_t> all;
    size_t total = 0;
    for (const auto& per_node : order) {
        all.insert(per_node.begin(), per_node.end());
        total += per_node.size();
    }
    CHECK(total == 64);
    CHECK(all.size() == 64);
}

TEST_CASE("plan dump and restore is lossless") {
    CsrGraph g = rmat_graph(8, 8, 5);
    FieldWidths w = compute_field_widths(4, 4096, 256, 0.75);
    PartitionPlan plan = build_partition_plan(g, w);

    std::ostringstream out;
    save_plan(out, plan);
    std::istringstream in(out.str());
    PartitionPlan back = load_plan(in);

    std::ostringstream again;
    save_plan(again, back);
    CHECK(out.str() == again.str());
    CHECK(back.rounds == plan.rounds);
    CHECK(plan_edges(back) == plan_edges(plan));
    CHECK(back.combine_order == plan.combine_order);
}

TEST_CASE("corrupt plan file is rejected") {
    std::istringstream in("not a plan");
    CHECK_THROWS_AS(load_plan(in), ParseError);
}

TEST_CASE("subsampling is deterministic and binomial") {
    CsrGraph g = rmat_graph(10, 16, 21);
    FieldWidths w = compute_field_widths(16, 1ull << 16, 256, 0.75);
    PartitionPlan plan = build_partition_plan(g, w);

    CHECK(plan_edges(subsample_vertices(plan, 1.0, 5)) == plan_edges(plan));

    PartitionPlan s1 = subsample_vertices(plan, 0.1, 5);
    PartitionPlan s2 = subsample_vertices(plan, 0.1, 5);
    CHECK(plan_edges(s1) == plan_edges(s2));

    // kept edges are exactly the edges into kept destinations
    std::set<std::pair<uint32_t, uint32_t>> expected;
    for (auto [u, v] : plan_edges(plan))
        if (vertex_kept(v, 0.1, 5)) expected.emplace(u, v);
    CHECK(plan_edges(s1) == expected);

    // expectation check: kept edges are a sum of per-vertex Bernoulli draws
    // weighted by in-degree, so the variance uses the degree second moment
    double kept = double(plan_neighbor_count(s1));
    double n = double(plan_neighbor_count(plan));
    double deg_sq = 0;
    for (uint32_t v = 0; v < g.num_vertices; v++)
        deg_sq += double(g.in_degree(v)) * g.in_degree(v);
    double sigma = std::sqrt(0.1 * 0.9 * deg_sq);
    CHECK(kept > 0.1 * n - 4 * sigma);
    CHECK(kept < 0.1 * n + 4 * sigma);
}

TEST_CASE("round override merges rounds and conserves edges") {
    CsrGraph g = rmat_graph(9, 8, 4);
    FieldWidths w = compute_field_widths(4, 2048, 256, 0.75);  // small rounds
    PartitionPlan plan = build_partition_plan(g, w);
    REQUIRE(plan.rounds > 4);
    PartitionPlan merged = override_rounds(plan, g, 4, 1024);
    CHECK(merged.rounds == 4);
    CHECK(plan_edges(merged) == plan_edges(plan));
    for (uint32_t r = 0; r < merged.rounds; r++)
        for (const auto& per_node : merged.tasks[r])
            for (const auto& t : per_node) CHECK(t.round_id == r);
}
