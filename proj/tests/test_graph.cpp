#include "mgsim/graph.hpp"
#include "mgsim/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace mgsim;

TEST_CASE("text edge list parses pairs and comments") {
    std::istringstream in("# comment\n0 1\n1 2\n\n  # indented comment\n2\t0\n");
    EdgeList e = load_edge_list(in, EdgeListFormat::TextPairs);
    REQUIRE(e.edges.size() == 3);
    CHECK(e.edges[0] == std::pair<uint32_t, uint32_t>{0, 1});
    CHECK(e.edges[1] == std::pair<uint32_t, uint32_t>{1, 2});
    CHECK(e.edges[2] == std::pair<uint32_t, uint32_t>{2, 0});
    CHECK(e.num_vertices == 3);
}

TEST_CASE("empty stream gives an empty edge list") {
    std::istringstream in("");
    EdgeList e = load_edge_list(in, EdgeListFormat::TextPairs);
    CHECK(e.edges.empty());
    CHECK(e.num_vertices == 0);
}

TEST_CASE("malformed text reports a byte offset") {
    std::istringstream in("0 1\nbroken line\n");
    try {
        load_edge_list(in, EdgeListFormat::TextPairs);
        FAIL("expected parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("byte offset 4") != std::string::npos);
    }
}

TEST_CASE("binary edge list round-trips with and without header") {
    EdgeList e;
    e.edges = {{0, 5}, {5, 2}, {2, 2}};
    e.num_vertices = 9;  // header carries a count above max id + 1

    for (bool header : {false, true}) {
        std::ostringstream out;
        save_edge_list_binary(out, e, header);
        std::istringstream in(out.str());
        EdgeList back = load_edge_list(in, EdgeListFormat::BinaryU32Pairs);
        CHECK(back.edges == e.edges);
        CHECK(back.num_vertices == (header ? 9 : 6));
    }
}

TEST_CASE("truncated binary record is a parse error") {
    std::string bytes("\x01\x00\x00\x00\x02\x00\x00", 7);
    std::istringstream in(bytes);
    CHECK_THROWS_AS(load_edge_list(in, EdgeListFormat::BinaryU32Pairs), ParseError);
}

TEST_CASE("rmat sample count and determinism") {
    RmatParams p;
    p.scale = 10;
    p.avg_degree = 32;
    p.seed = 42;
    EdgeList a = generate_rmat(p);
    CHECK(a.num_vertices == 1024);
    CHECK(a.edges.size() == 1024ull * 32);
    EdgeList b = generate_rmat(p);
    CHECK(a.edges == b.edges);

    p.seed = 43;
    EdgeList c = generate_rmat(p);
    CHECK(a.edges != c.edges);
}

TEST_CASE("rmat rejects bad probabilities") {
    RmatParams p;
    p.a = 0.5;
    p.b = 0.1;
    p.c = 0.1;
    p.d = 0.1;
    CHECK_THROWS_AS(generate_rmat(p), ConfigError);
}

TEST_CASE("rmat degree distribution is skewed") {
    RmatParams p;
    p.scale = 10;
    p.avg_degree = 32;
    p.seed = 7;
    CsrGraph g = build_csr(generate_rmat(p), 16, 4);
    // independent histogram over the generated degrees
    uint32_t max_deg = 0;
    uint64_t sum = 0;
    for (uint32_t v = 0; v < g.num_vertices; v++) {
        max_deg = std::max(max_deg, g.in_degree(v));
        sum += g.in_degree(v);
    }
    double avg = double(sum) / g.num_vertices;
    CHECK(max_deg > 4 * avg);
}

TEST_CASE("csr build dedups and sorts incoming rows") {
    EdgeList e;
    e.edges = {{0, 1}, {0, 1}, {2, 1}};
    e.num_vertices = 3;
    CsrGraph g = build_csr(e, 8, 8);
    CHECK(g.num_edges == 2);
    REQUIRE(g.in_degree(1) == 2);
    CHECK(g.in_begin(1)[0] == 0);
    CHECK(g.in_begin(1)[1] == 2);
}

TEST_CASE("csr of an empty edge list has empty rows") {
    EdgeList e;
    e.num_vertices = 4;
    CsrGraph g = build_csr(e, 8, 8);
    CHECK(g.num_edges == 0);
    CHECK(g.row_offsets == std::vector<uint64_t>{0, 0, 0, 0, 0});
}

TEST_CASE("csr agrees with a brute-force scan of the edge list") {
    RmatParams p;
    p.scale = 10;
    p.avg_degree = 8;
    p.seed = 3;
    EdgeList e = generate_rmat(p);
    CsrGraph g = build_csr(e, 8, 8);

    std::set<std::pair<uint32_t, uint32_t>> dedup(e.edges.begin(), e.edges.end());
    CHECK(g.num_edges == dedup.size());

    uint64_t degree_sum = 0;
    for (uint32_t v = 0; v < g.num_vertices; v++) {
        degree_sum += g.in_degree(v);
        CHECK(g.row_offsets[v] <= g.row_offsets[v + 1]);
    }
    CHECK(degree_sum == g.num_edges);
    CHECK(g.row_offsets.back() == g.num_edges);

    // round-trip: CSR rows reproduce the deduplicated edge multiset
    std::set<std::pair<uint32_t, uint32_t>> back;
    for (uint32_t v = 0; v < g.num_vertices; v++)
        for (const uint32_t* u = g.in_begin(v); u != g.in_end(v); ++u)
            back.emplace(*u, v);
    CHECK(back == dedup);
}

TEST_CASE("graph stats byte formulas") {
    RmatParams p;
    p.scale = 8;
    p.avg_degree = 4;
    p.seed = 1;
    CsrGraph g = build_csr(generate_rmat(p), 512, 128);
    GraphStats s = graph_stats(g);
    CHECK(s.topology_bytes == g.num_edges * 4);
    CHECK(s.feature_bytes == uint64_t(g.num_vertices) * 512 * 4);
    CHECK(s.avg_degree == doctest::Approx(double(g.num_edges) / g.num_vertices));
}
