#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsim {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Directed edge list as ingested. Duplicates and self-loops are allowed
// here; they are resolved when the CSR is built.
struct EdgeList {
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    uint32_t num_vertices = 0;
};

// Immutable compressed-sparse-row view of the graph, rows indexed by
// destination vertex and holding sorted, deduplicated in-coming neighbors.
struct CsrGraph {
    std::vector<uint64_t> row_offsets;   // |V|+1
    std::vector<uint32_t> col_indices;   // |E|, in-neighbors per destination
    uint32_t num_vertices = 0;
    uint64_t num_edges = 0;
    uint32_t feature_len_in = 512;
    uint32_t feature_len_out = 128;
    uint32_t element_bytes = 4;

    uint32_t in_degree(uint32_t v) const {
        return static_cast<uint32_t>(row_offsets[v + 1] - row_offsets[v]);
    }
    const uint32_t* in_begin(uint32_t v) const { return col_indices.data() + row_offsets[v]; }
    const uint32_t* in_end(uint32_t v) const { return col_indices.data() + row_offsets[v + 1]; }
};

struct GraphStats {
    double avg_degree = 0.0;
    uint32_t max_degree = 0;
    uint64_t topology_bytes = 0;  // |E| * 4
    uint64_t feature_bytes = 0;   // |V| * |h0| * 4
};

struct RmatParams {
    uint32_t scale = 12;
    uint32_t avg_degree = 32;
    double a = 0.57, b = 0.19, c = 0.19, d = 0.05;
    uint64_t seed = 1;
};

enum class EdgeListFormat { TextPairs, BinaryU32Pairs };

// Text format: one "src dst" pair per line, '#' comment lines ignored.
// Binary format: little-endian u32 pairs, with an optional 16-byte header
// {magic "MGEL", version u32, num_vertices u32, num_edges u32}.
EdgeList load_edge_list(std::istream& in, EdgeListFormat format);
EdgeList load_edge_list_file(const std::string& path, EdgeListFormat format);
void save_edge_list_binary(std::ostream& out, const EdgeList& e, bool with_header);

EdgeList generate_rmat(const RmatParams& p);

CsrGraph build_csr(const EdgeList& e, uint32_t feature_len_in, uint32_t feature_len_out);

GraphStats graph_stats(const CsrGraph& g);

} // namespace mgsim
