#include "mgsim/graph.hpp"
#include "mgsim/rng.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mgsim {

namespace {

constexpr char kEdgeMagic[4] = {'M', 'G', 'E', 'L'};

EdgeList load_text(std::istream& in) {
    EdgeList out;
    uint64_t offset = 0;  // byte offset of the current line, for error reports
    std::string line;
    uint32_t max_id = 0;
    bool any = false;
    while (std::getline(in, line)) {
        uint64_t line_start = offset;
        offset += line.size() + 1;
        size_t i = 0;
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) i++;
        if (i >= line.size() || line[i] == '#') continue;

        auto parse_u32 = [&](uint32_t& val) {
            if (i >= line.size() || line[i] < '0' || line[i] > '9')
                throw ParseError("edge list: malformed line at byte offset " +
                                 std::to_string(line_start + i));
            uint64_t v = 0;
            while (i < line.size() && line[i] >= '0' && line[i] <= '9') {
                v = v * 10 + (line[i] - '0');
                if (v > UINT32_MAX)
                    throw ParseError("edge list: vertex id overflow at byte offset " +
                                     std::to_string(line_start + i));
                i++;
            }
            val = static_cast<uint32_t>(v);
        };

        uint32_t src, dst;
        parse_u32(src);
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) i++;
        parse_u32(dst);
        out.edges.emplace_back(src, dst);
        max_id = std::max({max_id, src, dst});
        any = true;
    }
    out.num_vertices = any ? max_id + 1 : 0;
    return out;
}

EdgeList load_binary(std::istream& in) {
    EdgeList out;
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    size_t pos = 0;
    bool have_header = false;
    uint32_t header_v = 0;
    if (bytes.size() >= 16 && std::memcmp(bytes.data(), kEdgeMagic, 4) == 0) {
        have_header = true;
        std::memcpy(&header_v, bytes.data() + 8, 4);
        pos = 16;
    }
    size_t payload = bytes.size() - pos;
    if (payload % 8 != 0)
        throw ParseError("edge list: truncated binary record at byte offset " +
                         std::to_string(pos + payload - payload % 8));
    size_t n = payload / 8;
    out.edges.reserve(n);
    uint32_t max_id = 0;
    for (size_t k = 0; k < n; k++) {
        uint32_t src, dst;
        std::memcpy(&src, bytes.data() + pos + 8 * k, 4);
        std::memcpy(&dst, bytes.data() + pos + 8 * k + 4, 4);
        out.edges.emplace_back(src, dst);
        max_id = std::max({max_id, src, dst});
    }
    out.num_vertices = have_header ? header_v : (n ? max_id + 1 : 0);
    if (have_header && out.num_vertices <= max_id && n)
        throw ParseError("edge list: header vertex count smaller than max vertex id");
    return out;
}

} // namespace

EdgeList load_edge_list(std::istream& in, EdgeListFormat format) {
    return format == EdgeListFormat::TextPairs ? load_text(in) : load_binary(in);
}

EdgeList load_edge_list_file(const std::string& path, EdgeListFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open edge list file: " + path);
    return load_edge_list(in, format);
}

void save_edge_list_binary(std::ostream& out, const EdgeList& e, bool with_header) {
    if (with_header) {
        uint32_t version = 1;
        uint32_t nv = e.num_vertices;
        uint32_t ne = static_cast<uint32_t>(e.edges.size());
        out.write(kEdgeMagic, 4);
        out.write(reinterpret_cast<const char*>(&version), 4);
        out.write(reinterpret_cast<const char*>(&nv), 4);
        out.write(reinterpret_cast<const char*>(&ne), 4);
    }
    for (auto [src, dst] : e.edges) {
        out.write(reinterpret_cast<const char*>(&src), 4);
        out.write(reinterpret_cast<const char*>(&dst), 4);
    }
}

EdgeList generate_rmat(const RmatParams& p) {
    double sum = p.a + p.b + p.c + p.d;
    if (sum < 0.999999 || sum > 1.000001)
        throw ConfigError("rmat: partition probabilities must sum to 1");
    if (p.scale > 30)
        throw ConfigError("rmat: scale above 30 not supported");

    EdgeList out;
    out.num_vertices = 1u << p.scale;
    uint64_t samples = static_cast<uint64_t>(out.num_vertices) * p.avg_degree;
    out.edges.reserve(samples);

    Rng rng(p.seed);
    double ab = p.a + p.b;
    double abc = ab + p.c;
    for (uint64_t k = 0; k < samples; k++) {
        uint32_t src = 0, dst = 0;
        for (uint32_t level = 0; level < p.scale; level++) {
            double r = rng.next_double();
            src <<= 1;
            dst <<= 1;
            if (r < p.a) {
                // top-left quadrant
            } else if (r < ab) {
                dst |= 1;
            } else if (r < abc) {
                src |= 1;
            } else {
                src |= 1;
                dst |= 1;
            }
        }
        out.edges.emplace_back(src, dst);
    }
    return out;
}

CsrGraph build_csr(const EdgeList& e, uint32_t feature_len_in, uint32_t feature_len_out) {
    CsrGraph g;
    g.num_vertices = e.num_vertices;
    g.feature_len_in = feature_len_in;
    g.feature_len_out = feature_len_out;

    // Bucket by destination, then sort+dedup each in-neighbor row.
    std::vector<uint32_t> deg(g.num_vertices, 0);
    for (auto [src, dst] : e.edges) {
        if (src >= g.num_vertices || dst >= g.num_vertices)
            throw ParseError("edge list: vertex id out of range");
        deg[dst]++;
    }
    std::vector<uint64_t> pos(g.num_vertices + 1, 0);
    for (uint32_t v = 0; v < g.num_vertices; v++) pos[v + 1] = pos[v] + deg[v];
    std::vector<uint32_t> cols(e.edges.size());
    std::vector<uint64_t> cursor(pos.begin(), pos.end() - 1);
    for (auto [src, dst] : e.edges) cols[cursor[dst]++] = src;

    g.row_offsets.assign(g.num_vertices + 1, 0);
    g.col_indices.reserve(cols.size());
    for (uint32_t v = 0; v < g.num_vertices; v++) {
        auto first = cols.begin() + static_cast<int64_t>(pos[v]);
        auto last = cols.begin() + static_cast<int64_t>(pos[v + 1]);
        std::sort(first, last);
        auto end = std::unique(first, last);
        for (auto it = first; it != end; ++it) g.col_indices.push_back(*it);
        g.row_offsets[v + 1] = g.col_indices.size();
    }
    g.num_edges = g.col_indices.size();
    return g;
}

GraphStats graph_stats(const CsrGraph& g) {
    GraphStats s;
    s.topology_bytes = g.num_edges * 4;
    s.feature_bytes = static_cast<uint64_t>(g.num_vertices) * g.feature_len_in * 4;
    for (uint32_t v = 0; v < g.num_vertices; v++)
        s.max_degree = std::max(s.max_degree, g.in_degree(v));
    s.avg_degree = g.num_vertices ? double(g.num_edges) / g.num_vertices : 0.0;
    return s;
}

} // namespace mgsim
