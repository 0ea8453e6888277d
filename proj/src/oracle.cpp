#include "mgsim/oracle.hpp"
#include "mgsim/graph.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace mgsim {

TraceData parse_trace(std::istream& in) {
    TraceData t;
    std::string line;
    uint64_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        char tag;
        ls >> tag;
        if (tag == 'C') {
            std::string key, value;
            ls >> key >> value;
            if (key == "nodes") t.nodes = static_cast<uint32_t>(std::stoul(value));
            else if (key == "feature_len") t.feature_len = static_cast<uint32_t>(std::stoul(value));
            else if (key == "feature_len_out")
                t.feature_len_out = static_cast<uint32_t>(std::stoul(value));
            else if (key == "layers") t.layers = static_cast<uint32_t>(std::stoul(value));
        } else if (tag == 'H') {
            TraceData::Hop h{};
            ls >> h.cycle >> h.src >> h.dst >> h.kind >> h.svid >> h.bytes;
            if (!ls) throw ParseError("trace: truncated hop record at line " +
                                      std::to_string(line_no));
            t.hops.push_back(h);
        } else if (tag == 'D') {
            TraceData::Dram d{};
            ls >> d.cycle >> d.node >> d.dir >> d.purpose >> d.bytes;
            if (!ls) throw ParseError("trace: truncated dram record at line " +
                                      std::to_string(line_no));
            t.drams.push_back(d);
        } else {
            throw ParseError("trace: unknown record tag at line " + std::to_string(line_no));
        }
    }
    if (t.nodes == 0) throw ParseError("trace: missing node count");
    return t;
}

std::pair<uint64_t, uint64_t> classify_transmission_redundancy(const TraceData& trace) {
    // Count payload arrivals per (source vertex, node); redundancy per pair
    // is arrivals minus the one essential first touch.
    std::map<std::pair<uint32_t, uint32_t>, uint64_t> arrivals;
    uint64_t total = 0;
    for (const auto& h : trace.hops) {
        if (h.kind == 'E') continue;
        arrivals[{h.svid, h.dst}]++;
        total++;
    }
    uint64_t redundant = 0;
    for (auto& [key, count] : arrivals) redundant += count - 1;
    return {redundant, total};
}

std::pair<uint64_t, uint64_t> classify_dram_redundancy(const TraceData& trace) {
    uint64_t redundant = 0, total = 0;
    for (const auto& d : trace.drams) {
        total += d.bytes;
        if (d.purpose == "spill" || d.purpose == "reload") redundant += d.bytes;
    }
    return {redundant, total};
}

OracleResult verify_trace(const TraceData& trace, const MetricsReport& engine_report) {
    OracleResult out;
    if (trace.layers != 1)
        throw ConfigError("oracle: only single-layer traces can be verified");
    if (trace.nodes != engine_report.per_node.size()) {
        out.mismatches.push_back("node count differs between trace and report");
        return out;
    }

    out.derived.per_node.resize(trace.nodes);
    uint64_t payload_per_pkt = uint64_t(trace.feature_len) * 4;
    std::vector<std::map<uint32_t, bool>> seen(trace.nodes);
    for (const auto& h : trace.hops) {
        NodeCounters& src = out.derived.per_node.at(h.src);
        src.packet_count++;
        if (h.kind == 'E') {
            src.control_bytes_hops += h.bytes;
            continue;
        }
        src.payload_bytes_hops += payload_per_pkt;
        src.metadata_bytes_hops += h.bytes - payload_per_pkt;
        NodeCounters& dst = out.derived.per_node.at(h.dst);
        dst.total_payload_arrivals++;
        auto [it, fresh] = seen[h.dst].emplace(h.svid, true);
        if (!fresh) dst.redundant_payload_arrivals++;
    }
    for (const auto& d : trace.drams) {
        NodeCounters& c = out.derived.per_node.at(d.node);
        if (d.dir == 'R')
            c.dram_read_bytes += d.bytes;
        else
            c.dram_write_bytes += d.bytes;
        if (d.purpose == "spill") {
            c.replica_spill_bytes += d.bytes;
            c.redundant_dram_bytes += d.bytes;
        } else if (d.purpose == "reload") {
            c.redundant_dram_bytes += d.bytes;
        }
    }

    auto diff = [&](const std::string& where, const char* what, uint64_t got, uint64_t want) {
        if (got != want) {
            std::ostringstream msg;
            msg << where << " " << what << ": oracle " << got << " vs engine " << want;
            out.mismatches.push_back(msg.str());
        }
    };
    for (uint32_t p = 0; p < trace.nodes; p++) {
        const NodeCounters& o = out.derived.per_node[p];
        const NodeCounters& e = engine_report.per_node[p];
        std::string where = "node " + std::to_string(p);
        diff(where, "payload_bytes_hops", o.payload_bytes_hops, e.payload_bytes_hops);
        diff(where, "metadata_bytes_hops", o.metadata_bytes_hops, e.metadata_bytes_hops);
        diff(where, "control_bytes_hops", o.control_bytes_hops, e.control_bytes_hops);
        diff(where, "packet_count", o.packet_count, e.packet_count);
        diff(where, "total_payload_arrivals", o.total_payload_arrivals,
             e.total_payload_arrivals);
        diff(where, "redundant_payload_arrivals", o.redundant_payload_arrivals,
             e.redundant_payload_arrivals);
        diff(where, "dram_read_bytes", o.dram_read_bytes, e.dram_read_bytes);
        diff(where, "dram_write_bytes", o.dram_write_bytes, e.dram_write_bytes);
        diff(where, "replica_spill_bytes", o.replica_spill_bytes, e.replica_spill_bytes);
        diff(where, "redundant_dram_bytes", o.redundant_dram_bytes, e.redundant_dram_bytes);
    }
    return out;
}

OracleResult verify_trace_file(const std::string& trace_path,
                               const MetricsReport& engine_report) {
    std::ifstream in(trace_path);
    if (!in) throw ConfigError("cannot open trace file: " + trace_path);
    TraceData trace = parse_trace(in);
    return verify_trace(trace, engine_report);
}

} // namespace mgsim
