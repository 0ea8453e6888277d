#pragma once

#include "mgsim/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mgsim {

// Parsed run trace: one Hop per link traversal, one Dram per transfer.
struct TraceData {
    uint32_t nodes = 0;
    uint32_t feature_len = 0;
    uint32_t feature_len_out = 0;
    uint32_t layers = 1;

    struct Hop {
        uint64_t cycle;
        uint32_t src, dst;
        char kind;  // 'M' multicast, 'U' unicast, 'E' end signal
        uint32_t svid;
        uint64_t bytes;
    };
    struct Dram {
        uint64_t cycle;
        uint32_t node;
        char dir;  // 'R' or 'W'
        std::string purpose;
        uint64_t bytes;
    };
    std::vector<Hop> hops;
    std::vector<Dram> drams;
};

TraceData parse_trace(std::istream& in);

// A payload's first arrival at a node (destination or transit) is essential;
// every later arrival of the same payload at that node is redundant.
std::pair<uint64_t, uint64_t> classify_transmission_redundancy(const TraceData& trace);

// Replica spill and reload traffic is redundant; feature, topology, weight,
// and result traffic is essential.
std::pair<uint64_t, uint64_t> classify_dram_redundancy(const TraceData& trace);

// Recomputes every traffic and DRAM counter from the trace alone and diffs
// them against the engine's report. An empty mismatch list means the engine
// counters are exactly reproducible.
struct OracleResult {
    MetricsReport derived;
    std::vector<std::string> mismatches;
    bool ok() const { return mismatches.empty(); }
};

OracleResult verify_trace(const TraceData& trace, const MetricsReport& engine_report);
OracleResult verify_trace_file(const std::string& trace_path, const MetricsReport& engine_report);

} // namespace mgsim
