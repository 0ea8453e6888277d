#pragma once

#include "mgsim/node.hpp"
#include "mgsim/torus.hpp"

#include <cstdint>
#include <cstdio>
#include <iosfwd>
#include <string>
#include <vector>

namespace mgsim {

struct EnergyCoeffs {
    double network_pj_per_bit = 8.0;  // link energy
    double dram_pj_per_bit = 7.0;     // HBM energy
    double compute_pj_per_op = 0.0;
};

struct NodeCounters {
    // Traffic is attributed per link traversal: byte counters to the hop's
    // source node, arrival counters to its destination node.
    uint64_t payload_bytes_hops = 0;
    uint64_t metadata_bytes_hops = 0;
    uint64_t control_bytes_hops = 0;
    uint64_t packet_count = 0;  // link traversals departing this node

    uint64_t dram_read_bytes = 0;
    uint64_t dram_write_bytes = 0;
    uint64_t replica_spill_bytes = 0;
    uint64_t redundant_dram_bytes = 0;  // spill writes + reload reads

    uint64_t redundant_payload_arrivals = 0;
    uint64_t total_payload_arrivals = 0;

    uint64_t compute_ops = 0;
    uint64_t busy_array_cycles = 0;
    uint64_t end_signals_sent = 0;
    uint64_t aggregations = 0;
    uint64_t combinations = 0;

    double util_network = 0.0;
    double util_dram = 0.0;
    double util_compute = 0.0;
    double energy_network_pj = 0.0;
    double energy_dram_pj = 0.0;
    double energy_compute_pj = 0.0;

    uint64_t bytes_hops_total() const {
        return payload_bytes_hops + metadata_bytes_hops + control_bytes_hops;
    }
};

struct MetricsReport {
    std::vector<std::pair<std::string, std::string>> config_echo;
    uint64_t cycles = 0;
    std::vector<NodeCounters> per_node;
    NodeCounters total;

    // Recomputes totals, utilizations, and energy from the per-node
    // counters. `port_bw` and `dram_bw` are bytes per cycle.
    void finalize(double port_bw, double dram_bw, uint32_t arrays, const EnergyCoeffs& coeffs);
};

void apply_energy(NodeCounters& c, const EnergyCoeffs& coeffs);

enum class ReportFormat { StructuredText, CommaSeparated };

std::string emit_report(const MetricsReport& report, ReportFormat format);
MetricsReport parse_report_text(const std::string& text);
std::string csv_header();
std::string csv_row(const MetricsReport& report);

// Line-delimited run trace, consumed by the independent metrics oracle.
//   C <key> <value>                          configuration echo
//   H <cycle> <src> <dst> <M|U|E> <svid> <bytes>   one line per link traversal
//   D <cycle> <node> <R|W> <purpose> <bytes>       one line per DRAM transfer
class TraceWriter {
public:
    TraceWriter() = default;
    explicit TraceWriter(const std::string& path);
    ~TraceWriter();
    TraceWriter(const TraceWriter&) = delete;
    TraceWriter& operator=(const TraceWriter&) = delete;

    bool enabled() const { return file_ != nullptr; }
    void config(const std::string& key, const std::string& value);
    void hop(uint64_t cycle, uint32_t src, uint32_t dst, PacketKind kind, uint32_t svid,
             uint64_t bytes);
    void dram(uint64_t cycle, uint32_t node, DramDir dir, DramPurpose purpose, uint64_t bytes);
    void close();

private:
    std::FILE* file_ = nullptr;
};

} // namespace mgsim
