#include "mgsim/metrics.hpp"
#include "mgsim/graph.hpp"

#include <cinttypes>
#include <cstring>
#include <sstream>

namespace mgsim {

void apply_energy(NodeCounters& c, const EnergyCoeffs& coeffs) {
    c.energy_network_pj = double(c.bytes_hops_total()) * 8.0 * coeffs.network_pj_per_bit;
    c.energy_dram_pj =
        double(c.dram_read_bytes + c.dram_write_bytes) * 8.0 * coeffs.dram_pj_per_bit;
    c.energy_compute_pj = double(c.compute_ops) * coeffs.compute_pj_per_op;
}

void MetricsReport::finalize(double port_bw, double dram_bw, uint32_t arrays,
                             const EnergyCoeffs& coeffs) {
    total = NodeCounters{};
    for (auto& n : per_node) {
        if (cycles > 0) {
            n.util_network = double(n.bytes_hops_total()) / (4.0 * port_bw * double(cycles));
            n.util_dram = double(n.dram_read_bytes + n.dram_write_bytes) /
                          (dram_bw * double(cycles));
            n.util_compute = double(n.busy_array_cycles) / (double(arrays) * double(cycles));
        }
        if (n.util_network > 1.0) n.util_network = 1.0;
        if (n.util_dram > 1.0) n.util_dram = 1.0;
        if (n.util_compute > 1.0) n.util_compute = 1.0;
        apply_energy(n, coeffs);

        total.payload_bytes_hops += n.payload_bytes_hops;
        total.metadata_bytes_hops += n.metadata_bytes_hops;
        total.control_bytes_hops += n.control_bytes_hops;
        total.packet_count += n.packet_count;
        total.dram_read_bytes += n.dram_read_bytes;
        total.dram_write_bytes += n.dram_write_bytes;
        total.replica_spill_bytes += n.replica_spill_bytes;
        total.redundant_dram_bytes += n.redundant_dram_bytes;
        total.redundant_payload_arrivals += n.redundant_payload_arrivals;
        total.total_payload_arrivals += n.total_payload_arrivals;
        total.compute_ops += n.compute_ops;
        total.busy_array_cycles += n.busy_array_cycles;
        total.end_signals_sent += n.end_signals_sent;
        total.aggregations += n.aggregations;
        total.combinations += n.combinations;
    }
    size_t nn = per_node.size();
    if (cycles > 0 && nn > 0) {
        total.util_network =
            double(total.bytes_hops_total()) / (double(nn) * 4.0 * port_bw * double(cycles));
        total.util_dram = double(total.dram_read_bytes + total.dram_write_bytes) /
                          (double(nn) * dram_bw * double(cycles));
        total.util_compute =
            double(total.busy_array_cycles) / (double(nn) * double(arrays) * double(cycles));
        if (total.util_network > 1.0) total.util_network = 1.0;
        if (total.util_dram > 1.0) total.util_dram = 1.0;
        if (total.util_compute > 1.0) total.util_compute = 1.0;
    }
    apply_energy(total, coeffs);
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_counters(std::ostringstream& out, const std::string& prefix, const NodeCounters& c) {
    auto put_u = [&](const char* k, uint64_t v) { out << prefix << k << " = " << v << "\n"; };
    auto put_d = [&](const char* k, double v) {
        out << prefix << k << " = " << fmt_double(v) << "\n";
    };
    put_u("payload_bytes_hops", c.payload_bytes_hops);
    put_u("metadata_bytes_hops", c.metadata_bytes_hops);
    put_u("control_bytes_hops", c.control_bytes_hops);
    put_u("packet_count", c.packet_count);
    put_u("dram_read_bytes", c.dram_read_bytes);
    put_u("dram_write_bytes", c.dram_write_bytes);
    put_u("replica_spill_bytes", c.replica_spill_bytes);
    put_u("redundant_dram_bytes", c.redundant_dram_bytes);
    put_u("redundant_payload_arrivals", c.redundant_payload_arrivals);
    put_u("total_payload_arrivals", c.total_payload_arrivals);
    put_u("compute_ops", c.compute_ops);
    put_u("busy_array_cycles", c.busy_array_cycles);
    put_u("end_signals_sent", c.end_signals_sent);
    put_u("aggregations", c.aggregations);
    put_u("combinations", c.combinations);
    put_d("util_network", c.util_network);
    put_d("util_dram", c.util_dram);
    put_d("util_compute", c.util_compute);
    put_d("energy_network_pj", c.energy_network_pj);
    put_d("energy_dram_pj", c.energy_dram_pj);
    put_d("energy_compute_pj", c.energy_compute_pj);
}

uint64_t parse_u64(const std::string& s) {
    return std::strtoull(s.c_str(), nullptr, 10);
}

void set_counter(NodeCounters& c, const std::string& key, const std::string& val) {
    if (key == "payload_bytes_hops") c.payload_bytes_hops = parse_u64(val);
    else if (key == "metadata_bytes_hops") c.metadata_bytes_hops = parse_u64(val);
    else if (key == "control_bytes_hops") c.control_bytes_hops = parse_u64(val);
    else if (key == "packet_count") c.packet_count = parse_u64(val);
    else if (key == "dram_read_bytes") c.dram_read_bytes = parse_u64(val);
    else if (key == "dram_write_bytes") c.dram_write_bytes = parse_u64(val);
    else if (key == "replica_spill_bytes") c.replica_spill_bytes = parse_u64(val);
    else if (key == "redundant_dram_bytes") c.redundant_dram_bytes = parse_u64(val);
    else if (key == "redundant_payload_arrivals") c.redundant_payload_arrivals = parse_u64(val);
    else if (key == "total_payload_arrivals") c.total_payload_arrivals = parse_u64(val);
    else if (key == "compute_ops") c.compute_ops = parse_u64(val);
    else if (key == "busy_array_cycles") c.busy_array_cycles = parse_u64(val);
    else if (key == "end_signals_sent") c.end_signals_sent = parse_u64(val);
    else if (key == "aggregations") c.aggregations = parse_u64(val);
    else if (key == "combinations") c.combinations = parse_u64(val);
    else if (key == "util_network") c.util_network = std::strtod(val.c_str(), nullptr);
    else if (key == "util_dram") c.util_dram = std::strtod(val.c_str(), nullptr);
    else if (key == "util_compute") c.util_compute = std::strtod(val.c_str(), nullptr);
    else if (key == "energy_network_pj") c.energy_network_pj = std::strtod(val.c_str(), nullptr);
    else if (key == "energy_dram_pj") c.energy_dram_pj = std::strtod(val.c_str(), nullptr);
    else if (key == "energy_compute_pj") c.energy_compute_pj = std::strtod(val.c_str(), nullptr);
    else throw ParseError("report: unknown counter " + key);
}

} // namespace

std::string emit_report(const MetricsReport& report, ReportFormat format) {
    if (format == ReportFormat::CommaSeparated) {
        return csv_header() + "\n" + csv_row(report) + "\n";
    }
    std::ostringstream out;
    out << "mgsim-report v1\n";
    for (auto& [k, v] : report.config_echo) out << "config." << k << " = " << v << "\n";
    out << "cycles = " << report.cycles << "\n";
    out << "nodes = " << report.per_node.size() << "\n";
    for (size_t i = 0; i < report.per_node.size(); i++) {
        std::string prefix = "node." + std::to_string(i) + ".";
        emit_counters(out, prefix, report.per_node[i]);
    }
    emit_counters(out, "total.", report.total);
    out << "end\n";
    return out.str();
}

MetricsReport parse_report_text(const std::string& text) {
    MetricsReport report;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "mgsim-report v1")
        throw ParseError("report: bad header");
    while (std::getline(in, line)) {
        if (line == "end") break;
        auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ParseError("report: malformed line: " + line);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 3);
        if (key.rfind("config.", 0) == 0) {
            report.config_echo.emplace_back(key.substr(7), val);
        } else if (key == "cycles") {
            report.cycles = parse_u64(val);
        } else if (key == "nodes") {
            report.per_node.resize(parse_u64(val));
        } else if (key.rfind("node.", 0) == 0) {
            auto dot = key.find('.', 5);
            size_t idx = parse_u64(key.substr(5, dot - 5));
            if (idx >= report.per_node.size()) throw ParseError("report: node index out of range");
            set_counter(report.per_node[idx], key.substr(dot + 1), val);
        } else if (key.rfind("total.", 0) == 0) {
            set_counter(report.total, key.substr(6), val);
        } else {
            throw ParseError("report: unknown key " + key);
        }
    }
    return report;
}

std::string csv_header() {
    return "model,nodes,seed,cycles,payload_bytes_hops,metadata_bytes_hops,"
           "control_bytes_hops,packet_count,dram_read_bytes,dram_write_bytes,"
           "replica_spill_bytes,redundant_dram_bytes,redundant_payload_arrivals,"
           "total_payload_arrivals,aggregations,combinations,util_network,util_dram,"
           "util_compute,energy_network_pj,energy_dram_pj,energy_compute_pj";
}

std::string csv_row(const MetricsReport& report) {
    auto echo = [&](const std::string& key) -> std::string {
        for (auto& [k, v] : report.config_echo)
            if (k == key) return v;
        return "";
    };
    const NodeCounters& t = report.total;
    std::ostringstream out;
    out << echo("model") << "," << report.per_node.size() << "," << echo("seed") << ","
        << report.cycles << "," << t.payload_bytes_hops << "," << t.metadata_bytes_hops << ","
        << t.control_bytes_hops << "," << t.packet_count << "," << t.dram_read_bytes << ","
        << t.dram_write_bytes << "," << t.replica_spill_bytes << "," << t.redundant_dram_bytes
        << "," << t.redundant_payload_arrivals << "," << t.total_payload_arrivals << ","
        << t.aggregations << "," << t.combinations << "," << fmt_double(t.util_network) << ","
        << fmt_double(t.util_dram) << "," << fmt_double(t.util_compute) << ","
        << fmt_double(t.energy_network_pj) << "," << fmt_double(t.energy_dram_pj) << ","
        << fmt_double(t.energy_compute_pj);
    return out.str();
}

TraceWriter::TraceWriter(const std::string& path) {
    file_ = std::fopen(path.c_str(), "w");
    if (!file_) throw ConfigError("cannot open trace file for writing: " + path);
    std::fputs("# mgsim-trace v1\n", file_);
}

TraceWriter::~TraceWriter() { close(); }

void TraceWriter::close() {
    if (file_) {
        std::fclose(file_);
        file_ = nullptr;
    }
}

void TraceWriter::config(const std::string& key, const std::string& value) {
    if (file_) std::fprintf(file_, "C %s %s\n", key.c_str(), value.c_str());
}

void TraceWriter::hop(uint64_t cycle, uint32_t src, uint32_t dst, PacketKind kind,
                      uint32_t svid, uint64_t bytes) {
    if (!file_) return;
    char k = kind == PacketKind::ReplicaMulticast ? 'M'
             : kind == PacketKind::ReplicaUnicast ? 'U'
                                                  : 'E';
    std::fprintf(file_, "H %" PRIu64 " %u %u %c %u %" PRIu64 "\n", cycle, src, dst, k, svid,
                 bytes);
}

void TraceWriter::dram(uint64_t cycle, uint32_t node, DramDir dir, DramPurpose purpose,
                       uint64_t bytes) {
    if (!file_) return;
    std::fprintf(file_, "D %" PRIu64 " %u %c %s %" PRIu64 "\n", cycle, node,
                 dir == DramDir::Read ? 'R' : 'W', dram_purpose_name(purpose), bytes);
}

} // namespace mgsim
