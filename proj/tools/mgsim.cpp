#include "mgsim/config.hpp"
#include "mgsim/engine.hpp"
#include "mgsim/oracle.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDeadlock = 3;

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& models,
                 bool trace, bool round_log, const std::string& out) {
    mgsim::ExperimentSpec spec = mgsim::parse_config_file(config_path);
    if (!models.empty()) {
        spec.models.clear();
        for (const auto& m : models) spec.models.push_back(mgsim::parse_model(m));
    }
    auto outcomes = mgsim::run_experiments(spec, trace, round_log, out);
    bool deadlock = false, config_error = false, failed = false;
    for (const auto& o : outcomes) {
        if (o.deadlock) deadlock = true;
        if (o.config_error) config_error = true;
        if (!o.ok) failed = true;
    }
    std::string out_path = out.empty() ? spec.out : out;
    std::cerr << outcomes.size() << " run(s) completed, results in " << out_path << "\n";
    if (deadlock) return kExitDeadlock;
    if (config_error) return kExitConfig;
    return failed ? kExitFailure : kExitOk;
}

int cmd_partition(const std::string& graph_path, const std::string& format, uint32_t nodes,
                  uint64_t agg_buffer, uint32_t feature_len, double alpha,
                  uint32_t max_packet_neighbors, const std::string& out) {
    mgsim::EdgeList edges = mgsim::load_edge_list_file(
        graph_path, format == "text" ? mgsim::EdgeListFormat::TextPairs
                                     : mgsim::EdgeListFormat::BinaryU32Pairs);
    mgsim::CsrGraph g = mgsim::build_csr(edges, feature_len, feature_len / 4);
    mgsim::FieldWidths w =
        mgsim::compute_field_widths(nodes, agg_buffer, uint64_t(feature_len) * 4, alpha);
    mgsim::PartitionPlan plan = mgsim::build_partition_plan(g, w, max_packet_neighbors);
    mgsim::save_plan_file(out, plan);
    std::cerr << "plan: n=" << w.n << " x=" << w.x << " rounds=" << plan.rounds << " -> " << out
              << "\n";
    return kExitOk;
}

int cmd_oracle(const std::string& trace_path, const std::string& report_path) {
    std::ifstream rep(report_path);
    if (!rep) throw mgsim::ConfigError("cannot open report file: " + report_path);
    std::stringstream buf;
    buf << rep.rdbuf();
    mgsim::MetricsReport report = mgsim::parse_report_text(buf.str());
    mgsim::OracleResult result = mgsim::verify_trace_file(trace_path, report);
    if (result.ok()) {
        std::cout << "oracle: all traffic and DRAM counters reproduced exactly\n";
        return kExitOk;
    }
    for (const auto& m : result.mismatches) std::cout << "mismatch: " << m << "\n";
    return kExitFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-node GCN system simulator"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run configured experiments");
    std::string sim_config;
    std::vector<std::string> sim_models;
    bool sim_trace = false, sim_round_log = false;
    std::string sim_out;
    sim->add_option("--config", sim_config, "experiment configuration file")->required();
    sim->add_option("--model", sim_models, "override the configured model list");
    sim->add_flag("--trace", sim_trace, "write per-run trace and report files");
    sim->add_flag("--round-log", sim_round_log, "write round closure log");
    sim->add_option("--out", sim_out, "output CSV path (overrides config)");

    auto* part = app.add_subcommand("partition", "build and save a round partition plan");
    std::string part_graph, part_format = "text", part_out = "plan.mgpp";
    uint32_t part_nodes = 16;
    uint64_t part_agg = 1ull << 20;
    uint32_t part_flen = 512;
    double part_alpha = 0.75;
    uint32_t part_maxnb = 1024;
    part->add_option("--graph", part_graph, "edge list file")->required();
    part->add_option("--format", part_format, "text or binary");
    part->add_option("--nodes", part_nodes, "processing node count (power of two)");
    part->add_option("--agg-buffer", part_agg, "aggregation buffer capacity in bytes");
    part->add_option("--feature-len", part_flen, "input feature vector length");
    part->add_option("--alpha", part_alpha, "buffer fraction for replicas");
    part->add_option("--max-packet-neighbors", part_maxnb, "packet split threshold");
    part->add_option("--out", part_out, "plan output path");

    auto* orc = app.add_subcommand("oracle", "verify engine counters against a trace");
    std::string orc_trace, orc_report;
    orc->add_option("--trace", orc_trace, "trace file from simulate --trace")->required();
    orc->add_option("--report", orc_report, "structured-text report file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_config, sim_models, sim_trace, sim_round_log, sim_out);
        if (part->parsed())
            return cmd_partition(part_graph, part_format, part_nodes, part_agg, part_flen,
                                 part_alpha, part_maxnb, part_out);
        if (orc->parsed()) return cmd_oracle(orc_trace, orc_report);
    } catch (const mgsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mgsim::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
