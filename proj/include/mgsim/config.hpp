#pragma once

#include "mgsim/engine.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mgsim {

// Key-value experiment configuration with optional sweep axes. Unknown keys
// and out-of-range values are configuration errors naming the key.
struct ExperimentSpec {
    // graph source: a file, or synthetic parameters when no file is given
    std::string graph_file;
    std::string graph_format = "text";  // text | binary
    std::string plan_file;  // pre-built round partition plan, optional
    RmatParams rmat;
    uint32_t feature_len = 512;
    uint32_t feature_len_out = 128;

    uint32_t nodes = 16;
    std::vector<Model> models{Model::TmmSrem};
    double network_bandwidth_gbps = 600.0;
    double dram_bandwidth_gbps = 256.0;
    uint32_t link_latency_cycles = 500;
    uint32_t dram_latency_cycles = 100;
    uint64_t routing_buffer_bytes = 3ull << 19;
    uint64_t agg_buffer_bytes = 1ull << 20;
    uint64_t edge_buffer_bytes = 128ull << 10;
    uint64_t weight_buffer_bytes = 2ull << 20;
    uint64_t combination_buffer_bytes = 256ull << 10;
    uint64_t send_buffer_bytes = 512ull << 10;
    uint64_t loader_buffer_bytes = 896ull << 10;
    uint32_t arrays = 8;
    uint32_t lanes = 128;
    double alpha = 0.75;
    uint32_t max_packet_neighbors = 1024;
    uint32_t stress_period = 64;
    uint64_t seed = 1;
    uint32_t layers = 1;
    double sample_fraction = 1.0;
    uint32_t rounds_override = 0;
    uint32_t repetitions = 1;
    EnergyCoeffs energy;
    std::string out = "runs.csv";

    // axis name -> values, expanded as a cartesian product in a fixed order
    std::map<std::string, std::vector<double>> sweeps;
};

ExperimentSpec parse_config(std::istream& in);
ExperimentSpec parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentSpec& spec);
uint64_t config_hash(const ExperimentSpec& spec);

// One fully-resolved run of the sweep expansion.
struct RunPoint {
    ExperimentSpec spec;  // base with sweep values substituted
    Model model = Model::TmmSrem;
    uint32_t repetition = 0;
    uint32_t index = 0;
};

std::vector<RunPoint> expand_runs(const ExperimentSpec& spec);

SimConfig sim_config_for(const ExperimentSpec& spec, Model model);
CsrGraph graph_for(const ExperimentSpec& spec);

struct RunOutcome {
    bool ok = false;
    bool deadlock = false;
    bool config_error = false;
    std::string csv;
    std::string report_text;
};

// Executes every run, appending one CSV row per run to `<out>` and writing
// the manifest JSON to `<out>.manifest.json` last. Returns per-run outcomes.
std::vector<RunOutcome> run_experiments(const ExperimentSpec& spec, bool trace,
                                        bool round_log, const std::string& out_override);

} // namespace mgsim
