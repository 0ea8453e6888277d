#pragma once

#include "mgsim/graph.hpp"
#include "mgsim/metrics.hpp"
#include "mgsim/node.hpp"
#include "mgsim/partition.hpp"
#include "mgsim/torus.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace mgsim {

// Message-passing models. The first three run as one whole-graph round with
// replica spill to DRAM permitted; the round-execution models partition by
// the vertex-id bit-fields and forbid spill (senders stall instead).
enum class Model { Oppe, Oppr, Tmm, Srem, TmmSrem };

const char* model_name(Model m);
Model parse_model(const std::string& name);

struct SimConfig {
    uint32_t num_nodes = 16;
    NodeConfig node;
    double network_bandwidth_bytes_per_cycle = 600.0;  // per node, split across 4 ports
    uint32_t link_latency_cycles = 500;
    Model model = Model::TmmSrem;
    uint32_t rounds_override = 0;  // 0 keeps the natural round count
    uint64_t seed = 1;
    uint32_t layers = 1;
    double sample_fraction = 1.0;
    uint32_t max_packet_neighbors = 1024;
    uint32_t stress_period = 64;
    double alpha = 0.75;
    EnergyCoeffs energy;

    double port_bandwidth() const { return network_bandwidth_bytes_per_cycle / 4.0; }
    bool uses_rounds() const { return model == Model::Srem || model == Model::TmmSrem; }
    bool spill_allowed() const { return !uses_rounds() || rounds_override != 0; }
};

struct SimResult {
    MetricsReport report;
    bool deadlock = false;
    std::string diagnostic;
};

// Runs the configured number of layers to completion. `plan` must be a
// rounds plan for the round-execution models; the whole-graph plan for the
// other models is built internally when none is given.
SimResult run_simulation(const SimConfig& cfg, const CsrGraph& g,
                         const PartitionPlan* plan = nullptr, TraceWriter* trace = nullptr,
                         std::ostream* round_log = nullptr);

// Builds the plan `run_simulation` needs for this config.
PartitionPlan plan_for_config(const SimConfig& cfg, const CsrGraph& g);

} // namespace mgsim
