#include "mgsim/config.hpp"
#include "mgsim/oracle.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

namespace mgsim {

namespace {

// Sweep axes expand in this order so run indices are reproducible.
const char* kSweepAxes[] = {
    "nodes",           "network_bandwidth_gbps", "dram_bandwidth_gbps",
    "link_latency_cycles", "arrays",             "routing_buffer_kib",
    "rounds_override", "feature_len",            "rmat_scale",
};

bool is_sweep_axis(const std::string& key) {
    for (const char* axis : kSweepAxes)
        if (key == axis) return true;
    return false;
}

double parse_number(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        double v = std::stod(value, &pos);
        while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) pos++;
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for key " + key + ": " + value);
    }
}

uint64_t parse_uint(const std::string& key, const std::string& value) {
    double v = parse_number(key, value);
    if (v < 0 || v != std::floor(v))
        throw ConfigError("config: key " + key + " wants a non-negative integer");
    return static_cast<uint64_t>(v);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void apply_key(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    if (key == "graph") spec.graph_file = value;
    else if (key == "plan") spec.plan_file = value;
    else if (key == "graph_format") {
        if (value != "text" && value != "binary")
            throw ConfigError("config: graph_format must be text or binary");
        spec.graph_format = value;
    } else if (key == "rmat_scale") spec.rmat.scale = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "rmat_degree") spec.rmat.avg_degree = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "rmat_a") spec.rmat.a = parse_number(key, value);
    else if (key == "rmat_b") spec.rmat.b = parse_number(key, value);
    else if (key == "rmat_c") spec.rmat.c = parse_number(key, value);
    else if (key == "rmat_d") spec.rmat.d = parse_number(key, value);
    else if (key == "rmat_seed") spec.rmat.seed = parse_uint(key, value);
    else if (key == "feature_len") spec.feature_len = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "feature_len_out")
        spec.feature_len_out = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "nodes") spec.nodes = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "models") {
        spec.models.clear();
        for (auto& m : split_list(value)) spec.models.push_back(parse_model(m));
        if (spec.models.empty()) throw ConfigError("config: models list is empty");
    } else if (key == "network_bandwidth_gbps")
        spec.network_bandwidth_gbps = parse_number(key, value);
    else if (key == "dram_bandwidth_gbps") spec.dram_bandwidth_gbps = parse_number(key, value);
    else if (key == "link_latency_cycles")
        spec.link_latency_cycles = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "dram_latency_cycles")
        spec.dram_latency_cycles = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "routing_buffer_kib") spec.routing_buffer_bytes = parse_uint(key, value) << 10;
    else if (key == "agg_buffer_kib") spec.agg_buffer_bytes = parse_uint(key, value) << 10;
    else if (key == "edge_buffer_kib") spec.edge_buffer_bytes = parse_uint(key, value) << 10;
    else if (key == "weight_buffer_kib") spec.weight_buffer_bytes = parse_uint(key, value) << 10;
    else if (key == "combination_buffer_kib")
        spec.combination_buffer_bytes = parse_uint(key, value) << 10;
    else if (key == "send_buffer_kib") spec.send_buffer_bytes = parse_uint(key, value) << 10;
    else if (key == "loader_buffer_kib") spec.loader_buffer_bytes = parse_uint(key, value) << 10;
    else if (key == "arrays") spec.arrays = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "lanes") spec.lanes = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "alpha") spec.alpha = parse_number(key, value);
    else if (key == "max_packet_neighbors")
        spec.max_packet_neighbors = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "stress_period")
        spec.stress_period = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "seed") spec.seed = parse_uint(key, value);
    else if (key == "layers") spec.layers = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "sample_fraction") spec.sample_fraction = parse_number(key, value);
    else if (key == "rounds_override")
        spec.rounds_override = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "repetitions")
        spec.repetitions = static_cast<uint32_t>(parse_uint(key, value));
    else if (key == "network_pj_per_bit") spec.energy.network_pj_per_bit = parse_number(key, value);
    else if (key == "dram_pj_per_bit") spec.energy.dram_pj_per_bit = parse_number(key, value);
    else if (key == "compute_pj_per_op") spec.energy.compute_pj_per_op = parse_number(key, value);
    else if (key == "out") spec.out = value;
    else if (key.rfind("sweep.", 0) == 0) {
        std::string axis = key.substr(6);
        if (!is_sweep_axis(axis)) throw ConfigError("config: unknown sweep axis " + axis);
        std::vector<double> vals;
        for (auto& item : split_list(value)) vals.push_back(parse_number(key, item));
        if (vals.empty()) throw ConfigError("config: empty sweep for axis " + axis);
        spec.sweeps[axis] = vals;
    } else {
        throw ConfigError("config: unknown key " + key);
    }
}

void validate(ExperimentSpec& spec) {
    auto check_pow2 = [](uint32_t n, const std::string& key) {
        if (n == 0 || (n & (n - 1)) != 0)
            throw ConfigError("config: key " + key + " must be a power of two");
    };
    check_pow2(spec.nodes, "nodes");
    if (auto it = spec.sweeps.find("nodes"); it != spec.sweeps.end())
        for (double v : it->second) check_pow2(static_cast<uint32_t>(v), "sweep.nodes");
    if (spec.sample_fraction <= 0.0 || spec.sample_fraction > 1.0)
        throw ConfigError("config: key sample_fraction must be in (0, 1]");
    if (spec.alpha <= 0.0 || spec.alpha > 1.0)
        throw ConfigError("config: key alpha must be in (0, 1]");
    double psum = spec.rmat.a + spec.rmat.b + spec.rmat.c + spec.rmat.d;
    if (psum < 0.999999 || psum > 1.000001)
        throw ConfigError("config: rmat probabilities must sum to 1");
    if (spec.repetitions == 0) throw ConfigError("config: key repetitions must be positive");
    if (spec.feature_len == 0 || spec.feature_len_out == 0)
        throw ConfigError("config: feature lengths must be positive");
    if (const char* env = std::getenv("MULTIGCN_SEED")) {
        spec.seed = std::strtoull(env, nullptr, 10);
        spec.rmat.seed = spec.seed;
    }
}

std::string fmt_num(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

ExperimentSpec parse_config(std::istream& in) {
    ExperimentSpec spec;
    std::string line;
    uint64_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: missing '=' at line " + std::to_string(line_no));
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(line_no));
        apply_key(spec, key, value);
    }
    validate(spec);
    return spec;
}

ExperimentSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

std::string serialize_config(const ExperimentSpec& spec) {
    std::ostringstream out;
    if (!spec.graph_file.empty()) {
        out << "graph = " << spec.graph_file << "\n";
        out << "graph_format = " << spec.graph_format << "\n";
    }
    if (!spec.plan_file.empty()) out << "plan = " << spec.plan_file << "\n";
    out << "rmat_scale = " << spec.rmat.scale << "\n";
    out << "rmat_degree = " << spec.rmat.avg_degree << "\n";
    out << "rmat_a = " << fmt_num(spec.rmat.a) << "\n";
    out << "rmat_b = " << fmt_num(spec.rmat.b) << "\n";
    out << "rmat_c = " << fmt_num(spec.rmat.c) << "\n";
    out << "rmat_d = " << fmt_num(spec.rmat.d) << "\n";
    out << "rmat_seed = " << spec.rmat.seed << "\n";
    out << "feature_len = " << spec.feature_len << "\n";
    out << "feature_len_out = " << spec.feature_len_out << "\n";
    out << "nodes = " << spec.nodes << "\n";
    out << "models = ";
    for (size_t i = 0; i < spec.models.size(); i++)
        out << (i ? "," : "") << model_name(spec.models[i]);
    out << "\n";
    out << "network_bandwidth_gbps = " << fmt_num(spec.network_bandwidth_gbps) << "\n";
    out << "dram_bandwidth_gbps = " << fmt_num(spec.dram_bandwidth_gbps) << "\n";
    out << "link_latency_cycles = " << spec.link_latency_cycles << "\n";
    out << "dram_latency_cycles = " << spec.dram_latency_cycles << "\n";
    out << "routing_buffer_kib = " << (spec.routing_buffer_bytes >> 10) << "\n";
    out << "agg_buffer_kib = " << (spec.agg_buffer_bytes >> 10) << "\n";
    out << "edge_buffer_kib = " << (spec.edge_buffer_bytes >> 10) << "\n";
    out << "weight_buffer_kib = " << (spec.weight_buffer_bytes >> 10) << "\n";
    out << "combination_buffer_kib = " << (spec.combination_buffer_bytes >> 10) << "\n";
    out << "send_buffer_kib = " << (spec.send_buffer_bytes >> 10) << "\n";
    out << "loader_buffer_kib = " << (spec.loader_buffer_bytes >> 10) << "\n";
    out << "arrays = " << spec.arrays << "\n";
    out << "lanes = " << spec.lanes << "\n";
    out << "alpha = " << fmt_num(spec.alpha) << "\n";
    out << "max_packet_neighbors = " << spec.max_packet_neighbors << "\n";
    out << "stress_period = " << spec.stress_period << "\n";
    out << "seed = " << spec.seed << "\n";
    out << "layers = " << spec.layers << "\n";
    out << "sample_fraction = " << fmt_num(spec.sample_fraction) << "\n";
    out << "rounds_override = " << spec.rounds_override << "\n";
    out << "repetitions = " << spec.repetitions << "\n";
    out << "network_pj_per_bit = " << fmt_num(spec.energy.network_pj_per_bit) << "\n";
    out << "dram_pj_per_bit = " << fmt_num(spec.energy.dram_pj_per_bit) << "\n";
    out << "compute_pj_per_op = " << fmt_num(spec.energy.compute_pj_per_op) << "\n";
    out << "out = " << spec.out << "\n";
    for (auto& [axis, vals] : spec.sweeps) {
        out << "sweep." << axis << " = ";
        for (size_t i = 0; i < vals.size(); i++) out << (i ? "," : "") << fmt_num(vals[i]);
        out << "\n";
    }
    return out.str();
}

uint64_t config_hash(const ExperimentSpec& spec) {
    std::string text = serialize_config(spec);
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

void apply_axis(ExperimentSpec& spec, const std::string& axis, double value) {
    if (axis == "nodes") spec.nodes = static_cast<uint32_t>(value);
    else if (axis == "network_bandwidth_gbps") spec.network_bandwidth_gbps = value;
    else if (axis == "dram_bandwidth_gbps") spec.dram_bandwidth_gbps = value;
    else if (axis == "link_latency_cycles") spec.link_latency_cycles = static_cast<uint32_t>(value);
    else if (axis == "arrays") spec.arrays = static_cast<uint32_t>(value);
    else if (axis == "routing_buffer_kib")
        spec.routing_buffer_bytes = static_cast<uint64_t>(value) << 10;
    else if (axis == "rounds_override") spec.rounds_override = static_cast<uint32_t>(value);
    else if (axis == "feature_len") spec.feature_len = static_cast<uint32_t>(value);
    else if (axis == "rmat_scale") spec.rmat.scale = static_cast<uint32_t>(value);
}

} // namespace

std::vector<RunPoint> expand_runs(const ExperimentSpec& spec) {
    std::vector<ExperimentSpec> points{spec};
    for (const char* axis : kSweepAxes) {
        auto it = spec.sweeps.find(axis);
        if (it == spec.sweeps.end()) continue;
        std::vector<ExperimentSpec> next;
        for (const auto& base : points) {
            for (double v : it->second) {
                ExperimentSpec p = base;
                apply_axis(p, axis, v);
                next.push_back(std::move(p));
            }
        }
        points = std::move(next);
    }
    std::vector<RunPoint> runs;
    uint32_t index = 0;
    for (const auto& p : points)
        for (Model m : spec.models)
            for (uint32_t rep = 0; rep < spec.repetitions; rep++)
                runs.push_back({p, m, rep, index++});
    return runs;
}

SimConfig sim_config_for(const ExperimentSpec& spec, Model model) {
    SimConfig cfg;
    cfg.num_nodes = spec.nodes;
    cfg.model = model;
    cfg.network_bandwidth_bytes_per_cycle = spec.network_bandwidth_gbps;  // 1 GHz clock
    cfg.link_latency_cycles = spec.link_latency_cycles;
    cfg.rounds_override = spec.rounds_override;
    cfg.seed = spec.seed;
    cfg.layers = spec.layers;
    cfg.sample_fraction = spec.sample_fraction;
    cfg.max_packet_neighbors = spec.max_packet_neighbors;
    cfg.stress_period = spec.stress_period;
    cfg.alpha = spec.alpha;
    cfg.energy = spec.energy;
    cfg.node.arrays = spec.arrays;
    cfg.node.lanes_per_array = spec.lanes;
    cfg.node.dram_bandwidth_bytes_per_cycle = spec.dram_bandwidth_gbps;
    cfg.node.dram_latency_cycles = spec.dram_latency_cycles;
    cfg.node.routing_buffer_bytes = spec.routing_buffer_bytes;
    cfg.node.agg_buffer_bytes = spec.agg_buffer_bytes;
    cfg.node.edge_buffer_bytes = spec.edge_buffer_bytes;
    cfg.node.weight_buffer_bytes = spec.weight_buffer_bytes;
    cfg.node.combination_buffer_bytes = spec.combination_buffer_bytes;
    cfg.node.send_buffer_bytes = spec.send_buffer_bytes;
    cfg.node.loader_buffer_bytes = spec.loader_buffer_bytes;
    return cfg;
}

CsrGraph graph_for(const ExperimentSpec& spec) {
    if (!spec.graph_file.empty()) {
        EdgeList e = load_edge_list_file(spec.graph_file, spec.graph_format == "text"
                                                              ? EdgeListFormat::TextPairs
                                                              : EdgeListFormat::BinaryU32Pairs);
        return build_csr(e, spec.feature_len, spec.feature_len_out);
    }
    return build_csr(generate_rmat(spec.rmat), spec.feature_len, spec.feature_len_out);
}

std::vector<RunOutcome> run_experiments(const ExperimentSpec& spec, bool trace, bool round_log,
                                        const std::string& out_override) {
    std::string out_path = out_override.empty() ? spec.out : out_override;
    std::vector<RunPoint> runs = expand_runs(spec);

    std::ofstream csv(out_path);
    if (!csv) throw ConfigError("cannot open output file: " + out_path);
    csv << csv_header() << "\n";
    csv.flush();

    std::ofstream rlog;
    if (round_log) {
        rlog.open(out_path + ".roundlog");
        if (!rlog) throw ConfigError("cannot open round log for writing");
    }

    std::vector<RunOutcome> outcomes;
    nlohmann::json manifest;
    manifest["tool"] = "mgsim";
    manifest["version"] = 1;
    manifest["config_hash"] = config_hash(spec);
    manifest["seed"] = spec.seed;
    manifest["runs"] = nlohmann::json::array();

    // Graphs are cached per structural key so a sweep rebuilds only when a
    // graph-shaping axis changed.
    std::map<std::string, CsrGraph> graph_cache;
    for (const RunPoint& run : runs) {
        RunOutcome outcome;
        nlohmann::json entry;
        entry["index"] = run.index;
        entry["model"] = model_name(run.model);
        entry["repetition"] = run.repetition;
        try {
            std::ostringstream key;
            key << run.spec.graph_file << "|" << run.spec.rmat.scale << "|"
                << run.spec.rmat.avg_degree << "|" << run.spec.rmat.seed << "|"
                << run.spec.feature_len << "|" << run.spec.feature_len_out;
            auto it = graph_cache.find(key.str());
            if (it == graph_cache.end())
                it = graph_cache.emplace(key.str(), graph_for(run.spec)).first;

            SimConfig cfg = sim_config_for(run.spec, run.model);
            std::optional<PartitionPlan> plan;
            if (!run.spec.plan_file.empty() && cfg.uses_rounds())
                plan = load_plan_file(run.spec.plan_file);
            std::string trace_path =
                out_path + ".run" + std::to_string(run.index) + ".trace";
            std::optional<TraceWriter> tw_opt;
            const PartitionPlan* plan_ptr = plan ? &*plan : nullptr;
            SimResult result =
                trace ? run_simulation(cfg, it->second, plan_ptr,
                                       &(tw_opt.emplace(trace_path)),
                                       round_log ? &rlog : nullptr)
                      : run_simulation(cfg, it->second, plan_ptr, nullptr,
                                       round_log ? &rlog : nullptr);
            if (tw_opt) tw_opt->close();
            outcome.deadlock = result.deadlock;
            outcome.ok = !result.deadlock;
            outcome.report_text = emit_report(result.report, ReportFormat::StructuredText);
            outcome.csv = csv_row(result.report);
            if (result.deadlock) {
                entry["status"] = "deadlock";
                entry["diagnostic"] = result.diagnostic;
            } else {
                entry["status"] = "ok";
                entry["row"] = run.index;
                csv << outcome.csv << "\n";
                csv.flush();
                if (trace) {
                    std::ofstream rep(out_path + ".run" + std::to_string(run.index) +
                                      ".report");
                    rep << outcome.report_text;
                }
            }
        } catch (const ConfigError& e) {
            entry["status"] = "config-error";
            entry["error"] = e.what();
            outcome.config_error = true;
        } catch (const std::exception& e) {
            entry["status"] = "error";
            entry["error"] = e.what();
        }
        manifest["runs"].push_back(entry);
        outcomes.push_back(std::move(outcome));
    }

    std::ofstream mf(out_path + ".manifest.json");
    mf << manifest.dump(2) << "\n";
    return outcomes;
}

} // namespace mgsim
