#include "mgsim/metrics.hpp"
#include "mgsim/engine.hpp"
#include "mgsim/oracle.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace mgsim;

namespace {

MetricsReport sample_report() {
    MetricsReport r;
    r.config_echo = {{"model", "oppe"}, {"seed", "5"}};
    r.cycles = 12345;
    r.per_node.resize(2);
    r.per_node[0].payload_bytes_hops = 1000;
    r.per_node[0].metadata_bytes_hops = 64;
    r.per_node[0].dram_read_bytes = 4096;
    r.per_node[1].control_bytes_hops = 32;
    r.per_node[1].redundant_payload_arrivals = 3;
    r.per_node[1].total_payload_arrivals = 9;
    r.finalize(150.0, 256.0, 8, EnergyCoeffs{});
    return r;
}

} // namespace

TEST_CASE("structured report round-trips losslessly") {
    MetricsReport r = sample_report();
    std::string text = emit_report(r, ReportFormat::StructuredText);
    MetricsReport back = parse_report_text(text);
    CHECK(emit_report(back, ReportFormat::StructuredText) == text);
    CHECK(back.cycles == r.cycles);
    CHECK(back.total.payload_bytes_hops == r.total.payload_bytes_hops);
    CHECK(back.config_echo == r.config_echo);
}

TEST_CASE("csv header is stable") {
    CHECK(csv_header() ==
          "model,nodes,seed,cycles,payload_bytes_hops,metadata_bytes_hops,"
          "control_bytes_hops,packet_count,dram_read_bytes,dram_write_bytes,"
          "replica_spill_bytes,redundant_dram_bytes,redundant_payload_arrivals,"
          "total_payload_arrivals,aggregations,combinations,util_network,util_dram,"
          "util_compute,energy_network_pj,energy_dram_pj,energy_compute_pj");
    MetricsReport r = sample_report();
    std::string row = csv_row(r);
    size_t cols = 1;
    for (char c : row)
        if (c == ',') cols++;
    size_t header_cols = 1;
    for (char c : csv_header())
        if (c == ',') header_cols++;
    CHECK(cols == header_cols);
}

TEST_CASE("energy accounting is linear in traffic") {
    NodeCounters c;
    EnergyCoeffs coeffs;  // 8 pJ/bit network, 7 pJ/bit DRAM
    apply_energy(c, coeffs);
    CHECK(c.energy_network_pj == 0.0);
    CHECK(c.energy_dram_pj == 0.0);

    c.dram_read_bytes = 1000000000;  // 1 GB -> 56 mJ
    apply_energy(c, coeffs);
    CHECK(c.energy_dram_pj == doctest::Approx(5.6e10));

    c.payload_bytes_hops = 1 << 20;
    apply_energy(c, coeffs);
    double one = c.energy_network_pj;
    c.payload_bytes_hops *= 2;
    apply_energy(c, coeffs);
    CHECK(c.energy_network_pj == doctest::Approx(2 * one));

    c.compute_ops = 100;
    EnergyCoeffs with_compute;
    with_compute.compute_pj_per_op = 2.5;
    apply_energy(c, with_compute);
    CHECK(c.energy_compute_pj == doctest::Approx(250.0));
}

TEST_CASE("redundancy classifiers over a synthetic trace") {
    TraceData t;
    t.nodes = 4;
    t.feature_len = 16;
    // payload 7 visits node 2 twice and node 1 once; payload 9 visits 2 once
    t.hops = {{10, 0, 2, 'U', 7, 94},
              {11, 0, 1, 'U', 7, 94},
              {12, 1, 2, 'U', 7, 94},
              {13, 3, 2, 'M', 9, 94},
              {14, 0, 1, 'E', 0, 16}};
    auto [redundant, total] = classify_transmission_redundancy(t);
    CHECK(total == 4);  // end signals are not payload arrivals
    CHECK(redundant == 1);

    t.drams = {{1, 0, 'R', "feat", 256},
               {2, 0, 'W', "spill", 64},
               {3, 0, 'R', "reload", 64},
               {4, 0, 'W', "result", 64}};
    auto [red_bytes, tot_bytes] = classify_dram_redundancy(t);
    CHECK(tot_bytes == 448);
    CHECK(red_bytes == 128);
}

TEST_CASE("oracle flags a tampered report") {
    RmatParams p;
    p.scale = 7;
    p.avg_degree = 6;
    p.seed = 9;
    CsrGraph g = build_csr(generate_rmat(p), 32, 8);
    SimConfig cfg;
    cfg.model = Model::Tmm;
    cfg.num_nodes = 4;
    cfg.link_latency_cycles = 10;

    std::string path = "/tmp/mgsim_oracle_test.trace";
    TraceWriter tw(path);
    SimResult r = run_simulation(cfg, g, nullptr, &tw);
    tw.close();
    REQUIRE(!r.deadlock);

    OracleResult ok = verify_trace_file(path, r.report);
    CHECK(ok.ok());

    MetricsReport tampered = r.report;
    tampered.per_node[2].payload_bytes_hops += 1;
    OracleResult bad = verify_trace_file(path, tampered);
    REQUIRE(!bad.ok());
    CHECK(bad.mismatches[0].find("payload_bytes_hops") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("truncated trace records are an error") {
    std::istringstream in("C nodes 4\nH 12 0 1 U\n");
    CHECK_THROWS_AS(parse_trace(in), ParseError);
    std::istringstream in2("H 1 0 1 U 5 94\n");
    CHECK_THROWS_AS(parse_trace(in2), ParseError);  // missing node count
}
