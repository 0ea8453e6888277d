#include "mgsim/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace mgsim {

const char* model_name(Model m) {
    switch (m) {
        case Model::Oppe: return "oppe";
        case Model::Oppr: return "oppr";
        case Model::Tmm: return "tmm";
        case Model::Srem: return "srem";
        case Model::TmmSrem: return "tmm+srem";
    }
    return "?";
}

Model parse_model(const std::string& name) {
    std::string s;
    for (char c : name) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "oppe") return Model::Oppe;
    if (s == "oppr") return Model::Oppr;
    if (s == "tmm") return Model::Tmm;
    if (s == "srem") return Model::Srem;
    if (s == "tmm+srem" || s == "srem+tmm") return Model::TmmSrem;
    throw ConfigError("unknown model: " + name);
}

PartitionPlan plan_for_config(const SimConfig& cfg, const CsrGraph& g) {
    if (cfg.uses_rounds()) {
        uint64_t replica = uint64_t(g.feature_len_in) * g.element_bytes;
        FieldWidths w = compute_field_widths(cfg.num_nodes, cfg.node.agg_buffer_bytes, replica,
                                             cfg.alpha);
        PartitionPlan plan = build_partition_plan(g, w, cfg.max_packet_neighbors);
        if (cfg.rounds_override != 0)
            plan = override_rounds(plan, g, cfg.rounds_override, cfg.max_packet_neighbors);
        return plan;
    }
    uint32_t max_nb = cfg.model == Model::Tmm ? cfg.max_packet_neighbors : UINT32_MAX;
    return build_single_round_plan(g, cfg.num_nodes, max_nb);
}

namespace {

enum class Ev : uint8_t {
    StressTick = 0,
    DramDone = 1,
    LinkArrival = 2,
    PortKick = 3,
    ReceiveKick = 4,
    InjectKick = 5,
    ComputeDone = 6,
};

struct Event {
    uint64_t time;
    Ev kind;
    uint32_t node;
    uint32_t aux;
    uint64_t payload;
    uint64_t seq;
};

struct EventCmp {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.kind != b.kind) return a.kind > b.kind;
        if (a.node != b.node) return a.node > b.node;
        if (a.aux != b.aux) return a.aux > b.aux;
        return a.seq > b.seq;
    }
};

struct DramCb {
    enum What : uint8_t { None, LoadItem, JobReload, ResultWrite } what = None;
    uint32_t node = 0;
    uint32_t a = 0;  // item index / side / round
};

// One source vertex's loads and sends for one round at its home node.
struct SendItem {
    uint32_t vid = 0;
    uint32_t round = 0;
    uint32_t first_task = 0;
    uint32_t task_count = 0;
    uint32_t topo_entries = 0;
    uint64_t window_bytes = 0;
    uint8_t pending_dram = 0;
    bool ready = false;
};

struct LocalShare {
    uint32_t svid = 0;
    uint32_t round = 0;
    std::vector<uint32_t> verts;
};

struct Emission {
    bool is_packet = false;
    Packet packet;
    LocalShare share;
};

struct AggJob {
    uint64_t replica_obj = 0;
    uint32_t svid = 0;
    uint32_t round = 0;
    uint64_t edge_bytes = 0;
    std::vector<uint32_t> verts;
};

struct CombJob {
    uint32_t vid = 0;
    uint32_t round = 0;
};

struct ComputeSide {
    std::deque<uint64_t> queue;
    uint64_t backlog_ops = 0;
    bool busy = false;
    bool loading = false;
    uint32_t pending_reloads = 0;
    uint32_t arrays = 0;
    uint64_t current = 0;
};

struct OutPort {
    std::deque<uint64_t> control;  // end signals bypass buffer credits
    std::deque<uint64_t> data;
    uint64_t busy_until = 0;
    bool kick_scheduled = false;
    // head-of-line blocking bound: after waiting this long on downstream
    // space, the head transfers with overdraft so transit cannot cycle
    uint64_t blocked_head = 0;
    uint64_t blocked_since = 0;
    bool escape_kick_sent = false;
};

struct Router {
    int64_t used_bytes = 0;
    OutPort ports[4];
    std::array<double, 4> neighbor_stress{0.0, 0.0, 0.0, 0.0};
};

struct RoundState {
    uint64_t expected_aggs = 0, done_aggs = 0;
    uint64_t expected_combs = 0, done_combs = 0;
    uint32_t signals = 0;
    bool sends_done = false;
    bool signaled = false;
    bool closed = false;
};

struct Partial {
    uint32_t done = 0;
    uint32_t expected = 0;
    bool live = false;
};

struct NodeState {
    std::vector<std::vector<uint32_t>> items_by_round;
    std::vector<SendItem> items;
    uint32_t inject_round = 0;
    uint32_t inject_pos = 0;
    uint32_t load_round = 0;
    uint32_t load_pos = 0;
    uint64_t loader_window = 0;
    std::deque<Emission> emissions;
    bool inject_kick_scheduled = false;
    bool inject_blocked = false;
    uint64_t inject_blocked_since = 0;
    bool inject_escape_sent = false;

    Router router;
    std::map<uint32_t, std::deque<uint64_t>> receive_q;  // round -> arrived shares
    bool receive_kick_scheduled = false;

    std::unique_ptr<AggBuffer> agg;
    uint64_t edge_used = 0;

    ComputeSide agg_side;
    ComputeSide comb_side;

    std::unique_ptr<DramPipe> dram;

    std::vector<RoundState> rounds;
    uint32_t min_open_round = 0;
    uint32_t next_reserve_round = 0;
    std::vector<bool> partial_reserved;  // per round
    std::unordered_map<uint32_t, Partial> partials;
    std::unordered_map<uint64_t, uint32_t> replica_jobs_left;

    NodeCounters counters;
};

constexpr uint64_t kPartialBit = 1ull << 63;
constexpr uint64_t kReserveBit = 1ull << 62;

class Sim {
public:
    Sim(const SimConfig& cfg, const CsrGraph& g, const PartitionPlan& plan, TraceWriter* trace,
        std::ostream* round_log)
        : cfg_(cfg), g_(g), plan_(plan), trace_(trace), round_log_(round_log) {
        geom_ = make_torus(cfg_.num_nodes);
        if (cfg_.num_nodes > 64) throw ConfigError("node counts above 64 are not supported");
        if (plan_.widths.num_nodes != cfg_.num_nodes)
            throw ConfigError("partition plan node count does not match configuration");
        if (uint64_t(g_.feature_len_in) * 4 > cfg_.node.agg_buffer_bytes)
            throw ConfigError("aggregation buffer cannot hold a single replica");
    }

    SimResult run();

private:
    const SimConfig& cfg_;
    const CsrGraph& g_;
    const PartitionPlan& plan_;
    TraceWriter* trace_;
    std::ostream* round_log_;
    TorusGeom geom_;

    std::priority_queue<Event, std::vector<Event>, EventCmp> queue_;
    uint64_t seq_ = 0;
    uint64_t now_ = 0;
    uint64_t last_activity_ = 0;

    std::vector<NodeState> nodes_;
    std::unordered_map<uint64_t, Packet> live_;
    uint64_t next_pkt_ = 1;
    uint64_t next_obj_ = 1;
    std::vector<DramCb> dram_cbs_;
    std::vector<AggJob> agg_jobs_;
    std::vector<CombJob> comb_jobs_;

    std::vector<uint64_t> seen_;  // per source vertex, bitmask of nodes reached this layer
    uint32_t layer_ = 1;
    uint32_t f_cur_ = 0;
    uint32_t f_next_ = 0;
    uint32_t rounds_ = 1;
    uint32_t closed_total_ = 0;
    bool finished_ = false;
    uint32_t max_job_verts_ = 1;

    void push(uint64_t time, Ev kind, uint32_t node, uint32_t aux = 0, uint64_t payload = 0) {
        queue_.push({time, kind, node, aux, payload, seq_++});
    }

    uint64_t replica_bytes() const { return uint64_t(f_cur_) * 4; }
    uint64_t partial_bytes() const { return uint64_t(f_cur_) * 4; }
    uint64_t escape_timeout() const { return 8ull * cfg_.stress_period; }

    // Partial results of a round draw on space reserved up front, so the
    // round-execution models can never wedge on partial allocation.
    bool acquire_partial(uint32_t p, uint32_t vid, uint32_t round);
    bool ensure_partial_reservation(uint32_t p, uint32_t round, uint64_t extra_bytes);

    uint32_t natural_rounds() const {
        uint32_t shift = plan_.widths.n + plan_.widths.x;
        if (shift >= 32 || g_.num_vertices == 0) return 1;
        return ((g_.num_vertices - 1) >> shift) + 1;
    }

    // A vertex's execution round under the active plan (bit-field round,
    // compressed when the round count is overridden downward).
    uint32_t exec_round(uint32_t v) const {
        if (plan_.single_round) return 0;
        uint32_t r = decode_vid(v, plan_.widths).round_id;
        uint32_t nat = natural_rounds();
        if (plan_.rounds >= nat) return r;
        return static_cast<uint32_t>(uint64_t(r) * plan_.rounds / nat);
    }

    bool kept(uint32_t v) const { return vertex_kept(v, cfg_.sample_fraction, cfg_.seed); }

    void init_layer();
    void build_send_items();
    void try_prefetch(uint32_t p);
    bool round_injection_allowed(uint32_t p, uint32_t r) const;
    void expand_item(uint32_t p, const SendItem& item);
    void try_inject(uint32_t p);
    void schedule_inject_kick(uint32_t p);
    void schedule_receive_kick(uint32_t p);
    void schedule_port_kick(uint32_t p, uint32_t port);
    void kick_space_waiters(uint32_t p);

    uint64_t new_packet(Packet&& pkt) {
        uint64_t id = next_pkt_++;
        live_.emplace(id, std::move(pkt));
        return id;
    }

    void router_admit(uint32_t p, uint64_t pkt_id, bool charge_bytes);
    void enqueue_port(uint32_t p, uint64_t pkt_id);
    void try_port(uint32_t p, uint32_t port);
    void on_arrival(uint32_t p, uint64_t pkt_id);
    void try_receive(uint32_t p);
    bool accept_share(uint32_t p, uint32_t svid, uint32_t round,
                      const std::vector<uint32_t>& verts, uint32_t payload_elems);

    void dram_request(uint32_t p, uint64_t bytes, DramDir dir, DramPurpose purpose,
                      DramCb cb = {});
    void spill_victims(uint32_t p, const std::vector<uint64_t>& victims);

    void try_start(uint32_t p);
    void try_start_side(uint32_t p, bool agg_mode);
    void begin_execution(uint32_t p, bool agg_mode);
    void finish_agg_job(uint32_t p);
    void finish_comb_job(uint32_t p);
    uint32_t pick_arrays(uint32_t p, bool agg_mode);
    void enqueue_comb(uint32_t p, uint32_t vid, uint32_t round);

    void broadcast_end_signals(uint32_t p, uint32_t r);
    void check_round(uint32_t p, uint32_t r);
    void on_round_closed(uint32_t p, uint32_t r);

    void handle(const Event& ev);
    std::string deadlock_diag() const;
};

void Sim::init_layer() {
    f_cur_ = layer_ == 1 ? g_.feature_len_in : g_.feature_len_out;
    f_next_ = g_.feature_len_out;
    rounds_ = plan_.rounds;
    closed_total_ = 0;
    seen_.assign(g_.num_vertices, 0);

    uint64_t per = partial_bytes();
    uint64_t budget = cfg_.node.agg_buffer_bytes / 2;
    uint64_t k = per ? budget / per : 1;
    max_job_verts_ = static_cast<uint32_t>(std::clamp<uint64_t>(k > 1 ? k - 1 : 1, 1, 1u << 20));

    for (uint32_t p = 0; p < cfg_.num_nodes; p++) {
        NodeState& n = nodes_[p];
        n.inject_round = 0;
        n.inject_pos = 0;
        n.load_round = 0;
        n.load_pos = 0;
        n.loader_window = 0;
        n.inject_blocked = false;
        n.inject_escape_sent = false;
        n.emissions.clear();
        n.receive_q.clear();
        n.edge_used = 0;
        n.partials.clear();
        n.replica_jobs_left.clear();
        n.rounds.assign(rounds_, RoundState{});
        n.partial_reserved.assign(rounds_, false);
        n.min_open_round = 0;
    }
    build_send_items();

    // Expected work per (node, round): every in-coming edge of a kept vertex
    // is aggregated exactly once and every kept vertex combines once.
    for (uint32_t v = 0; v < g_.num_vertices; v++) {
        if (!kept(v)) continue;
        uint32_t p = home_node(v, plan_.widths);
        uint32_t r = exec_round(v);
        NodeState& n = nodes_[p];
        n.rounds[r].expected_combs++;
        n.rounds[r].expected_aggs += g_.in_degree(v);
    }

    // One-time weight residency per layer; nothing waits on it.
    uint64_t weight_bytes = uint64_t(f_cur_) * f_next_ * 4;
    for (uint32_t p = 0; p < cfg_.num_nodes; p++)
        dram_request(p, weight_bytes, DramDir::Read, DramPurpose::WeightLoad);

    for (uint32_t p = 0; p < cfg_.num_nodes; p++) {
        try_prefetch(p);
        try_inject(p);
    }
}

void Sim::build_send_items() {
    for (uint32_t p = 0; p < cfg_.num_nodes; p++) {
        NodeState& n = nodes_[p];
        n.items.clear();
        n.items_by_round.assign(rounds_, {});
        for (uint32_t r = 0; r < rounds_; r++) {
            const auto& tasks = plan_.tasks[r][p];
            std::map<uint32_t, SendItem> merged;
            for (uint32_t i = 0; i < tasks.size(); i++) {
                auto it = merged.find(tasks[i].source_vid);
                if (it == merged.end()) {
                    SendItem item;
                    item.vid = tasks[i].source_vid;
                    item.round = r;
                    item.first_task = i;
                    item.task_count = 1;
                    item.topo_entries = static_cast<uint32_t>(tasks[i].neighbors.size());
                    merged.emplace(tasks[i].source_vid, item);
                } else {
                    it->second.task_count++;
                    it->second.topo_entries += static_cast<uint32_t>(tasks[i].neighbors.size());
                }
            }
            // A kept vertex also loads its feature in its own round to seed
            // its partial result, even when it has nothing to send.
            for (uint32_t v : plan_.combine_order[p]) {
                if (exec_round(v) != r) continue;
                if (merged.find(v) == merged.end()) {
                    SendItem item;
                    item.vid = v;
                    item.round = r;
                    merged.emplace(v, item);
                }
            }
            for (auto& [vid, item] : merged) {
                item.window_bytes = uint64_t(f_cur_) * 4 + uint64_t(item.topo_entries) * 4;
                n.items_by_round[r].push_back(static_cast<uint32_t>(n.items.size()));
                n.items.push_back(item);
            }
        }
    }
}

bool Sim::round_injection_allowed(uint32_t p, uint32_t r) const {
    if (r == 0) return true;
    const NodeState& n = nodes_[p];
    if (!n.rounds[r - 1].sends_done) return false;
    if (r >= 2 && !n.rounds[r - 2].closed) return false;  // overlap depth 1
    return true;
}

void Sim::try_prefetch(uint32_t p) {
    NodeState& n = nodes_[p];
    while (n.load_round < rounds_) {
        auto& idxs = n.items_by_round[n.load_round];
        if (n.load_pos >= idxs.size()) {
            n.load_round++;
            n.load_pos = 0;
            continue;
        }
        uint32_t item_idx = idxs[n.load_pos];
        SendItem& item = n.items[item_idx];
        if (n.loader_window > 0 &&
            n.loader_window + item.window_bytes > cfg_.node.loader_buffer_bytes)
            break;
        n.loader_window += item.window_bytes;
        item.pending_dram = 1 + (item.topo_entries > 0 ? 1 : 0);
        dram_request(p, uint64_t(f_cur_) * 4, DramDir::Read, DramPurpose::FeatureLoad,
                     {DramCb::LoadItem, p, item_idx});
        if (item.topo_entries > 0)
            dram_request(p, uint64_t(item.topo_entries) * 4, DramDir::Read,
                         DramPurpose::TopologyLoad, {DramCb::LoadItem, p, item_idx});
        n.load_pos++;
    }
}

void Sim::expand_item(uint32_t p, const SendItem& item) {
    NodeState& n = nodes_[p];
    const auto& tasks = plan_.tasks[item.round][p];
    bool multicast = cfg_.model == Model::Tmm || cfg_.model == Model::TmmSrem;
    bool per_edge = cfg_.model == Model::Oppe || cfg_.model == Model::Srem;

    for (uint32_t t = 0; t < item.task_count; t++) {
        const MulticastTask& task = tasks[item.first_task + t];
        if (multicast) {
            LocalShare local;
            Packet pkt;
            pkt.kind = PacketKind::ReplicaMulticast;
            pkt.source_vid = task.source_vid;
            pkt.round_id = item.round;
            pkt.layer = layer_;
            pkt.payload_elements = f_cur_;
            pkt.offsets.push_back(0);
            for (size_t i = 0; i < task.dest_nodes.size(); i++) {
                if (task.dest_nodes[i] == p) {
                    local.svid = task.source_vid;
                    local.round = item.round;
                    for (uint32_t k = task.offsets[i]; k < task.offsets[i + 1]; k++)
                        local.verts.push_back(task.neighbors[k]);
                } else {
                    pkt.dest_nodes.push_back(task.dest_nodes[i]);
                    for (uint32_t k = task.offsets[i]; k < task.offsets[i + 1]; k++)
                        pkt.neighbors.push_back(task.neighbors[k]);
                    pkt.offsets.push_back(static_cast<uint32_t>(pkt.neighbors.size()));
                }
            }
            if (!local.verts.empty()) {
                Emission e;
                e.share = std::move(local);
                n.emissions.push_back(std::move(e));
            }
            if (!pkt.dest_nodes.empty()) {
                pkt.next_dest = p;  // split at the origin router
                Emission e;
                e.is_packet = true;
                e.packet = std::move(pkt);
                n.emissions.push_back(std::move(e));
            }
            continue;
        }
        for (size_t i = 0; i < task.dest_nodes.size(); i++) {
            uint32_t dest = task.dest_nodes[i];
            if (per_edge) {
                for (uint32_t k = task.offsets[i]; k < task.offsets[i + 1]; k++) {
                    Emission e;
                    if (dest == p) {
                        e.share = {task.source_vid, item.round, {task.neighbors[k]}};
                    } else {
                        e.is_packet = true;
                        Packet& pkt = e.packet;
                        pkt.kind = PacketKind::ReplicaUnicast;
                        pkt.next_dest = dest;
                        pkt.source_vid = task.source_vid;
                        pkt.round_id = item.round;
                        pkt.layer = layer_;
                        pkt.payload_elements = f_cur_;
                        pkt.dest_nodes = {dest};
                        pkt.offsets = {0, 1};
                        pkt.neighbors = {task.neighbors[k]};
                    }
                    n.emissions.push_back(std::move(e));
                }
            } else {  // one replica per (vertex, node)
                std::vector<uint32_t> verts(task.neighbors.begin() + task.offsets[i],
                                            task.neighbors.begin() + task.offsets[i + 1]);
                Emission e;
                if (dest == p) {
                    e.share = {task.source_vid, item.round, std::move(verts)};
                } else {
                    e.is_packet = true;
                    Packet& pkt = e.packet;
                    pkt.kind = PacketKind::ReplicaUnicast;
                    pkt.next_dest = dest;
                    pkt.source_vid = task.source_vid;
                    pkt.round_id = item.round;
                    pkt.layer = layer_;
                    pkt.payload_elements = f_cur_;
                    pkt.dest_nodes = {dest};
                    pkt.offsets = {0, static_cast<uint32_t>(verts.size())};
                    pkt.neighbors = std::move(verts);
                }
                n.emissions.push_back(std::move(e));
            }
        }
    }

    // An isolated kept vertex combines its own feature directly.
    if (item.round == exec_round(item.vid) && kept(item.vid) && g_.in_degree(item.vid) == 0)
        enqueue_comb(p, item.vid, item.round);
}

void Sim::try_inject(uint32_t p) {
    NodeState& n = nodes_[p];
    for (;;) {
        if (!n.emissions.empty()) {
            Emission& e = n.emissions.front();
            if (e.is_packet) {
                uint64_t size = e.packet.size_bytes();
                bool fits = n.router.used_bytes + int64_t(size) <=
                            int64_t(cfg_.node.routing_buffer_bytes);
                if (!fits) {
                    // bounded wait, then inject with overdraft: deliveries
                    // parked in the receive queue must not stall the sends
                    // an earlier round still needs
                    if (!n.inject_blocked) {
                        n.inject_blocked = true;
                        n.inject_blocked_since = now_;
                        n.inject_escape_sent = false;
                    }
                    if (now_ - n.inject_blocked_since < escape_timeout()) {
                        if (!n.inject_escape_sent) {
                            n.inject_escape_sent = true;
                            push(n.inject_blocked_since + escape_timeout(), Ev::InjectKick, p);
                        }
                        return;
                    }
                }
                n.inject_blocked = false;
                uint64_t id = new_packet(std::move(e.packet));
                n.emissions.pop_front();
                router_admit(p, id, true);
            } else {
                if (!accept_share(p, e.share.svid, e.share.round, e.share.verts, f_cur_))
                    return;
                n.inject_blocked = false;
                n.emissions.pop_front();
            }
            continue;
        }
        if (n.inject_round >= rounds_) return;
        auto& idxs = n.items_by_round[n.inject_round];
        if (n.inject_pos >= idxs.size()) {
            uint32_t r = n.inject_round;
            n.rounds[r].sends_done = true;
            n.inject_round++;
            n.inject_pos = 0;
            check_round(p, r);
            continue;
        }
        if (!round_injection_allowed(p, n.inject_round)) return;
        SendItem& item = n.items[idxs[n.inject_pos]];
        if (!item.ready) return;
        n.loader_window -= item.window_bytes;
        n.inject_pos++;
        expand_item(p, item);
        try_prefetch(p);
    }
}

void Sim::schedule_inject_kick(uint32_t p) {
    NodeState& n = nodes_[p];
    if (n.inject_kick_scheduled) return;
    n.inject_kick_scheduled = true;
    push(now_, Ev::InjectKick, p);
}

void Sim::schedule_receive_kick(uint32_t p) {
    NodeState& n = nodes_[p];
    if (n.receive_kick_scheduled) return;
    n.receive_kick_scheduled = true;
    push(now_, Ev::ReceiveKick, p);
}

void Sim::schedule_port_kick(uint32_t p, uint32_t port) {
    OutPort& op = nodes_[p].router.ports[port];
    if (op.kick_scheduled) return;
    op.kick_scheduled = true;
    push(std::max(now_, op.busy_until), Ev::PortKick, p, port);
}

// Router bytes at p were freed: retry local injection and the neighbor
// ports that feed p.
void Sim::kick_space_waiters(uint32_t p) {
    schedule_inject_kick(p);
    for (uint32_t d = 0; d < 4; d++) {
        uint32_t nb = neighbor_of(p, static_cast<Port>(d), geom_);
        schedule_port_kick(nb, d ^ 1u);  // the port on nb facing p
    }
}

void Sim::router_admit(uint32_t p, uint64_t pkt_id, bool charge_bytes) {
    Packet& pkt = live_.at(pkt_id);
    if (charge_bytes && pkt.kind != PacketKind::EndSignal)
        nodes_[p].router.used_bytes += int64_t(pkt.size_bytes());
    if (pkt.next_dest == p)
        on_arrival(p, pkt_id);
    else
        enqueue_port(p, pkt_id);
}

void Sim::enqueue_port(uint32_t p, uint64_t pkt_id) {
    Packet& pkt = live_.at(pkt_id);
    Port port = dyxy_next_hop(p, pkt.next_dest, geom_, nodes_[p].router.neighbor_stress);
    assert(port != Port::Local);
    OutPort& op = nodes_[p].router.ports[static_cast<size_t>(port)];
    if (pkt.kind == PacketKind::EndSignal)
        op.control.push_back(pkt_id);
    else
        op.data.push_back(pkt_id);
    try_port(p, static_cast<uint32_t>(port));
}

void Sim::try_port(uint32_t p, uint32_t port) {
    NodeState& n = nodes_[p];
    OutPort& op = n.router.ports[port];
    if (op.busy_until > now_) {
        schedule_port_kick(p, port);
        return;
    }
    uint64_t pkt_id;
    bool is_control;
    if (!op.control.empty()) {
        pkt_id = op.control.front();
        is_control = true;
    } else if (!op.data.empty()) {
        pkt_id = op.data.front();
        is_control = false;
    } else {
        return;
    }
    Packet& pkt = live_.at(pkt_id);
    uint64_t size = pkt.size_bytes();
    uint32_t dst = neighbor_of(p, static_cast<Port>(port), geom_);
    if (!is_control) {
        NodeState& down = nodes_[dst];
        // A hop into the packet's consumption point always proceeds; a
        // transit hop needs downstream credit, with a bounded wait before
        // it pushes through anyway so full routers cannot cycle.
        bool delivering = dst == pkt.next_dest;
        bool fits = down.router.used_bytes + int64_t(size) <=
                    int64_t(cfg_.node.routing_buffer_bytes);
        if (!delivering && !fits) {
            if (op.blocked_head != pkt_id) {
                op.blocked_head = pkt_id;
                op.blocked_since = now_;
                op.escape_kick_sent = false;
            }
            if (now_ - op.blocked_since < escape_timeout()) {
                if (!op.escape_kick_sent) {
                    op.escape_kick_sent = true;
                    push(op.blocked_since + escape_timeout(), Ev::PortKick, p, port);
                }
                return;  // also retried when downstream frees bytes
            }
        }
        op.blocked_head = 0;
        down.router.used_bytes += int64_t(size);
        n.router.used_bytes -= int64_t(size);
        kick_space_waiters(p);
    }
    if (is_control)
        op.control.pop_front();
    else
        op.data.pop_front();

    uint64_t ser = static_cast<uint64_t>(std::ceil(double(size) / cfg_.port_bandwidth()));
    if (ser == 0) ser = 1;
    op.busy_until = now_ + ser;

    NodeCounters& c = n.counters;
    c.packet_count++;
    if (pkt.kind == PacketKind::EndSignal) {
        c.control_bytes_hops += size;
    } else {
        c.payload_bytes_hops += pkt.payload_bytes();
        c.metadata_bytes_hops += size - pkt.payload_bytes();
    }
    if (trace_) trace_->hop(now_, p, dst, pkt.kind, pkt.source_vid, size);

    push(now_ + ser + cfg_.link_latency_cycles, Ev::LinkArrival, dst, 0, pkt_id);
    schedule_port_kick(p, port);  // continue service when the port frees
}

void Sim::on_arrival(uint32_t p, uint64_t pkt_id) {
    Packet& pkt = live_.at(pkt_id);
    NodeState& n = nodes_[p];

    if (pkt.next_dest != p) {  // transit
        enqueue_port(p, pkt_id);
        return;
    }

    if (pkt.kind == PacketKind::EndSignal) {
        uint32_t r = pkt.round_id;
        live_.erase(pkt_id);
        if (r < rounds_) {
            n.rounds[r].signals++;
            check_round(p, r);
        }
        return;
    }

    if (pkt.kind == PacketKind::ReplicaUnicast) {
        n.receive_q[pkt.round_id].push_back(pkt_id);
        try_receive(p);
        return;
    }

    // Multicast at its target: split into the local share and the forwarded
    // parts, swapping the parent's buffer bytes for theirs.
    SplitResult split = split_multicast(pkt, p, geom_);
    int64_t delta = -int64_t(pkt.size_bytes());
    uint64_t local_id = 0;
    if (split.has_local) {
        Packet local;
        local.kind = pkt.kind;
        local.next_dest = p;
        local.source_vid = pkt.source_vid;
        local.round_id = pkt.round_id;
        local.layer = pkt.layer;
        local.payload_elements = pkt.payload_elements;
        local.dest_nodes = {p};
        local.offsets = {0, split.local_end - split.local_begin};
        local.neighbors.assign(pkt.neighbors.begin() + split.local_begin,
                               pkt.neighbors.begin() + split.local_end);
        delta += int64_t(local.size_bytes());
        local_id = new_packet(std::move(local));
    }
    std::vector<uint64_t> part_ids;
    part_ids.reserve(split.parts.size());
    for (auto& part : split.parts) {
        delta += int64_t(part.packet.size_bytes());
        part_ids.push_back(new_packet(std::move(part.packet)));
    }
    uint32_t round = pkt.round_id;
    live_.erase(pkt_id);
    n.router.used_bytes += delta;
    if (delta < 0) kick_space_waiters(p);
    if (local_id) {
        n.receive_q[round].push_back(local_id);
        try_receive(p);
    }
    for (uint64_t id : part_ids) enqueue_port(p, id);
}

void Sim::try_receive(uint32_t p) {
    NodeState& n = nodes_[p];
    while (!n.receive_q.empty()) {
        auto it = n.receive_q.begin();  // oldest round first
        if (it->second.empty()) {
            n.receive_q.erase(it);
            continue;
        }
        uint64_t pkt_id = it->second.front();
        Packet& pkt = live_.at(pkt_id);
        if (!accept_share(p, pkt.source_vid, pkt.round_id, pkt.neighbors,
                          pkt.payload_elements))
            return;  // head waits for buffer space
        n.router.used_bytes -= int64_t(pkt.size_bytes());
        live_.erase(pkt_id);
        it->second.pop_front();
        kick_space_waiters(p);
    }
}

bool Sim::ensure_partial_reservation(uint32_t p, uint32_t round, uint64_t extra_bytes) {
    NodeState& n = nodes_[p];
    if (cfg_.spill_allowed() || n.partial_reserved[round]) return true;
    // Reservations are made strictly in round order; an early arrival from a
    // later round must not grab space an earlier round's partials still need.
    // A round only reserves what it still has to combine, so rounds that
    // already finished (isolated vertices, or closed before any share
    // arrived here) cost nothing.
    while (n.next_reserve_round <= round) {
        uint32_t r = n.next_reserve_round;
        const RoundState& rs = n.rounds[r];
        uint64_t remaining =
            rs.expected_combs > rs.done_combs ? rs.expected_combs - rs.done_combs : 0;
        uint64_t budget = remaining * partial_bytes();
        uint64_t need = budget + (r == round ? extra_bytes : 0);
        if (n.agg->used() + need > n.agg->capacity()) return false;
        if (budget > 0) {
            std::vector<uint64_t> victims;
            n.agg->acquire(kReserveBit | r, budget, seq_, victims);
            n.agg->pin(kReserveBit | r);
        }
        n.partial_reserved[r] = true;
        n.next_reserve_round++;
    }
    return true;
}

bool Sim::acquire_partial(uint32_t p, uint32_t vid, uint32_t round) {
    NodeState& n = nodes_[p];
    uint64_t obj = kPartialBit | vid;
    if (n.agg->is_resident(obj)) return true;
    uint64_t bytes = partial_bytes();
    bool existed = n.agg->exists(obj);
    uint64_t reserve = kReserveBit | round;
    if (!existed && !cfg_.spill_allowed() && n.agg->exists(reserve) &&
        n.agg->object_bytes(reserve) >= bytes)
        n.agg->shrink(reserve, bytes);
    std::vector<uint64_t> victims;
    bool ok = n.agg->acquire(obj, bytes, seq_, victims);
    spill_victims(p, victims);
    return ok;
}

bool Sim::accept_share(uint32_t p, uint32_t svid, uint32_t round,
                       const std::vector<uint32_t>& verts, uint32_t payload_elems) {
    NodeState& n = nodes_[p];
    if (verts.empty()) return true;

    uint64_t payload_b = uint64_t(payload_elems) * 4;
    if (!ensure_partial_reservation(p, round, payload_b)) return false;

    uint32_t total = static_cast<uint32_t>(verts.size());
    uint32_t chunks = (total + max_job_verts_ - 1) / max_job_verts_;
    uint64_t edge_bytes = 8ull * chunks + 4ull * total;
    if (edge_bytes > cfg_.node.edge_buffer_bytes)
        throw ConfigError("edge buffer cannot hold a neighbor list of " +
                          std::to_string(total) + " entries");
    if (n.edge_used + edge_bytes > cfg_.node.edge_buffer_bytes) return false;

    uint64_t replica_obj = next_obj_;
    std::vector<uint64_t> victims;
    bool ok = n.agg->acquire(replica_obj, payload_b, seq_, victims);
    spill_victims(p, victims);
    if (!ok) return false;
    next_obj_++;

    n.edge_used += edge_bytes;
    n.replica_jobs_left[replica_obj] = chunks;
    for (uint32_t c = 0; c < chunks; c++) {
        uint32_t begin = c * max_job_verts_;
        uint32_t count = std::min(max_job_verts_, total - begin);
        AggJob job;
        job.replica_obj = replica_obj;
        job.svid = svid;
        job.round = round;
        job.edge_bytes = 8 + 4ull * count;
        job.verts.assign(verts.begin() + begin, verts.begin() + begin + count);
        uint64_t id = agg_jobs_.size();
        agg_jobs_.push_back(std::move(job));
        n.agg_side.queue.push_back(id);
        n.agg_side.backlog_ops += uint64_t(count) * payload_elems;
    }
    try_start(p);
    return true;
}

void Sim::dram_request(uint32_t p, uint64_t bytes, DramDir dir, DramPurpose purpose, DramCb cb) {
    NodeState& n = nodes_[p];
    auto res = n.dram->transfer(bytes, dir, now_);
    NodeCounters& c = n.counters;
    if (dir == DramDir::Read)
        c.dram_read_bytes += res.billed_bytes;
    else
        c.dram_write_bytes += res.billed_bytes;
    if (purpose == DramPurpose::ReplicaSpill) {
        c.replica_spill_bytes += res.billed_bytes;
        c.redundant_dram_bytes += res.billed_bytes;
    } else if (purpose == DramPurpose::ReplicaReload) {
        c.redundant_dram_bytes += res.billed_bytes;
    }
    if (trace_) trace_->dram(now_, p, dir, purpose, res.billed_bytes);
    if (cb.what != DramCb::None) {
        uint32_t idx = static_cast<uint32_t>(dram_cbs_.size());
        dram_cbs_.push_back(cb);
        push(res.completion_cycle, Ev::DramDone, p, idx);
    }
}

void Sim::spill_victims(uint32_t p, const std::vector<uint64_t>& victims) {
    NodeState& n = nodes_[p];
    for (uint64_t v : victims)
        dram_request(p, n.agg->object_bytes(v), DramDir::Write, DramPurpose::ReplicaSpill);
}

uint32_t Sim::pick_arrays(uint32_t p, bool agg_mode) {
    NodeState& n = nodes_[p];
    ComputeSide& mine = agg_mode ? n.agg_side : n.comb_side;
    ComputeSide& other = agg_mode ? n.comb_side : n.agg_side;
    uint32_t total = cfg_.node.arrays;
    uint32_t other_held = (other.busy || other.loading) ? other.arrays : 0;
    uint32_t avail = total - other_held;
    if (avail == 0) return 0;
    if (other_held == 0 && !other.queue.empty()) {
        auto [a_agg, a_comb] =
            schedule_arrays(agg_mode ? mine.backlog_ops : other.backlog_ops,
                            agg_mode ? other.backlog_ops : mine.backlog_ops, total);
        uint32_t want = agg_mode ? a_agg : a_comb;
        return std::min(std::max<uint32_t>(want, 1), avail);
    }
    return avail;
}

void Sim::enqueue_comb(uint32_t p, uint32_t vid, uint32_t round) {
    NodeState& n = nodes_[p];
    uint64_t id = comb_jobs_.size();
    comb_jobs_.push_back({vid, round});
    n.comb_side.queue.push_back(id);
    n.comb_side.backlog_ops += 2ull * f_cur_ * f_next_;
    try_start(p);
}

void Sim::try_start(uint32_t p) {
    try_start_side(p, true);
    try_start_side(p, false);
}

void Sim::try_start_side(uint32_t p, bool agg_mode) {
    NodeState& n = nodes_[p];
    ComputeSide& side = agg_mode ? n.agg_side : n.comb_side;
    if (side.busy || side.loading || side.queue.empty()) return;

    uint32_t arrays = pick_arrays(p, agg_mode);
    if (arrays == 0) return;

    uint64_t job_id = side.queue.front();
    uint32_t job_round;
    std::vector<std::pair<uint64_t, bool>> needed;  // (object, is_partial)
    if (agg_mode) {
        AggJob& job = agg_jobs_[job_id];
        job_round = job.round;
        needed.emplace_back(job.replica_obj, false);
        for (uint32_t v : job.verts) needed.emplace_back(kPartialBit | v, true);
    } else {
        CombJob& job = comb_jobs_[job_id];
        job_round = job.round;
        needed.emplace_back(kPartialBit | job.vid, true);
    }

    // Phase 1: make everything resident and pinned (no reload traffic yet,
    // so a mid-way failure leaves no dangling completions).
    std::vector<uint64_t> pinned;
    std::vector<uint64_t> to_reload;
    bool failed = false;
    for (auto [obj, is_partial] : needed) {
        bool was_resident = n.agg->is_resident(obj);
        bool existed = n.agg->exists(obj);
        bool ok;
        uint64_t bytes;
        if (is_partial) {
            bytes = partial_bytes();
            uint32_t vid = static_cast<uint32_t>(obj & ~kPartialBit);
            ok = acquire_partial(p, vid, job_round);
        } else {
            bytes = n.agg->object_bytes(obj);
            std::vector<uint64_t> victims;
            ok = n.agg->acquire(obj, bytes, seq_, victims);
            spill_victims(p, victims);
        }
        if (!ok) {
            failed = true;
            break;
        }
        n.agg->pin(obj);
        pinned.push_back(obj);
        if (existed && !was_resident) to_reload.push_back(bytes);
    }
    if (failed) {
        for (uint64_t o : pinned) n.agg->unpin(o);
        return;  // retried from receive/compute kicks
    }

    side.arrays = arrays;
    side.current = job_id;
    side.queue.pop_front();
    if (agg_mode) {
        AggJob& job = agg_jobs_[job_id];
        side.backlog_ops -= uint64_t(job.verts.size()) * f_cur_;
    } else {
        side.backlog_ops -= 2ull * f_cur_ * f_next_;
    }

    if (!to_reload.empty()) {
        side.loading = true;
        side.pending_reloads = static_cast<uint32_t>(to_reload.size());
        for (uint64_t bytes : to_reload)
            dram_request(p, bytes, DramDir::Read, DramPurpose::ReplicaReload,
                         {DramCb::JobReload, p, agg_mode ? 0u : 1u});
        return;
    }
    begin_execution(p, agg_mode);
}

void Sim::begin_execution(uint32_t p, bool agg_mode) {
    NodeState& n = nodes_[p];
    ComputeSide& side = agg_mode ? n.agg_side : n.comb_side;
    side.loading = false;
    side.busy = true;
    uint64_t cost;
    if (agg_mode) {
        AggJob& job = agg_jobs_[side.current];
        cost = aggregate_cost(f_cur_, job.verts.size(), side.arrays, cfg_.node.lanes_per_array);
    } else {
        cost = combine_cost(f_cur_, f_next_, side.arrays, cfg_.node.lanes_per_array);
    }
    if (cost == 0) cost = 1;
    n.counters.busy_array_cycles += cost * side.arrays;
    push(now_ + cost, Ev::ComputeDone, p, agg_mode ? 0u : 1u);
}

void Sim::finish_agg_job(uint32_t p) {
    NodeState& n = nodes_[p];
    ComputeSide& side = n.agg_side;
    AggJob& job = agg_jobs_[side.current];
    side.busy = false;

    n.counters.aggregations += job.verts.size();
    n.counters.compute_ops += uint64_t(job.verts.size()) * f_cur_;
    n.edge_used -= job.edge_bytes;

    uint32_t r = job.round;
    for (uint32_t v : job.verts) {
        n.agg->unpin(kPartialBit | v);
        Partial& part = n.partials[v];
        if (!part.live) {
            part.live = true;
            part.expected = g_.in_degree(v);
        }
        part.done++;
        if (part.done == part.expected) enqueue_comb(p, v, r);
    }
    n.agg->unpin(job.replica_obj);
    auto jl = n.replica_jobs_left.find(job.replica_obj);
    jl->second--;
    if (jl->second == 0) {
        n.agg->release(job.replica_obj);
        n.replica_jobs_left.erase(jl);
    }
    n.rounds[r].done_aggs += job.verts.size();
    job.verts = std::vector<uint32_t>();

    schedule_receive_kick(p);
    schedule_inject_kick(p);
    try_start(p);
    check_round(p, r);
}

void Sim::finish_comb_job(uint32_t p) {
    NodeState& n = nodes_[p];
    ComputeSide& side = n.comb_side;
    CombJob& job = comb_jobs_[side.current];
    side.busy = false;

    n.counters.combinations++;
    n.counters.compute_ops += 2ull * f_cur_ * f_next_;
    uint64_t pobj = kPartialBit | job.vid;
    n.agg->unpin(pobj);
    n.agg->release(pobj);
    n.partials.erase(job.vid);

    dram_request(p, uint64_t(f_next_) * 4, DramDir::Write, DramPurpose::ResultWrite,
                 {DramCb::ResultWrite, p, job.round});

    schedule_receive_kick(p);
    schedule_inject_kick(p);
    try_start(p);
}

void Sim::broadcast_end_signals(uint32_t p, uint32_t r) {
    NodeState& n = nodes_[p];
    for (uint32_t q = 0; q < cfg_.num_nodes; q++) {
        if (q == p) continue;
        Packet pkt;
        pkt.kind = PacketKind::EndSignal;
        pkt.next_dest = q;
        pkt.source_vid = r;  // the trace id column carries the round for signals
        pkt.round_id = r;
        pkt.layer = layer_;
        router_admit(p, new_packet(std::move(pkt)), false);
        n.counters.end_signals_sent++;
    }
}

void Sim::check_round(uint32_t p, uint32_t r) {
    NodeState& n = nodes_[p];
    if (r >= rounds_) return;
    RoundState& rs = n.rounds[r];
    if (!rs.signaled && rs.sends_done && rs.done_aggs == rs.expected_aggs &&
        rs.done_combs == rs.expected_combs) {
        rs.signaled = true;
        broadcast_end_signals(p, r);
    }
    if (rs.signaled && !rs.closed && rs.signals >= cfg_.num_nodes - 1) {
        rs.closed = true;
        on_round_closed(p, r);
    }
}

void Sim::on_round_closed(uint32_t p, uint32_t r) {
    NodeState& n = nodes_[p];
    while (n.min_open_round < rounds_ && n.rounds[n.min_open_round].closed) n.min_open_round++;
    if (n.agg->exists(kReserveBit | r)) {
        n.agg->unpin(kReserveBit | r);
        n.agg->release(kReserveBit | r);  // leftover from vertices that never aggregated
    }
    closed_total_++;
    last_activity_ = std::max(last_activity_, now_);
    if (round_log_) {
        (*round_log_) << "layer " << layer_ << " round " << r << " node " << p
                      << " closed at cycle " << now_ << "\n";
    }
    schedule_inject_kick(p);
    schedule_receive_kick(p);
    if (closed_total_ == uint64_t(cfg_.num_nodes) * rounds_) {
        if (layer_ < cfg_.layers) {
            layer_++;
            init_layer();
        } else {
            finished_ = true;
        }
    }
}

void Sim::handle(const Event& ev) {
    now_ = ev.time;
    switch (ev.kind) {
        case Ev::StressTick: {
            for (uint32_t p = 0; p < cfg_.num_nodes; p++) {
                for (uint32_t d = 0; d < 4; d++) {
                    uint32_t nb = neighbor_of(p, static_cast<Port>(d), geom_);
                    nodes_[p].router.neighbor_stress[d] = stress_ratio(
                        nodes_[nb].router.used_bytes, cfg_.node.routing_buffer_bytes);
                }
            }
            // Stop ticking once nothing else can happen so a stall is
            // reported as a deadlock instead of spinning forever.
            if (!finished_ && !queue_.empty())
                push(now_ + cfg_.stress_period, Ev::StressTick, 0);
            return;
        }
        case Ev::DramDone: {
            DramCb cb = dram_cbs_[ev.aux];
            if (cb.what == DramCb::LoadItem) {
                SendItem& item = nodes_[cb.node].items[cb.a];
                item.pending_dram--;
                if (item.pending_dram == 0) {
                    item.ready = true;
                    try_inject(cb.node);
                }
            } else if (cb.what == DramCb::JobReload) {
                bool agg_mode = cb.a == 0;
                ComputeSide& side =
                    agg_mode ? nodes_[cb.node].agg_side : nodes_[cb.node].comb_side;
                side.pending_reloads--;
                if (side.loading && side.pending_reloads == 0) begin_execution(cb.node, agg_mode);
            } else if (cb.what == DramCb::ResultWrite) {
                nodes_[cb.node].rounds[cb.a].done_combs++;
                check_round(cb.node, cb.a);
            }
            break;
        }
        case Ev::LinkArrival: {
            Packet& pkt = live_.at(ev.payload);
            if (pkt.kind != PacketKind::EndSignal) {
                NodeCounters& c = nodes_[ev.node].counters;
                c.total_payload_arrivals++;
                uint64_t bit = 1ull << ev.node;
                if (seen_[pkt.source_vid] & bit)
                    c.redundant_payload_arrivals++;
                else
                    seen_[pkt.source_vid] |= bit;
            }
            on_arrival(ev.node, ev.payload);
            break;
        }
        case Ev::PortKick: {
            nodes_[ev.node].router.ports[ev.aux].kick_scheduled = false;
            try_port(ev.node, ev.aux);
            break;
        }
        case Ev::ReceiveKick: {
            nodes_[ev.node].receive_kick_scheduled = false;
            try_receive(ev.node);
            try_start(ev.node);
            break;
        }
        case Ev::InjectKick: {
            nodes_[ev.node].inject_kick_scheduled = false;
            try_inject(ev.node);
            break;
        }
        case Ev::ComputeDone: {
            if (ev.aux == 0)
                finish_agg_job(ev.node);
            else
                finish_comb_job(ev.node);
            break;
        }
    }
    last_activity_ = std::max(last_activity_, now_);
}

std::string Sim::deadlock_diag() const {
    std::ostringstream out;
    out << "deadlock: event queue empty with pending work at cycle " << now_ << "\n";
    out << "live packets: " << live_.size() << "\n";
    uint32_t listed = 0;
    for (auto& [id, pkt] : live_) {
        if (++listed > 32) {
            out << "  ...\n";
            break;
        }
        std::string where = "orphan";
        for (uint32_t p = 0; p < cfg_.num_nodes; p++) {
            const NodeState& n = nodes_[p];
            for (uint32_t d = 0; d < 4; d++) {
                const OutPort& op = n.router.ports[d];
                for (uint64_t q : op.data)
                    if (q == id) where = "node " + std::to_string(p) + " data port " +
                                         std::to_string(d);
                for (uint64_t q : op.control)
                    if (q == id) where = "node " + std::to_string(p) + " ctrl port " +
                                         std::to_string(d);
            }
            for (auto& [round, dq] : n.receive_q)
                for (uint64_t q : dq)
                    if (q == id) where = "node " + std::to_string(p) + " receive_q";
        }
        out << "  pkt " << id << " kind " << int(pkt.kind) << " next_dest " << pkt.next_dest
            << " svid " << pkt.source_vid << " round " << pkt.round_id << " at " << where
            << "\n";
    }
    for (uint32_t p = 0; p < cfg_.num_nodes; p++) {
        const NodeState& n = nodes_[p];
        for (uint32_t r = 0; r < rounds_; r++) {
            const RoundState& rs = n.rounds[r];
            if (rs.closed) continue;
            out << "node " << p << " round " << r << ": aggs " << rs.done_aggs << "/"
                << rs.expected_aggs << " combs " << rs.done_combs << "/" << rs.expected_combs
                << " sends_done " << rs.sends_done << " signals " << rs.signals << "\n";
        }
        if (!n.emissions.empty())
            out << "node " << p << ": " << n.emissions.size() << " blocked emissions\n";
        out << "node " << p << ": router bytes " << n.router.used_bytes << ", agg "
            << n.agg->used() << "/" << n.agg->capacity() << ", edge " << n.edge_used
            << ", agg queue " << n.agg_side.queue.size() << ", comb queue "
            << n.comb_side.queue.size() << ", next_reserve " << n.next_reserve_round
            << ", min_open " << n.min_open_round << "\n";
        for (auto& [round, dq] : n.receive_q) {
            if (dq.empty()) continue;
            out << "node " << p << ": receive head round " << round << " reserved "
                << (round < rounds_ && n.partial_reserved[round]) << " expected_combs "
                << n.rounds[round].expected_combs << "\n";
        }
        n.agg->for_each_object([&](uint64_t id, const AggBuffer::Object& obj) {
            out << "node " << p << ": agg object " << std::hex << id << std::dec << " bytes "
                << obj.bytes << " resident " << obj.resident << " pins " << obj.pins << "\n";
        });
    }
    return out.str();
}

SimResult Sim::run() {
    nodes_.clear();
    nodes_.resize(cfg_.num_nodes);
    for (auto& n : nodes_) {
        n.agg = std::make_unique<AggBuffer>(cfg_.node.agg_buffer_bytes, cfg_.spill_allowed());
        n.dram = std::make_unique<DramPipe>(cfg_.node.dram_bandwidth_bytes_per_cycle,
                                            cfg_.node.dram_latency_cycles,
                                            cfg_.node.dram_access_granularity);
    }
    if (trace_) {
        trace_->config("model", model_name(cfg_.model));
        trace_->config("nodes", std::to_string(cfg_.num_nodes));
        trace_->config("feature_len", std::to_string(g_.feature_len_in));
        trace_->config("feature_len_out", std::to_string(g_.feature_len_out));
        trace_->config("layers", std::to_string(cfg_.layers));
    }

    layer_ = 1;
    init_layer();
    push(cfg_.stress_period, Ev::StressTick, 0);

    while (!queue_.empty() && !finished_) {
        Event ev = queue_.top();
        queue_.pop();
        handle(ev);
    }

    SimResult result;
    if (!finished_) {
        result.deadlock = true;
        result.diagnostic = deadlock_diag();
    }

    MetricsReport& report = result.report;
    report.cycles = last_activity_;
    report.per_node.resize(cfg_.num_nodes);
    for (uint32_t p = 0; p < cfg_.num_nodes; p++) report.per_node[p] = nodes_[p].counters;
    report.finalize(cfg_.port_bandwidth(), cfg_.node.dram_bandwidth_bytes_per_cycle,
                    cfg_.node.arrays, cfg_.energy);
    return result;
}

} // namespace

SimResult run_simulation(const SimConfig& cfg, const CsrGraph& g, const PartitionPlan* plan,
                         TraceWriter* trace, std::ostream* round_log) {
    std::optional<PartitionPlan> built;
    if (!plan) {
        built = plan_for_config(cfg, g);
        plan = &*built;
    }
    std::optional<PartitionPlan> sampled;
    if (cfg.sample_fraction < 1.0) {
        sampled = subsample_vertices(*plan, cfg.sample_fraction, cfg.seed);
        plan = &*sampled;
    }
    Sim sim(cfg, g, *plan, trace, round_log);
    SimResult result = sim.run();

    auto& echo = result.report.config_echo;
    echo.emplace_back("model", model_name(cfg.model));
    echo.emplace_back("nodes", std::to_string(cfg.num_nodes));
    echo.emplace_back("seed", std::to_string(cfg.seed));
    echo.emplace_back("layers", std::to_string(cfg.layers));
    echo.emplace_back("feature_len", std::to_string(g.feature_len_in));
    echo.emplace_back("feature_len_out", std::to_string(g.feature_len_out));
    echo.emplace_back("network_bandwidth",
                      std::to_string(cfg.network_bandwidth_bytes_per_cycle));
    echo.emplace_back("dram_bandwidth",
                      std::to_string(cfg.node.dram_bandwidth_bytes_per_cycle));
    echo.emplace_back("link_latency", std::to_string(cfg.link_latency_cycles));
    echo.emplace_back("rounds", std::to_string(plan->rounds));
    echo.emplace_back("sample_fraction", std::to_string(cfg.sample_fraction));
    return result;
}

} // namespace mgsim
