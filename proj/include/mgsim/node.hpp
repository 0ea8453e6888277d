#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace mgsim {

// Per-node capacities and rates, defaults from the evaluated system:
// 1 GHz clock, so GB/s and bytes/cycle coincide.
struct NodeConfig {
    uint32_t arrays = 8;
    uint32_t lanes_per_array = 128;
    uint32_t peak_ops_per_cycle() const { return arrays * lanes_per_array * 2; }

    double dram_bandwidth_bytes_per_cycle = 256.0;
    uint32_t dram_latency_cycles = 100;
    uint32_t dram_access_granularity = 64;

    uint64_t edge_buffer_bytes = 128ull << 10;
    uint64_t agg_buffer_bytes = 1ull << 20;
    uint64_t weight_buffer_bytes = 2ull << 20;
    uint64_t combination_buffer_bytes = 256ull << 10;
    uint64_t routing_buffer_bytes = 3ull << 19;  // 1.5 MiB
    uint64_t send_buffer_bytes = 512ull << 10;
    uint64_t loader_buffer_bytes = 896ull << 10;
};

// Aggregation of e neighbor vectors of length f on a lanes: one element per
// lane per cycle plus the three-stage pipeline fill.
uint64_t aggregate_cost(uint32_t feature_len, uint64_t edges, uint32_t arrays, uint32_t lanes);

// Dense f_in x f_out transform: MACs count double against peak, the arrays
// dual-issue, and the systolic fill is f_in + a*l.
uint64_t combine_cost(uint32_t f_in, uint32_t f_out, uint32_t arrays, uint32_t lanes);

// Proportional array split between the two compute modes; a side with
// pending work always keeps at least one array.
std::pair<uint32_t, uint32_t> schedule_arrays(uint64_t aggregate_backlog_ops,
                                              uint64_t combine_backlog_ops,
                                              uint32_t total_arrays = 8);

enum class DramDir : uint8_t { Read = 0, Write = 1 };

enum class DramPurpose : uint8_t {
    FeatureLoad = 0,
    TopologyLoad = 1,
    WeightLoad = 2,
    ResultWrite = 3,
    ReplicaSpill = 4,
    ReplicaReload = 5,
};

const char* dram_purpose_name(DramPurpose p);

// FIFO bandwidth pipe with a fixed latency adder. Requests round up to the
// access granularity and are served back to back.
class DramPipe {
public:
    DramPipe(double bytes_per_cycle, uint32_t latency, uint32_t granularity)
        : bw_(bytes_per_cycle), latency_(latency), gran_(granularity) {}

    struct Result {
        uint64_t billed_bytes;
        uint64_t completion_cycle;
    };

    Result transfer(uint64_t bytes, DramDir dir, uint64_t now) {
        uint64_t billed = (bytes + gran_ - 1) / gran_ * gran_;
        uint64_t start = now > pipe_free_ ? now : pipe_free_;
        uint64_t service = static_cast<uint64_t>((double(billed) + bw_ - 1e-9) / bw_);
        if (service == 0) service = 1;
        pipe_free_ = start + service;
        (dir == DramDir::Read ? read_bytes_ : write_bytes_) += billed;
        busy_cycles_ += service;
        return {billed, pipe_free_ + latency_};
    }

    uint64_t read_bytes() const { return read_bytes_; }
    uint64_t write_bytes() const { return write_bytes_; }
    uint64_t busy_cycles() const { return busy_cycles_; }

private:
    double bw_;
    uint32_t latency_;
    uint32_t gran_;
    uint64_t pipe_free_ = 0;
    uint64_t read_bytes_ = 0;
    uint64_t write_bytes_ = 0;
    uint64_t busy_cycles_ = 0;
};

// Replica / partial-result residency tracking for one node's aggregation
// buffer. Under the round-execution models eviction is forbidden and a
// failed reservation stalls the sender; otherwise the least recently used
// unpinned object spills to DRAM.
class AggBuffer {
public:
    using ObjectId = uint64_t;

    AggBuffer(uint64_t capacity, bool spill_allowed)
        : capacity_(capacity), spill_allowed_(spill_allowed) {}

    struct Object {
        uint64_t bytes = 0;
        bool resident = false;
        uint32_t pins = 0;
        uint64_t lru = 0;
    };

    // Tries to make `id` resident (allocating it if unknown). Evicted victim
    // ids are appended to `evicted`; the caller bills their spill traffic.
    // Returns false when the object cannot fit right now.
    bool acquire(ObjectId id, uint64_t bytes, uint64_t stamp, std::vector<ObjectId>& evicted);

    bool is_resident(ObjectId id) const;
    bool exists(ObjectId id) const { return objects_.count(id) != 0; }
    void pin(ObjectId id);
    void unpin(ObjectId id);
    void touch(ObjectId id, uint64_t stamp);
    void release(ObjectId id);  // drop the object entirely
    // Gives back part of a resident object's bytes (used by reservations).
    void shrink(ObjectId id, uint64_t delta);
    uint64_t used() const { return used_; }
    uint64_t capacity() const { return capacity_; }
    uint64_t object_bytes(ObjectId id) const { return objects_.at(id).bytes; }
    template <typename Fn>
    void for_each_object(Fn&& fn) const {
        for (const auto& [id, obj] : objects_) fn(id, obj);
    }

private:
    uint64_t capacity_;
    bool spill_allowed_;
    uint64_t used_ = 0;
    std::map<ObjectId, Object> objects_;
};

} // namespace mgsim
