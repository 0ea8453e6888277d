#include "mgsim/node.hpp"
#include "mgsim/graph.hpp"

#include <algorithm>
#include <cmath>

namespace mgsim {

uint64_t aggregate_cost(uint32_t feature_len, uint64_t edges, uint32_t arrays, uint32_t lanes) {
    if (edges == 0) return 0;
    uint64_t lanes_total = uint64_t(arrays) * lanes;
    uint64_t work = edges * feature_len;
    return (work + lanes_total - 1) / lanes_total + 3;
}

uint64_t combine_cost(uint32_t f_in, uint32_t f_out, uint32_t arrays, uint32_t lanes) {
    uint64_t lanes_total = uint64_t(arrays) * lanes;
    uint64_t macs = uint64_t(f_in) * f_out;
    return (macs + lanes_total - 1) / lanes_total + f_in + lanes_total;
}

std::pair<uint32_t, uint32_t> schedule_arrays(uint64_t agg_ops, uint64_t comb_ops,
                                              uint32_t total) {
    if (agg_ops == 0 && comb_ops == 0) return {0, 0};
    if (comb_ops == 0) return {total, 0};
    if (agg_ops == 0) return {0, total};
    double share = double(agg_ops) / double(agg_ops + comb_ops);
    uint32_t a = static_cast<uint32_t>(std::lround(share * total));
    a = std::clamp<uint32_t>(a, 1, total - 1);
    return {a, total - a};
}

const char* dram_purpose_name(DramPurpose p) {
    switch (p) {
        case DramPurpose::FeatureLoad: return "feat";
        case DramPurpose::TopologyLoad: return "topo";
        case DramPurpose::WeightLoad: return "wload";
        case DramPurpose::ResultWrite: return "result";
        case DramPurpose::ReplicaSpill: return "spill";
        case DramPurpose::ReplicaReload: return "reload";
    }
    return "?";
}

bool AggBuffer::acquire(ObjectId id, uint64_t bytes, uint64_t stamp,
                        std::vector<ObjectId>& evicted) {
    auto it = objects_.find(id);
    if (it != objects_.end() && it->second.resident) {
        it->second.lru = stamp;
        return true;
    }
    if (bytes > capacity_)
        throw ConfigError("aggregation buffer cannot hold a single replica");

    while (used_ + bytes > capacity_) {
        if (!spill_allowed_) return false;
        // Evict the least recently used unpinned resident object.
        ObjectId victim = 0;
        uint64_t best = UINT64_MAX;
        bool found = false;
        for (auto& [oid, obj] : objects_) {
            if (obj.resident && obj.pins == 0 && obj.lru < best) {
                best = obj.lru;
                victim = oid;
                found = true;
            }
        }
        if (!found) return false;  // everything pinned; caller retries later
        objects_[victim].resident = false;
        used_ -= objects_[victim].bytes;
        evicted.push_back(victim);
    }

    Object& obj = objects_[id];
    obj.bytes = bytes;
    obj.resident = true;
    obj.lru = stamp;
    used_ += bytes;
    if (used_ > capacity_)
        throw std::logic_error("aggregation buffer occupancy exceeded capacity");
    return true;
}

bool AggBuffer::is_resident(ObjectId id) const {
    auto it = objects_.find(id);
    return it != objects_.end() && it->second.resident;
}

void AggBuffer::pin(ObjectId id) { objects_.at(id).pins++; }

void AggBuffer::unpin(ObjectId id) {
    auto& obj = objects_.at(id);
    if (obj.pins > 0) obj.pins--;
}

void AggBuffer::touch(ObjectId id, uint64_t stamp) {
    auto it = objects_.find(id);
    if (it != objects_.end()) it->second.lru = stamp;
}

void AggBuffer::release(ObjectId id) {
    auto it = objects_.find(id);
    if (it == objects_.end()) return;
    if (it->second.resident) used_ -= it->second.bytes;
    objects_.erase(it);
}

void AggBuffer::shrink(ObjectId id, uint64_t delta) {
    auto& obj = objects_.at(id);
    if (delta > obj.bytes) delta = obj.bytes;
    obj.bytes -= delta;
    if (obj.resident) used_ -= delta;
}

} // namespace mgsim
