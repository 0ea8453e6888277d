#include "mgsim/node.hpp"
#include "mgsim/graph.hpp"
#include "mgsim/rng.hpp"

#include <doctest.h>

using namespace mgsim;

TEST_CASE("aggregate cost") {
    CHECK(aggregate_cost(128, 1, 1, 128) == 4);  // one vector, one array, plus fill
    CHECK(aggregate_cost(512, 489, 8, 128) == 248);
    CHECK(aggregate_cost(512, 0, 8, 128) == 0);
}

TEST_CASE("aggregate cost is linear in the ops term") {
    uint64_t fill = 3;
    uint64_t one = aggregate_cost(128, 1, 1, 128) - fill;
    for (uint64_t e = 2; e <= 64; e *= 2)
        CHECK(aggregate_cost(128, e, 1, 128) - fill == e * one);
}

TEST_CASE("combine cost") {
    CHECK(combine_cost(512, 128, 8, 128) == 1600);
    CHECK(combine_cost(1, 1, 1, 1) == 3);
    // doubling f_in doubles the MAC term exactly (fill accounted separately)
    uint64_t lanes = 8 * 128;
    uint64_t mac1 = combine_cost(512, 128, 8, 128) - 512 - lanes;
    uint64_t mac2 = combine_cost(1024, 128, 8, 128) - 1024 - lanes;
    CHECK(mac2 == 2 * mac1);
}

TEST_CASE("cost functions are monotone") {
    CHECK(aggregate_cost(512, 10, 8, 128) <= aggregate_cost(512, 11, 8, 128));
    CHECK(aggregate_cost(512, 10, 8, 128) <= aggregate_cost(513, 10, 8, 128));
    CHECK(combine_cost(512, 128, 8, 128) <= combine_cost(512, 129, 8, 128));
    CHECK(combine_cost(512, 128, 8, 128) <= combine_cost(513, 128, 8, 128));
}

TEST_CASE("array scheduling splits proportionally to backlog") {
    CHECK(schedule_arrays(100, 0) == std::pair<uint32_t, uint32_t>{8, 0});
    CHECK(schedule_arrays(0, 100) == std::pair<uint32_t, uint32_t>{0, 8});
    CHECK(schedule_arrays(50, 50) == std::pair<uint32_t, uint32_t>{4, 4});
    CHECK(schedule_arrays(75, 25) == std::pair<uint32_t, uint32_t>{6, 2});
    // a side with any backlog keeps at least one array
    CHECK(schedule_arrays(1, 1000000) == std::pair<uint32_t, uint32_t>{1, 7});
}

TEST_CASE("dram pipe bills at access granularity and serves in order") {
    DramPipe pipe(256.0, 100, 64);
    auto a = pipe.transfer(1, DramDir::Read, 0);
    CHECK(a.billed_bytes == 64);
    CHECK(a.completion_cycle == 101);  // one service cycle plus latency

    DramPipe pipe2(256.0, 100, 64);
    auto r1 = pipe2.transfer(256, DramDir::Read, 0);
    auto r2 = pipe2.transfer(256, DramDir::Read, 0);
    CHECK(r2.completion_cycle == r1.completion_cycle + 1);  // exactly one service apart
}

TEST_CASE("dram pipe conserves billed bytes") {
    DramPipe pipe(100.0, 10, 64);
    Rng rng(5);
    uint64_t expect_read = 0, expect_write = 0;
    for (int i = 0; i < 500; i++) {
        uint64_t bytes = 1 + rng.next_below(5000);
        uint64_t billed = (bytes + 63) / 64 * 64;
        if (rng.next_below(2)) {
            expect_read += billed;
            pipe.transfer(bytes, DramDir::Read, i);
        } else {
            expect_write += billed;
            pipe.transfer(bytes, DramDir::Write, i);
        }
    }
    CHECK(pipe.read_bytes() == expect_read);
    CHECK(pipe.write_bytes() == expect_write);
}

TEST_CASE("aggregation buffer eviction, pinning, and stalls") {
    std::vector<uint64_t> victims;

    AggBuffer strict(1024, false);
    CHECK(strict.acquire(1, 600, 1, victims));
    CHECK(!strict.acquire(2, 600, 2, victims));  // no spill: reservation fails
    CHECK(victims.empty());
    strict.release(1);
    CHECK(strict.acquire(2, 600, 3, victims));

    AggBuffer lru(1024, true);
    CHECK(lru.acquire(10, 400, 1, victims));
    CHECK(lru.acquire(11, 400, 2, victims));
    CHECK(victims.empty());
    CHECK(lru.acquire(12, 400, 3, victims));  // evicts 10, the oldest
    REQUIRE(victims.size() == 1);
    CHECK(victims[0] == 10);
    CHECK(!lru.is_resident(10));
    CHECK(lru.exists(10));

    victims.clear();
    lru.pin(11);
    CHECK(lru.acquire(13, 400, 4, victims));  // must skip the pinned object
    REQUIRE(victims.size() == 1);
    CHECK(victims[0] == 12);
    CHECK(lru.is_resident(11));

    victims.clear();
    lru.pin(13);
    CHECK(!lru.acquire(14, 400, 5, victims));  // everything resident is pinned

    CHECK_THROWS_AS(lru.acquire(15, 4096, 6, victims), ConfigError);
}

TEST_CASE("aggregation buffer shrink returns space") {
    std::vector<uint64_t> victims;
    AggBuffer buf(1000, false);
    CHECK(buf.acquire(1, 800, 1, victims));
    CHECK(buf.used() == 800);
    buf.shrink(1, 300);
    CHECK(buf.used() == 500);
    CHECK(buf.object_bytes(1) == 500);
    CHECK(buf.acquire(2, 500, 2, victims));
}
