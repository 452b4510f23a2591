// Copyright 2026 The allpairs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <random>

#include "allpairs/cache.hpp"
#include "support.hpp"

using namespace allpairs;

namespace {

Bytes blob(char c, std::size_t n = 8) { return Bytes(n, std::byte(c)); }

WriteTicket expect_miss(CacheTier& tier, ItemKey key, std::optional<ItemKey>* evicted = nullptr) {
  auto r = tier.acquire(key);
  REQUIRE(std::holds_alternative<Miss>(r));
  auto& m = std::get<Miss>(r);
  if (evicted) *evicted = m.evicted;
  return std::move(m.ticket);
}

ReadLease expect_hit(CacheTier& tier, ItemKey key) {
  auto r = tier.acquire(key);
  REQUIRE(std::holds_alternative<Hit>(r));
  return std::move(std::get<Hit>(r).lease);
}

}  // namespace

TEST_CASE("cold acquire misses and publish makes it hit") {
  CacheTier tier(TierLevel::host(), 4, 64);
  auto t = expect_miss(tier, ItemKey{5});
  CHECK(tier.inspect(ItemKey{5})->state == SlotState::Write);
  tier.publish(std::move(t), blob('a'));
  auto lease = expect_hit(tier, ItemKey{5});
  CHECK(tier.inspect(ItemKey{5})->readers == 1);
  CHECK(lease.data().size() == 8);
  CHECK(lease.data()[0] == std::byte('a'));
}

TEST_CASE("LRU victim is the oldest unpinned slot") {
  CacheTier tier(TierLevel::host(), 2, 64);
  tier.publish(expect_miss(tier, ItemKey{1}), blob('1'));
  tier.publish(expect_miss(tier, ItemKey{2}), blob('2'));
  CHECK(tier.inspect(ItemKey{1})->lru_stamp < tier.inspect(ItemKey{2})->lru_stamp);
  std::optional<ItemKey> evicted;
  auto t = expect_miss(tier, ItemKey{3}, &evicted);
  REQUIRE(evicted);
  CHECK(*evicted == ItemKey{1});
  CHECK_FALSE(tier.inspect(ItemKey{1}));
  CHECK(tier.inspect(ItemKey{2}));
  tier.abort(std::move(t));
}

TEST_CASE("touching a slot protects it from eviction") {
  CacheTier tier(TierLevel::host(), 2, 64);
  tier.publish(expect_miss(tier, ItemKey{1}), blob('1'));
  tier.publish(expect_miss(tier, ItemKey{2}), blob('2'));
  expect_hit(tier, ItemKey{1}).release();
  std::optional<ItemKey> evicted;
  tier.abort(expect_miss(tier, ItemKey{3}, &evicted));
  CHECK(evicted == ItemKey{2});
}

TEST_CASE("a second job waits on an in-flight write") {
  CacheTier tier(TierLevel::host(), 2, 64);
  auto t = expect_miss(tier, ItemKey{7});
  int woken = 0;
  auto r = tier.acquire(ItemKey{7}, [&] { ++woken; });
  CHECK(std::holds_alternative<MustWait>(r));
  CHECK(woken == 0);
  tier.publish(std::move(t), blob('7'));
  CHECK(woken == 1);
  expect_hit(tier, ItemKey{7});
}

TEST_CASE("abort empties the slot and wakes waiters") {
  CacheTier tier(TierLevel::host(), 2, 64);
  auto t = expect_miss(tier, ItemKey{7});
  int woken = 0;
  tier.acquire(ItemKey{7}, [&] { ++woken; });
  tier.acquire(ItemKey{7}, [&] { ++woken; });
  tier.abort(std::move(t));
  CHECK(woken == 2);
  CHECK_FALSE(tier.inspect(ItemKey{7}));
  auto again = expect_miss(tier, ItemKey{7});
  auto r = tier.acquire(ItemKey{7});
  CHECK(std::holds_alternative<MustWait>(r));
  tier.abort(std::move(again));
  CHECK(tier.snapshot_stats().aborts == 2);
}

TEST_CASE("dropping an unpublished ticket aborts it") {
  CacheTier tier(TierLevel::host(), 1, 64);
  { auto t = expect_miss(tier, ItemKey{1}); }
  CHECK_FALSE(tier.inspect(ItemKey{1}));
  tier.abort(expect_miss(tier, ItemKey{2}));
}

TEST_CASE("release decrements readers and unpins at zero") {
  CacheTier tier(TierLevel::host(), 1, 64);
  tier.publish(expect_miss(tier, ItemKey{1}), blob('1'));
  auto a = expect_hit(tier, ItemKey{1});
  auto b = expect_hit(tier, ItemKey{1});
  CHECK(tier.inspect(ItemKey{1})->readers == 2);
  tier.release(std::move(a));
  CHECK(tier.inspect(ItemKey{1})->readers == 1);
  CHECK(std::holds_alternative<NoEvictableSlot>(tier.acquire(ItemKey{2})));
  tier.release(std::move(b));
  CHECK(tier.inspect(ItemKey{1})->readers == 0);
  std::optional<ItemKey> evicted;
  tier.abort(expect_miss(tier, ItemKey{2}, &evicted));
  CHECK(evicted == ItemKey{1});
  tier.abort(expect_miss(tier, ItemKey{1}));
}

TEST_CASE("all slots pinned yields NoEvictableSlot") {
  CacheTier tier(TierLevel::on_device(0), 2, 64);
  auto t1 = expect_miss(tier, ItemKey{1});
  auto l2 = tier.publish_and_pin(expect_miss(tier, ItemKey{2}), blob('2'));
  CHECK(std::holds_alternative<NoEvictableSlot>(tier.acquire(ItemKey{3})));
  CHECK(tier.snapshot_stats().no_slot == 1);
  tier.abort(std::move(t1));
}

TEST_CASE("oversized publish is rejected") {
  CacheTier tier(TierLevel::host(), 1, 4);
  auto t = expect_miss(tier, ItemKey{1});
  CHECK_THROWS(tier.publish(std::move(t), blob('x', 8)));
}

TEST_CASE("counters") {
  CacheTier tier(TierLevel::host(), 8, 64);
  tier.publish(expect_miss(tier, ItemKey{1}), blob('1'));
  auto s = tier.snapshot_stats();
  CHECK(s.hits == 0);
  CHECK(s.misses == 1);
  expect_hit(tier, ItemKey{1});
  expect_hit(tier, ItemKey{1});
  CHECK(tier.snapshot_stats().hits == 2);
  for (std::uint64_t k = 2; k <= 8; ++k) tier.publish(expect_miss(tier, ItemKey{k}), blob('k'));
  s = tier.snapshot_stats();
  CHECK(s.evictions == 0);
  CHECK(s.occupancy == 8);
  CHECK(s.capacity == 8);
}

TEST_CASE("peek only sees readable slots") {
  CacheTier tier(TierLevel::host(), 2, 64);
  auto t = expect_miss(tier, ItemKey{1});
  CHECK_FALSE(tier.peek(ItemKey{1}));
  tier.publish(std::move(t), blob('p'));
  REQUIRE(tier.peek(ItemKey{1}));
  CHECK(tier.peek(ItemKey{1})->size() == 8);
  CHECK(tier.inspect(ItemKey{1})->readers == 0);
}

TEST_CASE("slot count from a byte budget") {
  CHECK(CacheTier::slots_for_bytes(12'000'000'000ULL, 38'100'000) == 314);
  CHECK(CacheTier::slots_for_bytes(100, 200) == 0);
}

TEST_CASE("random operations keep the tier consistent with a model") {
  std::mt19937_64 rng(42);
  CacheTier tier(TierLevel::host(), 4, 16);
  std::map<std::uint64_t, char> published;  // model of readable content
  std::vector<ReadLease> leases;
  for (int step = 0; step < 20000; ++step) {
    const std::uint64_t k = rng() % 10;
    const int op = static_cast<int>(rng() % 3);
    if (op == 0 && !leases.empty()) {
      const std::size_t idx = rng() % leases.size();
      tier.release(std::move(leases[idx]));
      leases.erase(leases.begin() + static_cast<std::ptrdiff_t>(idx));
      continue;
    }
    auto r = tier.acquire(ItemKey{k});
    if (auto* h = std::get_if<Hit>(&r)) {
      REQUIRE(published.count(k));
      REQUIRE(h->lease.data()[0] == std::byte(published[k]));
      if (leases.size() < 3) {
        leases.push_back(std::move(h->lease));
      } else {
        h->lease.release();
      }
    } else if (auto* m = std::get_if<Miss>(&r)) {
      if (m->evicted) published.erase(m->evicted->index());
      REQUIRE_FALSE(published.count(k));
      const char c = static_cast<char>('a' + step % 26);
      tier.publish(std::move(m->ticket), blob(c));
      published[k] = c;
    } else {
      REQUIRE(std::holds_alternative<NoEvictableSlot>(r));
    }
    std::size_t pinned = 0;
    for (const auto& s : tier.slots()) pinned += s.readers > 0;
    REQUIRE(pinned <= 3);
  }
}
