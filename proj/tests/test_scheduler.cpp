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

#include <atomic>
#include <set>
#include <thread>

#include "allpairs/scheduler.hpp"
#include "support.hpp"

using namespace allpairs;

TEST_CASE("root split drops the empty quadrant") {
  const auto kids = split(Region{0, 8, 0, 8});
  const std::vector<Region> expected = {{0, 4, 0, 4}, {0, 4, 4, 8}, {4, 8, 4, 8}};
  CHECK(kids == expected);
}

TEST_CASE("two items split into a single pair") {
  std::vector<TaskNode> leaves;
  for_each_leaf(root_task(2), 1, [&](const TaskNode& t) { leaves.push_back(t); });
  REQUIRE(leaves.size() == 1);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
  leaves[0].region.for_each_pair([&](auto i, auto j) { pairs.emplace_back(i, j); });
  CHECK(pairs == std::vector<std::pair<std::uint64_t, std::uint64_t>>{{0, 1}});
}

TEST_CASE("children levels are one deeper") {
  for (const auto& c : split(TaskNode{Region{0, 16, 0, 16}, 2})) CHECK(c.level == 3);
}

TEST_CASE("leaves cover every pair exactly once") {
  for (std::uint64_t n = 0; n <= 64; ++n) {
    for (std::uint64_t leaf : {1u, 3u, 4u, 8u}) {
      std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
      std::uint64_t total = 0;
      for_each_leaf(root_task(n), leaf, [&](const TaskNode& t) {
        CHECK(t.region.rows() <= leaf);
        CHECK(t.region.cols() <= leaf);
        t.region.for_each_pair([&](std::uint64_t i, std::uint64_t j) {
          CHECK(i < j);
          CHECK(seen.emplace(i, j).second);
          ++total;
        });
        CHECK(t.region.pair_count() > 0);
      });
      CHECK(total == pair_count(n));
    }
  }
}

TEST_CASE("region pair counts") {
  CHECK(Region{4, 8, 4, 8}.pair_count() == 6);
  CHECK(Region{0, 4, 4, 8}.pair_count() == 16);
  CHECK(Region{4, 8, 0, 4}.pair_count() == 0);
  CHECK(Region{0, 8, 0, 8}.pair_count() == 28);
  CHECK(Region{2, 6, 3, 5}.pair_count() == 3);
}

TEST_CASE("pair index is a dense bijection") {
  const std::uint64_t n = 37;
  std::uint64_t expect = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = i + 1; j < n; ++j) CHECK(pair_index(i, j, n) == expect++);
  }
}

TEST_CASE("deque pops deepest and gives thieves the largest") {
  WorkerDeque d;
  d.push(TaskNode{Region{0, 1, 0, 2}, 2});
  d.push(TaskNode{Region{0, 1, 0, 3}, 5});
  CHECK(d.pop_deepest()->level == 5);

  WorkerDeque v;
  for (std::uint16_t lvl : {1, 3, 6}) v.push(TaskNode{Region{0, lvl, 0, lvl}, lvl});
  CHECK(v.top_level() == 1);
  CHECK(v.steal_highest()->level == 1);
  CHECK(v.pop_deepest()->level == 6);
  CHECK(v.size() == 1);
  CHECK(v.steal_highest()->level == 3);
  CHECK_FALSE(v.steal_highest());
  CHECK_FALSE(v.pop_deepest());
  CHECK_FALSE(v.top_level());
}

TEST_CASE("a single task goes to exactly one of owner and thief") {
  for (int round = 0; round < 2000; ++round) {
    WorkerDeque d;
    d.push(root_task(4));
    std::atomic<int> got{0};
    std::thread thief([&] { got += d.steal_highest().has_value(); });
    got += d.pop_deepest().has_value();
    thief.join();
    REQUIRE(got == 1);
  }
}

TEST_CASE("concurrent stealing neither loses nor duplicates tasks") {
  WorkerDeque d;
  const int total = 20000;
  for (int i = 0; i < total; ++i) {
    d.push(TaskNode{Region{static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(i) + 1, 0, 0},
                    static_cast<std::uint16_t>(i % 7)});
  }
  std::vector<std::vector<std::uint64_t>> taken(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      while (true) {
        auto task = (t == 0) ? d.pop_deepest() : d.steal_highest();
        if (!task) break;
        taken[t].push_back(task->region.r0);
      }
    });
  }
  for (auto& th : threads) th.join();
  std::set<std::uint64_t> all;
  std::size_t count = 0;
  for (const auto& v : taken) {
    count += v.size();
    all.insert(v.begin(), v.end());
  }
  CHECK(count == total);
  CHECK(all.size() == total);
}

TEST_CASE("job limiter blocks at the limit") {
  JobLimiter lim(2);
  CHECK(lim.try_acquire());
  CHECK(lim.try_acquire());
  CHECK(lim.full());
  CHECK_FALSE(lim.try_acquire());
  std::atomic<bool> entered{false};
  std::thread waiter([&] {
    lim.acquire();
    entered = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  CHECK_FALSE(entered.load());
  lim.release();
  waiter.join();
  CHECK(entered.load());
  CHECK(lim.current() == 2);
}

TEST_CASE("leaf job counts") {
  std::uint64_t jobs = 0;
  Region{0, 1, 1, 2}.for_each_pair([&](auto, auto) { ++jobs; });
  CHECK(jobs == 1);
  jobs = 0;
  Region{4, 8, 4, 8}.for_each_pair([&](auto, auto) { ++jobs; });
  CHECK(jobs == 6);
}

TEST_CASE("ledger marks each pair once") {
  PairLedger ledger(5);
  CHECK(ledger.total() == 10);
  CHECK(ledger.mark(0, 1));
  CHECK_FALSE(ledger.mark(0, 1));
  CHECK(ledger.contains(0, 1));
  CHECK_FALSE(ledger.contains(1, 2));
  for (std::uint64_t i = 0; i < 5; ++i) {
    for (std::uint64_t j = i + 1; j < 5; ++j) ledger.mark(i, j);
  }
  CHECK(ledger.complete());
  CHECK(ledger.marked() == 10);
}

TEST_CASE("large inputs decompose to C(n, 2) pairs") {
  for (auto [n, pairs] : {std::pair<std::uint64_t, std::uint64_t>{256, 32'640},
                          {512, 130'816},
                          {2500, 3'123'750},
                          {4980, 12'397'710}}) {
    std::uint64_t total = 0;
    for_each_leaf(root_task(n), 8, [&](const TaskNode& t) { total += t.region.pair_count(); });
    CHECK(total == pairs);
  }
}
