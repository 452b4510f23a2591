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

#ifndef ALLPAIRS_SCHEDULER_HPP
#define ALLPAIRS_SCHEDULER_HPP

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "allpairs/types.hpp"

namespace allpairs {

/// Rectangle [r0, r1) x [c0, c1) of the pair matrix. Its work is the set of
/// (i, j) inside with i < j.
struct Region {
  std::uint64_t r0 = 0, r1 = 0, c0 = 0, c1 = 0;

  std::uint64_t rows() const { return r1 - r0; }
  std::uint64_t cols() const { return c1 - c0; }
  std::uint64_t pair_count() const;
  bool is_leaf(std::uint64_t leaf_block) const {
    return rows() <= leaf_block && cols() <= leaf_block;
  }

  template <typename F>
  void for_each_pair(F&& f) const {
    for (std::uint64_t i = r0; i < r1; ++i) {
      for (std::uint64_t j = std::max(c0, i + 1); j < c1; ++j) f(i, j);
    }
  }

  friend bool operator==(const Region&, const Region&) = default;
};

struct TaskNode {
  Region region;
  std::uint16_t level = 0;  // root is 0

  friend bool operator==(const TaskNode&, const TaskNode&) = default;
};

inline TaskNode root_task(std::uint64_t n) { return TaskNode{Region{0, n, 0, n}, 0}; }

/// Quadrants by midpoint bisection of both ranges, in row-major order.
/// Quadrants without any i < j pair are dropped; a side of length one is
/// not bisected.
std::vector<Region> split(const Region& region);

/// Children of a task node, one level deeper.
std::vector<TaskNode> split(const TaskNode& task);

/// Depth-first walk of the task tree below `root`, calling f on each leaf.
template <typename F>
void for_each_leaf(const TaskNode& root, std::uint64_t leaf_block, F&& f) {
  std::vector<TaskNode> stack{root};
  while (!stack.empty()) {
    TaskNode t = stack.back();
    stack.pop_back();
    if (t.region.pair_count() == 0) continue;
    if (t.region.is_leaf(leaf_block)) {
      f(t);
      continue;
    }
    auto children = split(t);
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
  }
}

/// Dense index of pair (i, j), i < j, in [0, n(n-1)/2).
constexpr std::uint64_t pair_index(std::uint64_t i, std::uint64_t j, std::uint64_t n) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

/// Per-worker task container. The owner takes the deepest task (most
/// recently pushed on ties); thieves take the shallowest, i.e. the largest
/// piece of work (least recently pushed on ties). Thread-safe.
class WorkerDeque {
 public:
  void push(const TaskNode& task);
  std::optional<TaskNode> pop_deepest();
  std::optional<TaskNode> steal_highest();
  /// Level of the task a thief would get.
  std::optional<std::uint16_t> top_level() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }

 private:
  mutable std::mutex mutex_;
  std::deque<TaskNode> tasks_;
};

/// Back-pressure on in-flight jobs. Thread-safe.
class JobLimiter {
 public:
  explicit JobLimiter(std::size_t limit) : limit_(limit) {}

  bool try_acquire();
  /// Blocks until a slot frees up.
  void acquire();
  void release();

  std::size_t limit() const { return limit_; }
  std::size_t current() const;
  bool full() const { return current() >= limit_; }

 private:
  std::size_t limit_;
  std::size_t current_ = 0;
  mutable std::mutex mutex_;
  std::condition_variable freed_;
};

/// One bit per pair; detects duplicates.
class PairLedger {
 public:
  explicit PairLedger(std::uint64_t n);

  /// False if the pair was already marked.
  bool mark(std::uint64_t i, std::uint64_t j);
  bool contains(std::uint64_t i, std::uint64_t j) const;
  std::uint64_t marked() const { return marked_; }
  std::uint64_t total() const { return total_; }
  bool complete() const { return marked_ == total_; }

 private:
  std::uint64_t n_;
  std::uint64_t total_;
  std::uint64_t marked_ = 0;
  std::vector<std::uint64_t> bits_;
};

}  // namespace allpairs

#endif  // ALLPAIRS_SCHEDULER_HPP
