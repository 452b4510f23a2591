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

#include "allpairs/scheduler.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace allpairs {

std::uint64_t Region::pair_count() const {
  if (r0 >= r1 || c0 >= c1) return 0;
  std::uint64_t total = 0;
  // Rows entirely left of the column range see every column.
  const std::uint64_t full_end = std::min(r1, c0);
  if (full_end > r0) total += (full_end - r0) * (c1 - c0);
  // Rows inside the column range see c1 - i - 1 columns.
  const std::uint64_t lo = std::max(r0, c0);
  const std::uint64_t hi = std::min(r1, c1 - 1);
  if (hi > lo) {
    const std::uint64_t first = c1 - 1 - lo;
    const std::uint64_t last = c1 - hi;  // term for i = hi - 1
    total += (first + last) * (hi - lo) / 2;
  }
  return total;
}

std::vector<Region> split(const Region& region) {
  const std::uint64_t rm = region.rows() > 1 ? region.r0 + region.rows() / 2 : region.r1;
  const std::uint64_t cm = region.cols() > 1 ? region.c0 + region.cols() / 2 : region.c1;
  const std::uint64_t row_cuts[3] = {region.r0, rm, region.r1};
  const std::uint64_t col_cuts[3] = {region.c0, cm, region.c1};
  std::vector<Region> out;
  out.reserve(4);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      Region q{row_cuts[r], row_cuts[r + 1], col_cuts[c], col_cuts[c + 1]};
      if (q.rows() == 0 || q.cols() == 0 || q.pair_count() == 0) continue;
      out.push_back(q);
    }
  }
  return out;
}

std::vector<TaskNode> split(const TaskNode& task) {
  std::vector<TaskNode> out;
  for (const Region& r : split(task.region)) {
    out.push_back(TaskNode{r, static_cast<std::uint16_t>(task.level + 1)});
  }
  return out;
}

void WorkerDeque::push(const TaskNode& task) {
  std::lock_guard lock(mutex_);
  tasks_.push_back(task);
}

std::optional<TaskNode> WorkerDeque::pop_deepest() {
  std::lock_guard lock(mutex_);
  if (tasks_.empty()) return std::nullopt;
  auto best = tasks_.rbegin();
  for (auto it = tasks_.rbegin(); it != tasks_.rend(); ++it) {
    if (it->level > best->level) best = it;
  }
  TaskNode t = *best;
  tasks_.erase(std::next(best).base());
  return t;
}

std::optional<TaskNode> WorkerDeque::steal_highest() {
  std::lock_guard lock(mutex_);
  if (tasks_.empty()) return std::nullopt;
  auto best = tasks_.begin();
  for (auto it = tasks_.begin(); it != tasks_.end(); ++it) {
    if (it->level < best->level) best = it;
  }
  TaskNode t = *best;
  tasks_.erase(best);
  return t;
}

std::optional<std::uint16_t> WorkerDeque::top_level() const {
  std::lock_guard lock(mutex_);
  if (tasks_.empty()) return std::nullopt;
  std::uint16_t level = tasks_.front().level;
  for (const auto& t : tasks_) level = std::min(level, t.level);
  return level;
}

std::size_t WorkerDeque::size() const {
  std::lock_guard lock(mutex_);
  return tasks_.size();
}

bool JobLimiter::try_acquire() {
  std::lock_guard lock(mutex_);
  if (current_ >= limit_) return false;
  ++current_;
  return true;
}

void JobLimiter::acquire() {
  std::unique_lock lock(mutex_);
  freed_.wait(lock, [&] { return current_ < limit_; });
  ++current_;
}

void JobLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    if (current_ == 0) throw std::logic_error("JobLimiter: release without acquire");
    --current_;
  }
  freed_.notify_one();
}

std::size_t JobLimiter::current() const {
  std::lock_guard lock(mutex_);
  return current_;
}

PairLedger::PairLedger(std::uint64_t n)
    : n_(n), total_(pair_count(n)), bits_((total_ + 63) / 64, 0) {}

bool PairLedger::mark(std::uint64_t i, std::uint64_t j) {
  if (!(i < j && j < n_)) throw std::out_of_range("PairLedger: bad pair");
  const auto idx = pair_index(i, j, n_);
  auto& word = bits_[idx / 64];
  const std::uint64_t bit = std::uint64_t{1} << (idx % 64);
  if (word & bit) return false;
  word |= bit;
  ++marked_;
  return true;
}

bool PairLedger::contains(std::uint64_t i, std::uint64_t j) const {
  const auto idx = pair_index(i, j, n_);
  return (bits_[idx / 64] >> (idx % 64)) & 1u;
}

}  // namespace allpairs
