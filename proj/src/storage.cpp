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

#include "allpairs/storage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "allpairs/errors.hpp"

namespace allpairs {

namespace {
constexpr double kChunkBytes = 64.0 * 1024.0;
}

TokenBucket::TokenBucket(double rate_per_s, double burst, Clock::time_point now)
    : rate_(rate_per_s), burst_(burst), last_(now) {}

void TokenBucket::refill(Clock::time_point now) {
  if (now <= last_) return;
  std::chrono::duration<double> elapsed = now - last_;
  last_ = now;
  budget_ = std::min(burst_, budget_ + rate_ * elapsed.count());
}

double TokenBucket::attempt(Clock::time_point now, double cost) {
  refill(now);
  const double granted = std::clamp(budget_, 0.0, cost);
  budget_ -= granted;
  return granted;
}

TokenBucket::Clock::duration TokenBucket::wait_hint(double cost) const {
  const double deficit = std::max(0.0, cost - budget_);
  return std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(deficit / rate_));
}

FairShareLink::FairShareLink(double bytes_per_s) : rate_(bytes_per_s) {}

void FairShareLink::advance(Nanos now) {
  if (now <= last_) {
    last_ = std::max(last_, now);
    return;
  }
  if (!remaining_.empty()) {
    const double share = rate_ * to_seconds(now - last_) / static_cast<double>(remaining_.size());
    for (auto& [id, left] : remaining_) left = std::max(0.0, left - share);
  }
  last_ = now;
}

std::uint64_t FairShareLink::add(Nanos now, double bytes) {
  advance(now);
  const auto id = next_id_++;
  remaining_.emplace(id, bytes);
  return id;
}

std::optional<std::pair<Nanos, std::uint64_t>> FairShareLink::next_completion() const {
  if (remaining_.empty()) return std::nullopt;
  auto best = remaining_.begin();
  for (auto it = remaining_.begin(); it != remaining_.end(); ++it) {
    if (it->second < best->second) best = it;
  }
  const double seconds = best->second * static_cast<double>(remaining_.size()) / rate_;
  // Round up so that advancing to the completion time drains the transfer.
  const auto delta = Nanos{static_cast<std::int64_t>(std::ceil(seconds * 1e9))};
  return std::make_pair(last_ + delta, best->first);
}

void FairShareLink::complete(Nanos now, std::uint64_t id) {
  advance(now);
  remaining_.erase(id);
}

StorageServer::StorageServer(Options options)
    : options_(options),
      bucket_(options.bandwidth_bytes_per_s, kChunkBytes) {}

void StorageServer::put(std::string path, Bytes content, std::uint64_t modeled_bytes) {
  blobs_[std::move(path)] = Blob{std::move(content), modeled_bytes};
}

void StorageServer::put(std::string path, Bytes content) {
  const auto size = content.size();
  put(std::move(path), std::move(content), size);
}

bool StorageServer::contains(const std::string& path) const { return blobs_.count(path) != 0; }

const StorageServer::Blob& StorageServer::lookup(const std::string& path) const {
  auto it = blobs_.find(path);
  if (it == blobs_.end()) throw NotFound("storage: no such path '" + path + "'");
  return it->second;
}

std::uint64_t StorageServer::modeled_size(const std::string& path) const {
  return lookup(path).modeled_bytes;
}

ItemData StorageServer::fetch(const std::string& path) const {
  return ItemData{Stage::RawFile, lookup(path).content};
}

ItemData StorageServer::read(const std::string& path) {
  const Blob& blob = lookup(path);
  if (options_.request_latency.count() > 0) std::this_thread::sleep_for(options_.request_latency);
  if (std::isfinite(options_.bandwidth_bytes_per_s)) {
    double left = static_cast<double>(blob.modeled_bytes);
    while (left > 0) {
      const double want = std::min(left, kChunkBytes);
      double granted;
      TokenBucket::Clock::duration hint;
      {
        std::lock_guard lock(bucket_mutex_);
        granted = bucket_.attempt(TokenBucket::Clock::now(), want);
        hint = bucket_.wait_hint(want - granted);
      }
      left -= granted;
      if (left > 0 && granted < want) std::this_thread::sleep_for(hint);
    }
  }
  bytes_served_ += blob.modeled_bytes;
  return ItemData{Stage::RawFile, blob.content};
}

Nanos StorageServer::uncontended_duration(std::uint64_t bytes) const {
  if (!std::isfinite(options_.bandwidth_bytes_per_s)) return options_.request_latency;
  return options_.request_latency +
         from_seconds(static_cast<double>(bytes) / options_.bandwidth_bytes_per_s);
}

}  // namespace allpairs
