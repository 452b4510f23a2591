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

#ifndef ALLPAIRS_STORAGE_HPP
#define ALLPAIRS_STORAGE_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "allpairs/app.hpp"
#include "allpairs/types.hpp"

namespace allpairs {

/// Classic token bucket over a steady clock. Budget is in bytes.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  TokenBucket(double rate_per_s, double burst, Clock::time_point now = Clock::now());

  /// Takes up to `cost` tokens, returning how many were granted.
  double attempt(Clock::time_point now, double cost);

  /// Time until `cost` tokens would be available, assuming no competition.
  Clock::duration wait_hint(double cost) const;

  double rate() const { return rate_; }

 private:
  void refill(Clock::time_point now);

  double rate_;
  double burst_;
  double budget_ = 0.0;
  Clock::time_point last_;
};

/// Fluid processor-sharing model of one bandwidth-capped resource: all
/// active transfers progress at rate / active_count. Used by the simulator
/// for the shared storage server.
class FairShareLink {
 public:
  explicit FairShareLink(double bytes_per_s);

  std::uint64_t add(Nanos now, double bytes);
  /// Earliest finishing transfer, assuming no further arrivals.
  std::optional<std::pair<Nanos, std::uint64_t>> next_completion() const;
  void complete(Nanos now, std::uint64_t id);

  std::size_t active() const { return remaining_.size(); }

 private:
  void advance(Nanos now);

  double rate_;
  Nanos last_{0};
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, double> remaining_;
};

/// Central read-only file store. Blobs carry a modeled size that drives I/O
/// timing; the stored bytes may be smaller (synthetic workloads).
class StorageServer {
 public:
  struct Options {
    double bandwidth_bytes_per_s = 400e6;
    Nanos request_latency{200'000};
  };

  StorageServer() : StorageServer(Options{}) {}
  explicit StorageServer(Options options);

  void put(std::string path, Bytes content, std::uint64_t modeled_bytes);
  void put(std::string path, Bytes content);

  bool contains(const std::string& path) const;
  std::uint64_t modeled_size(const std::string& path) const;

  /// Content lookup without throttling. Throws NotFound.
  ItemData fetch(const std::string& path) const;

  /// Throttled read for real-time execution: sleeps for the request latency
  /// and draws the modeled size from the shared token bucket.
  ItemData read(const std::string& path);

  std::uint64_t bytes_served() const { return bytes_served_.load(); }
  const Options& options() const { return options_; }

  /// Duration of a lone read of `bytes` with a free cap.
  Nanos uncontended_duration(std::uint64_t bytes) const;

 private:
  struct Blob {
    Bytes content;
    std::uint64_t modeled_bytes;
  };

  const Blob& lookup(const std::string& path) const;

  Options options_;
  std::map<std::string, Blob> blobs_;
  std::mutex bucket_mutex_;
  TokenBucket bucket_;
  std::atomic<std::uint64_t> bytes_served_{0};
};

}  // namespace allpairs

#endif  // ALLPAIRS_STORAGE_HPP
