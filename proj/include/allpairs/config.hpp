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

#ifndef ALLPAIRS_CONFIG_HPP
#define ALLPAIRS_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "allpairs/storage.hpp"
#include "allpairs/types.hpp"

namespace allpairs {

/// Capacity given either as a slot count or as bytes (floor(bytes / slot)).
struct Capacity {
  std::optional<std::uint64_t> slots;
  std::optional<std::uint64_t> bytes;

  std::size_t resolve(std::uint64_t slot_size) const;
};

struct DeviceConfig {
  double speed = 1.0;
  Capacity cache{64, std::nullopt};
};

struct NodeConfig {
  NodeId id = 0;
  std::vector<DeviceConfig> devices{DeviceConfig{}};
  Capacity host_cache{256, std::nullopt};
  /// 0 selects the host's hardware parallelism in real mode and 16 in
  /// simulation.
  std::size_t cpu_threads = 0;
};

struct NetworkConfig {
  Nanos latency{10'000};
  double bandwidth_bytes_per_s = 5e9;
};

enum class Mode : std::uint8_t { Sim, Real };

struct ClusterConfig {
  std::vector<NodeConfig> nodes{NodeConfig{}};
  NetworkConfig network;
  StorageServer::Options storage;
  /// Host <-> device link, per direction per device.
  double link_bytes_per_s = 12e9;

  std::size_t size() const { return nodes.size(); }
  /// Replaces the node list with `count` copies of the first node.
  void resize(std::size_t count);
};

struct SchedulerConfig {
  std::uint64_t leaf_block = 8;
  /// 0 selects 4 x (device cache slots on the node).
  std::size_t job_limit = 0;
  std::size_t steal_retry_local = 4;
  std::size_t steal_retry_remote = 4;
  Nanos steal_backoff{1'000'000};
  std::uint64_t seed = 1;
};

struct DistCacheConfig {
  bool enabled = true;
  std::size_t hops = 1;
  /// 0 selects max(hops, 4).
  std::size_t history = 0;
  Nanos timeout{5'000'000'000};
};

struct RunConfig {
  nlohmann::json app = {{"name", "synthetic"}};
  ClusterConfig cluster;
  SchedulerConfig scheduler;
  DistCacheConfig dist_cache;
  Mode mode = Mode::Sim;
  bool profiling = false;
  std::string trace_path;
  std::string metrics_path;
  /// Real mode only: modeled stage costs are busy-waited scaled by this.
  double time_scale = 1.0;
  /// Abort with a deadlock report if no job completes for this long.
  Nanos stall_timeout{600'000'000'000};
  std::size_t completion_batch = 64;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

/// Structural checks that do not need the application.
void validate(const RunConfig& c);

const char* to_string(Mode m);

}  // namespace allpairs

#endif  // ALLPAIRS_CONFIG_HPP
