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

#ifndef ALLPAIRS_METRICS_HPP
#define ALLPAIRS_METRICS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "allpairs/cache.hpp"
#include "allpairs/config.hpp"
#include "allpairs/types.hpp"

namespace allpairs {

struct LaneMetrics {
  std::string lane;
  std::int64_t busy_ns = 0;
  std::uint64_t tasks = 0;
};

struct RemoteStats {
  std::uint64_t requests = 0;   // issued by this node
  std::uint64_t hits = 0;
  std::uint64_t failures = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t late_replies = 0;
  std::uint64_t served = 0;     // Data sent as a candidate
  std::uint64_t probes = 0;     // Forward handled as a candidate
  std::uint64_t mediated = 0;   // Request handled as point of contact
};

struct NodeMetrics {
  NodeId node = 0;
  std::uint64_t loads = 0;
  std::uint64_t bytes_loaded = 0;
  std::uint64_t jobs_submitted = 0;
  std::uint64_t jobs_completed = 0;
  TierStats device;  // summed over the node's devices
  TierStats host;
  RemoteStats remote;
  std::map<std::string, std::uint64_t> messages_sent;
  std::uint64_t message_bytes = 0;
  std::uint64_t steal_local_attempts = 0;
  std::uint64_t steal_local_success = 0;
  std::uint64_t steal_remote_attempts = 0;
  std::uint64_t steal_remote_success = 0;
  std::uint64_t steals_served = 0;
  std::uint64_t tasks_created = 0;
  std::uint64_t tasks_executed = 0;
  std::uint64_t leaves_executed = 0;
  double leaf_distance_sum = 0;  // |dr| + |dc| between consecutive leaves per worker
  std::uint64_t leaf_transitions = 0;
  std::uint64_t slot_backoffs = 0;
  std::uint64_t write_through_violations = 0;
  std::int64_t finish_ns = 0;
  std::vector<std::int64_t> device_busy_ns;
  std::vector<LaneMetrics> lanes;
  bool lease_hygiene = true;  // all readers 0, no WRITE slots, at shutdown
};

/// Cluster-wide view of the cache protocol, correlated by request id.
struct ProtocolStats {
  std::uint64_t requests = 0;
  std::uint64_t hits = 0;
  std::uint64_t failures = 0;
  std::vector<std::uint64_t> hits_by_hop;  // [0] = first candidate
  std::uint64_t max_messages = 0;
  std::uint64_t total_messages = 0;
  std::uint64_t bound_violations = 0;  // requests with more than h + 2 messages
};

struct RunMetrics {
  std::string app;
  Mode mode = Mode::Sim;
  std::uint64_t n = 0;
  std::uint64_t pairs = 0;
  std::uint64_t nodes = 1;
  std::uint64_t comparisons_completed = 0;
  std::uint64_t total_loads = 0;
  double reload_factor = 0;  // R
  std::int64_t makespan_ns = 0;
  double t_min_s = 0;
  double t_gpu_s = 0;        // model at the measured R
  double efficiency = 0;     // against t_min
  double efficiency_r_adjusted = 0;
  std::uint64_t io_bytes = 0;
  double io_bytes_per_s = 0;
  std::uint64_t tasks_created = 0;
  std::uint64_t tasks_executed = 0;
  ProtocolStats protocol;
  std::vector<NodeMetrics> per_node;
  nlohmann::json config;

  double makespan_s() const { return static_cast<double>(makespan_ns) * 1e-9; }
};

nlohmann::json to_json(const TierStats& s);
TierStats tier_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NodeMetrics& m);
NodeMetrics node_metrics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProtocolStats& p);
nlohmann::json to_json(const RunMetrics& m);

}  // namespace allpairs

#endif  // ALLPAIRS_METRICS_HPP
