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

#include "allpairs/metrics.hpp"

namespace allpairs {

using nlohmann::json;

json to_json(const TierStats& s) {
  return {{"hits", s.hits},           {"misses", s.misses},   {"waits", s.waits},
          {"evictions", s.evictions}, {"aborts", s.aborts},   {"no_slot", s.no_slot},
          {"occupancy", s.occupancy}, {"capacity", s.capacity}};
}

TierStats tier_stats_from_json(const json& j) {
  TierStats s;
  s.hits = j.at("hits");
  s.misses = j.at("misses");
  s.waits = j.at("waits");
  s.evictions = j.at("evictions");
  s.aborts = j.at("aborts");
  s.no_slot = j.at("no_slot");
  s.occupancy = j.at("occupancy");
  s.capacity = j.at("capacity");
  return s;
}

json to_json(const NodeMetrics& m) {
  json lanes = json::array();
  for (const auto& l : m.lanes) {
    lanes.push_back({{"lane", l.lane}, {"busy_ns", l.busy_ns}, {"tasks", l.tasks}});
  }
  return {
      {"node", m.node},
      {"loads", m.loads},
      {"bytes_loaded", m.bytes_loaded},
      {"jobs_submitted", m.jobs_submitted},
      {"jobs_completed", m.jobs_completed},
      {"device_cache", to_json(m.device)},
      {"host_cache", to_json(m.host)},
      {"remote",
       {{"requests", m.remote.requests},
        {"hits", m.remote.hits},
        {"failures", m.remote.failures},
        {"timeouts", m.remote.timeouts},
        {"late_replies", m.remote.late_replies},
        {"served", m.remote.served},
        {"probes", m.remote.probes},
        {"mediated", m.remote.mediated}}},
      {"messages_sent", m.messages_sent},
      {"message_bytes", m.message_bytes},
      {"steals",
       {{"local_attempts", m.steal_local_attempts},
        {"local_success", m.steal_local_success},
        {"remote_attempts", m.steal_remote_attempts},
        {"remote_success", m.steal_remote_success},
        {"served", m.steals_served}}},
      {"tasks_created", m.tasks_created},
      {"tasks_executed", m.tasks_executed},
      {"leaves_executed", m.leaves_executed},
      {"leaf_distance_sum", m.leaf_distance_sum},
      {"leaf_transitions", m.leaf_transitions},
      {"slot_backoffs", m.slot_backoffs},
      {"write_through_violations", m.write_through_violations},
      {"finish_ns", m.finish_ns},
      {"device_busy_ns", m.device_busy_ns},
      {"lanes", lanes},
      {"lease_hygiene", m.lease_hygiene},
  };
}

NodeMetrics node_metrics_from_json(const json& j) {
  NodeMetrics m;
  m.node = j.at("node");
  m.loads = j.at("loads");
  m.bytes_loaded = j.at("bytes_loaded");
  m.jobs_submitted = j.at("jobs_submitted");
  m.jobs_completed = j.at("jobs_completed");
  m.device = tier_stats_from_json(j.at("device_cache"));
  m.host = tier_stats_from_json(j.at("host_cache"));
  const auto& r = j.at("remote");
  m.remote.requests = r.at("requests");
  m.remote.hits = r.at("hits");
  m.remote.failures = r.at("failures");
  m.remote.timeouts = r.at("timeouts");
  m.remote.late_replies = r.at("late_replies");
  m.remote.served = r.at("served");
  m.remote.probes = r.at("probes");
  m.remote.mediated = r.at("mediated");
  m.messages_sent = j.at("messages_sent").get<std::map<std::string, std::uint64_t>>();
  m.message_bytes = j.at("message_bytes");
  const auto& s = j.at("steals");
  m.steal_local_attempts = s.at("local_attempts");
  m.steal_local_success = s.at("local_success");
  m.steal_remote_attempts = s.at("remote_attempts");
  m.steal_remote_success = s.at("remote_success");
  m.steals_served = s.at("served");
  m.tasks_created = j.at("tasks_created");
  m.tasks_executed = j.at("tasks_executed");
  m.leaves_executed = j.at("leaves_executed");
  m.leaf_distance_sum = j.at("leaf_distance_sum");
  m.leaf_transitions = j.at("leaf_transitions");
  m.slot_backoffs = j.at("slot_backoffs");
  m.write_through_violations = j.at("write_through_violations");
  m.finish_ns = j.at("finish_ns");
  m.device_busy_ns = j.at("device_busy_ns").get<std::vector<std::int64_t>>();
  for (const auto& l : j.at("lanes")) {
    m.lanes.push_back(LaneMetrics{l.at("lane"), l.at("busy_ns"), l.at("tasks")});
  }
  m.lease_hygiene = j.at("lease_hygiene");
  return m;
}

json to_json(const ProtocolStats& p) {
  return {{"requests", p.requests},         {"hits", p.hits},
          {"failures", p.failures},         {"hits_by_hop", p.hits_by_hop},
          {"max_messages", p.max_messages}, {"total_messages", p.total_messages},
          {"bound_violations", p.bound_violations}};
}

json to_json(const RunMetrics& m) {
  json nodes = json::array();
  for (const auto& n : m.per_node) nodes.push_back(to_json(n));
  return {
      {"schema", "allpairs.metrics/1"},
      {"app", m.app},
      {"mode", to_string(m.mode)},
      {"n", m.n},
      {"pairs", m.pairs},
      {"nodes", m.nodes},
      {"comparisons_completed", m.comparisons_completed},
      {"total_loads", m.total_loads},
      {"R", m.reload_factor},
      {"makespan_ns", m.makespan_ns},
      {"makespan_s", m.makespan_s()},
      {"T_min_s", m.t_min_s},
      {"T_GPU_at_R_s", m.t_gpu_s},
      {"efficiency", m.efficiency},
      {"efficiency_r_adjusted", m.efficiency_r_adjusted},
      {"io_bytes", m.io_bytes},
      {"io_bytes_per_s", m.io_bytes_per_s},
      {"tasks_created", m.tasks_created},
      {"tasks_executed", m.tasks_executed},
      {"protocol", to_json(m.protocol)},
      {"per_node", nodes},
      {"config", m.config},
  };
}

}  // namespace allpairs
