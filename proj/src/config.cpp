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

#include "allpairs/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "allpairs/dist_cache.hpp"
#include "allpairs/errors.hpp"

namespace allpairs {

using nlohmann::json;

const char* to_string(Mode m) { return m == Mode::Sim ? "sim" : "real"; }

std::size_t Capacity::resolve(std::uint64_t slot_size) const {
  if (slots) return static_cast<std::size_t>(*slots);
  if (bytes) return slot_size == 0 ? 0 : static_cast<std::size_t>(*bytes / slot_size);
  return 0;
}

void ClusterConfig::resize(std::size_t count) {
  if (count == 0) throw ConfigError("cluster: node count must be >= 1");
  NodeConfig tmpl = nodes.empty() ? NodeConfig{} : nodes.front();
  nodes.assign(count, tmpl);
  for (std::size_t i = 0; i < count; ++i) nodes[i].id = static_cast<NodeId>(i);
}

namespace {

// Durations are accepted in ns, us, ms or s and always written in ns.
Nanos duration_field(const json& j, const std::string& stem, Nanos fallback) {
  if (j.contains(stem + "_ns")) return Nanos{j[stem + "_ns"].get<std::int64_t>()};
  if (j.contains(stem + "_us")) return from_seconds(j[stem + "_us"].get<double>() * 1e-6);
  if (j.contains(stem + "_ms")) return from_seconds(j[stem + "_ms"].get<double>() * 1e-3);
  if (j.contains(stem + "_s")) return from_seconds(j[stem + "_s"].get<double>());
  return fallback;
}

double rate_field(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_null()) return std::numeric_limits<double>::infinity();
  return j[key].get<double>();
}

json rate_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

// Rejects keys outside `allowed`; duration stems also accept their unit suffixes.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed,
                std::initializer_list<const char*> durations = {}) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    for (const char* d : durations) {
      for (const char* unit : {"_ns", "_us", "_ms", "_s"}) ok = ok || key == std::string(d) + unit;
    }
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

Capacity capacity_from(const json& j, const std::string& stem, Capacity fallback) {
  Capacity c;
  if (j.contains(stem + "_slots")) c.slots = j[stem + "_slots"].get<std::uint64_t>();
  if (j.contains(stem + "_bytes")) c.bytes = j[stem + "_bytes"].get<std::uint64_t>();
  if (c.slots && c.bytes) throw ConfigError(stem + ": give either _slots or _bytes, not both");
  if (!c.slots && !c.bytes) return fallback;
  return c;
}

void capacity_to(json& j, const std::string& stem, const Capacity& c) {
  if (c.slots) j[stem + "_slots"] = *c.slots;
  if (c.bytes) j[stem + "_bytes"] = *c.bytes;
}

NodeConfig node_from(const json& j, const NodeConfig& fallback) {
  check_keys(j, "node", {"id", "devices", "host_cache_slots", "host_cache_bytes", "cpu_threads"});
  NodeConfig n = fallback;
  if (j.contains("devices")) {
    n.devices.clear();
    for (const auto& d : j["devices"]) {
      check_keys(d, "device", {"speed", "cache_slots", "cache_bytes"});
      DeviceConfig dev;
      dev.speed = d.value("speed", 1.0);
      dev.cache = capacity_from(d, "cache", dev.cache);
      n.devices.push_back(dev);
    }
  }
  n.host_cache = capacity_from(j, "host_cache", n.host_cache);
  n.cpu_threads = j.value<std::size_t>("cpu_threads", n.cpu_threads);
  return n;
}

json node_to(const NodeConfig& n) {
  json devices = json::array();
  for (const auto& d : n.devices) {
    json dj = {{"speed", d.speed}};
    capacity_to(dj, "cache", d.cache);
    devices.push_back(dj);
  }
  json j = {{"id", n.id}, {"devices", devices}, {"cpu_threads", n.cpu_threads}};
  capacity_to(j, "host_cache", n.host_cache);
  return j;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  try {
    check_keys(j, "config",
               {"app", "mode", "cluster", "scheduler", "dist_cache", "profiling", "trace_path",
                "metrics_path", "time_scale", "completion_batch"},
               {"stall_timeout"});
    if (j.contains("app")) c.app = j["app"];
    if (j.contains("mode")) {
      const auto m = j["mode"].get<std::string>();
      if (m == "sim") c.mode = Mode::Sim;
      else if (m == "real") c.mode = Mode::Real;
      else throw ConfigError("config: mode must be 'sim' or 'real', got '" + m + "'");
    }

    const json cl = j.value("cluster", json::object());
    check_keys(cl, "cluster", {"nodes", "node", "network", "storage", "link_bytes_per_s"});
    NodeConfig tmpl = node_from(cl.value("node", json::object()), NodeConfig{});
    if (cl.contains("nodes") && cl["nodes"].is_array()) {
      c.cluster.nodes.clear();
      for (const auto& nj : cl["nodes"]) c.cluster.nodes.push_back(node_from(nj, tmpl));
      for (std::size_t i = 0; i < c.cluster.nodes.size(); ++i) {
        c.cluster.nodes[i].id = static_cast<NodeId>(i);
      }
    } else {
      c.cluster.nodes = {tmpl};
      c.cluster.resize(cl.value<std::size_t>("nodes", 1));
    }
    const json net = cl.value("network", json::object());
    check_keys(net, "network", {"bandwidth_bytes_per_s"}, {"latency"});
    c.cluster.network.latency = duration_field(net, "latency", c.cluster.network.latency);
    c.cluster.network.bandwidth_bytes_per_s =
        rate_field(net, "bandwidth_bytes_per_s", c.cluster.network.bandwidth_bytes_per_s);
    const json st = cl.value("storage", json::object());
    check_keys(st, "storage", {"bandwidth_bytes_per_s"}, {"latency"});
    c.cluster.storage.bandwidth_bytes_per_s =
        rate_field(st, "bandwidth_bytes_per_s", c.cluster.storage.bandwidth_bytes_per_s);
    c.cluster.storage.request_latency =
        duration_field(st, "latency", c.cluster.storage.request_latency);
    c.cluster.link_bytes_per_s = rate_field(cl, "link_bytes_per_s", c.cluster.link_bytes_per_s);

    const json sc = j.value("scheduler", json::object());
    check_keys(sc, "scheduler",
               {"leaf_block", "job_limit", "steal_retry_local", "steal_retry_remote", "seed"},
               {"steal_backoff"});
    c.scheduler.leaf_block = sc.value("leaf_block", c.scheduler.leaf_block);
    c.scheduler.job_limit = sc.value("job_limit", c.scheduler.job_limit);
    c.scheduler.steal_retry_local = sc.value("steal_retry_local", c.scheduler.steal_retry_local);
    c.scheduler.steal_retry_remote = sc.value("steal_retry_remote", c.scheduler.steal_retry_remote);
    c.scheduler.steal_backoff = duration_field(sc, "steal_backoff", c.scheduler.steal_backoff);
    c.scheduler.seed = sc.value("seed", c.scheduler.seed);

    const json dc = j.value("dist_cache", json::object());
    check_keys(dc, "dist_cache", {"enabled", "hops", "history"}, {"timeout"});
    c.dist_cache.enabled = dc.value("enabled", c.dist_cache.enabled);
    c.dist_cache.hops = dc.value("hops", c.dist_cache.hops);
    c.dist_cache.history = dc.value("history", c.dist_cache.history);
    c.dist_cache.timeout = duration_field(dc, "timeout", c.dist_cache.timeout);

    c.profiling = j.value("profiling", c.profiling);
    c.trace_path = j.value("trace_path", c.trace_path);
    c.metrics_path = j.value("metrics_path", c.metrics_path);
    c.time_scale = j.value("time_scale", c.time_scale);
    c.stall_timeout = duration_field(j, "stall_timeout", c.stall_timeout);
    c.completion_batch = j.value("completion_batch", c.completion_batch);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

json to_json(const RunConfig& c) {
  json nodes = json::array();
  for (const auto& n : c.cluster.nodes) nodes.push_back(node_to(n));
  return {
      {"app", c.app},
      {"mode", to_string(c.mode)},
      {"cluster",
       {{"nodes", nodes},
        {"network",
         {{"latency_ns", c.cluster.network.latency.count()},
          {"bandwidth_bytes_per_s", rate_json(c.cluster.network.bandwidth_bytes_per_s)}}},
        {"storage",
         {{"bandwidth_bytes_per_s", rate_json(c.cluster.storage.bandwidth_bytes_per_s)},
          {"latency_ns", c.cluster.storage.request_latency.count()}}},
        {"link_bytes_per_s", rate_json(c.cluster.link_bytes_per_s)}}},
      {"scheduler",
       {{"leaf_block", c.scheduler.leaf_block},
        {"job_limit", c.scheduler.job_limit},
        {"steal_retry_local", c.scheduler.steal_retry_local},
        {"steal_retry_remote", c.scheduler.steal_retry_remote},
        {"steal_backoff_ns", c.scheduler.steal_backoff.count()},
        {"seed", c.scheduler.seed}}},
      {"dist_cache",
       {{"enabled", c.dist_cache.enabled},
        {"hops", c.dist_cache.hops},
        {"history", c.dist_cache.history},
        {"timeout_ns", c.dist_cache.timeout.count()}}},
      {"profiling", c.profiling},
      {"trace_path", c.trace_path},
      {"metrics_path", c.metrics_path},
      {"time_scale", c.time_scale},
      {"stall_timeout_ns", c.stall_timeout.count()},
      {"completion_batch", c.completion_batch},
  };
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void validate(const RunConfig& c) {
  if (c.cluster.nodes.empty()) throw ConfigError("cluster: at least one node is required");
  if (c.cluster.nodes.size() > 4096) throw ConfigError("cluster: at most 4096 nodes");
  for (const auto& n : c.cluster.nodes) {
    if (n.devices.empty()) throw ConfigError("node " + std::to_string(n.id) + ": needs >= 1 device");
    for (const auto& d : n.devices) {
      if (!(d.speed > 0)) throw ConfigError("node " + std::to_string(n.id) + ": device speed must be > 0");
    }
  }
  if (!(c.cluster.network.bandwidth_bytes_per_s > 0) || c.cluster.network.latency.count() < 0) {
    throw ConfigError("network: bandwidth must be > 0 and latency >= 0");
  }
  if (!(c.cluster.storage.bandwidth_bytes_per_s > 0)) throw ConfigError("storage: bandwidth must be > 0");
  if (!(c.cluster.link_bytes_per_s > 0)) throw ConfigError("link bandwidth must be > 0");
  if (c.scheduler.leaf_block < 1) throw ConfigError("scheduler: leaf_block must be >= 1");
  if (c.dist_cache.hops > kMaxHops) {
    throw ConfigError("dist_cache: hops must be in [0, " + std::to_string(kMaxHops) + "]");
  }
  if (!(c.time_scale >= 0)) throw ConfigError("time_scale must be >= 0");
  if (c.completion_batch < 1) throw ConfigError("completion_batch must be >= 1");
  if (c.stall_timeout.count() <= 0) throw ConfigError("stall_timeout must be > 0");
}

}  // namespace allpairs
