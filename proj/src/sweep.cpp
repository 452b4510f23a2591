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

#include "allpairs/sweep.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "allpairs/app.hpp"
#include "allpairs/errors.hpp"
#include "allpairs/runtime.hpp"

namespace allpairs {

SweepAxis parse_axis(const std::string& name) {
  if (name == "cache_size") return SweepAxis::CacheSize;
  if (name == "nodes") return SweepAxis::Nodes;
  if (name == "h") return SweepAxis::Hops;
  if (name == "seed") return SweepAxis::Seed;
  throw ConfigError("unknown sweep axis '" + name + "' (cache_size, nodes, h, seed)");
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::CacheSize: return "cache_size";
    case SweepAxis::Nodes: return "nodes";
    case SweepAxis::Hops: return "h";
    case SweepAxis::Seed: return "seed";
  }
  return "?";
}

std::vector<std::string> parse_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("sweep needs at least one value");
  return out;
}

namespace {

std::uint64_t parse_uint(const std::string& v, const char* what) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-') {
    throw ConfigError(std::string(what) + ": '" + v + "' is not a non-negative integer");
  }
  return x;
}

}  // namespace

std::uint64_t cache_slots_for(const std::string& value, std::uint64_t n) {
  double x = 0;
  std::size_t used = 0;
  const bool percent = !value.empty() && value.back() == '%';
  const std::string body = percent ? value.substr(0, value.size() - 1) : value;
  try {
    x = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != body.size() || body.empty() || !(x > 0)) {
    throw ConfigError("cache_size: '" + value + "' is not a positive size");
  }
  if (percent) x /= 100.0;
  if (percent || x <= 1.0) {
    return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::llround(x * static_cast<double>(n))));
  }
  return static_cast<std::uint64_t>(x);
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
  config.scheduler.seed = seed;
  if (config.app.is_object()) config.app["seed"] = seed;
}

RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const std::string& value,
                     std::uint64_t n) {
  RunConfig c = base;
  switch (axis) {
    case SweepAxis::CacheSize: {
      const auto slots = cache_slots_for(value, n);
      for (auto& node : c.cluster.nodes) node.host_cache = Capacity{slots, std::nullopt};
      break;
    }
    case SweepAxis::Nodes: c.cluster.resize(parse_uint(value, "nodes")); break;
    case SweepAxis::Hops: c.dist_cache.hops = parse_uint(value, "h"); break;
    case SweepAxis::Seed: apply_seed(c, parse_uint(value, "seed")); break;
  }
  validate(c);
  return c;
}

SweepRow sweep_row(const std::string& axis, const std::string& value, const RunConfig& config,
                   const RunMetrics& m) {
  SweepRow r;
  r.axis = axis;
  r.value = value;
  r.dist_cache = config.dist_cache.enabled;
  r.seed = config.scheduler.seed;
  r.nodes = m.nodes;
  r.host_cache_slots = m.per_node.empty() ? 0 : m.per_node.front().host.capacity;
  r.hops = config.dist_cache.hops;
  r.n = m.n;
  r.total_loads = m.total_loads;
  r.reload_factor = m.reload_factor;
  r.makespan_s = m.makespan_s();
  r.efficiency = m.efficiency;
  r.efficiency_r_adjusted = m.efficiency_r_adjusted;
  r.io_bytes_per_s = m.io_bytes_per_s;
  for (const auto& nm : m.per_node) {
    auto add = [](TierStats& a, const TierStats& b) {
      a.hits += b.hits;
      a.misses += b.misses;
      a.waits += b.waits;
      a.evictions += b.evictions;
    };
    add(r.device, nm.device);
    add(r.host, nm.host);
    r.remote_requests += nm.remote.requests;
    r.remote_hits += nm.remote.hits;
  }
  return r;
}

std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis,
                                const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const std::uint64_t n = make_application(base.app)->item_count();
  std::vector<SweepRow> rows;
  if (axis != SweepAxis::Nodes) {
    for (const auto& v : values) {
      const RunConfig c = apply_axis(base, axis, v, n);
      rows.push_back(sweep_row(to_string(axis), v, c, run(c).metrics));
    }
    return rows;
  }
  std::map<bool, double> single;  // dist-cache setting -> one-node makespan
  for (bool dist : {true, false}) {
    RunConfig c = apply_axis(base, axis, "1", n);
    c.dist_cache.enabled = dist;
    single[dist] = run(c).metrics.makespan_s();
  }
  for (const auto& v : values) {
    for (bool dist : {true, false}) {
      RunConfig c = apply_axis(base, axis, v, n);
      c.dist_cache.enabled = dist;
      SweepRow r = sweep_row(to_string(axis), v, c, run(c).metrics);
      if (r.makespan_s > 0) r.speedup = single[dist] / r.makespan_s;
      rows.push_back(r);
    }
  }
  return rows;
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {
      "axis",          "value",          "dist_cache",      "seed",
      "nodes",         "host_cache_slots", "h",             "n",
      "total_loads",   "R",              "makespan_s",      "speedup",
      "efficiency",    "efficiency_r_adjusted", "io_bytes_per_s",
      "device_hits",   "device_misses",  "host_hits",       "host_misses",
      "remote_requests", "remote_hits"};
  return cols;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  const auto& cols = sweep_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  out.precision(10);
  for (const auto& r : rows) {
    out << r.axis << ',' << r.value << ',' << (r.dist_cache ? 1 : 0) << ',' << r.seed << ','
        << r.nodes << ',' << r.host_cache_slots << ',' << r.hops << ',' << r.n << ','
        << r.total_loads << ',' << r.reload_factor << ',' << r.makespan_s << ',';
    if (r.speedup) out << *r.speedup;
    out << ',' << r.efficiency << ',' << r.efficiency_r_adjusted << ',' << r.io_bytes_per_s << ','
        << r.device.hits << ',' << r.device.misses << ',' << r.host.hits << ',' << r.host.misses
        << ',' << r.remote_requests << ',' << r.remote_hits << '\n';
  }
}

}  // namespace allpairs
