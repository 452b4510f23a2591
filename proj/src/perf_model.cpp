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

#include "allpairs/perf_model.hpp"

#include <algorithm>
#include <cmath>

#include "allpairs/errors.hpp"
#include "allpairs/types.hpp"

namespace allpairs::model {

namespace {

double pairs(std::uint64_t n) { return static_cast<double>(pair_count(n)); }

}  // namespace

double t_gpu(std::uint64_t n, double r, const StageCosts& c) {
  return r * static_cast<double>(n) * c.t_preprocess + pairs(n) * c.t_comparison;
}

double t_cpu(std::uint64_t n, double r, const StageCosts& c) {
  return r * static_cast<double>(n) * c.t_parse + pairs(n) * c.t_postprocess;
}

double t_io(std::uint64_t n, double r, const StageCosts& c) {
  if (std::isinf(c.io_bytes_per_s)) return 0.0;
  return r * static_cast<double>(n) * c.file_bytes / c.io_bytes_per_s;
}

double t_min(std::uint64_t n, const StageCosts& c) { return t_gpu(n, 1.0, c); }

double efficiency(double t_min_s, std::uint64_t nodes, double measured_s) {
  return (t_min_s / static_cast<double>(nodes)) / measured_s;
}

Report report(std::uint64_t n, std::uint64_t nodes, double r, const StageCosts& c,
              std::optional<double> measured_s) {
  Report out;
  out.n = n;
  out.nodes = nodes;
  out.reload_factor = r;
  out.t_gpu = t_gpu(n, r, c);
  out.t_cpu = t_cpu(n, r, c);
  out.t_io = t_io(n, r, c);
  out.t_min = t_min(n, c);
  out.t_overlapped = std::max({out.t_gpu, out.t_cpu, out.t_io}) / static_cast<double>(nodes);
  out.measured = measured_s;
  if (measured_s && *measured_s > 0) {
    out.efficiency = efficiency(out.t_min, nodes, *measured_s);
    out.efficiency_r_adjusted = efficiency(out.t_gpu, nodes, *measured_s);
  }
  return out;
}

CostsDocument costs_document_from_json(const nlohmann::json& j) {
  CostsDocument d;
  if (!j.contains("n")) throw ConfigError("costs document: 'n' is required");
  d.n = j.at("n").get<std::uint64_t>();
  d.nodes = j.value<std::uint64_t>("p", 1);
  d.reload_factor = j.value("R", 1.0);
  d.costs.t_parse = j.value("t_parse_ms", 0.0) * 1e-3;
  d.costs.t_preprocess = j.value("t_preprocess_ms", 0.0) * 1e-3;
  d.costs.t_comparison = j.value("t_comparison_ms", 0.0) * 1e-3;
  d.costs.t_postprocess = j.value("t_postprocess_ms", 0.0) * 1e-3;
  d.costs.file_bytes = j.value("file_bytes", 0.0);
  if (j.contains("io_bandwidth_bytes_per_s")) {
    d.costs.io_bytes_per_s = j["io_bandwidth_bytes_per_s"].get<double>();
  }
  if (j.contains("measured_s")) d.measured_s = j["measured_s"].get<double>();
  if (d.n < 2) throw ConfigError("costs document: n must be >= 2");
  if (d.nodes < 1) throw ConfigError("costs document: p must be >= 1");
  if (d.reload_factor < 1.0) throw ConfigError("costs document: R must be >= 1");
  const StageCosts& c = d.costs;
  if (c.t_parse < 0 || c.t_preprocess < 0 || c.t_comparison < 0 || c.t_postprocess < 0 ||
      c.file_bytes < 0 || c.io_bytes_per_s <= 0) {
    throw ConfigError("costs document: costs must be non-negative, bandwidth positive");
  }
  return d;
}

nlohmann::json to_json(const Report& r) {
  nlohmann::json j = {
      {"n", r.n},         {"p", r.nodes},       {"R", r.reload_factor},
      {"T_GPU_s", r.t_gpu}, {"T_CPU_s", r.t_cpu}, {"T_IO_s", r.t_io},
      {"T_min_s", r.t_min}, {"T_overlapped_s", r.t_overlapped},
  };
  if (r.measured) j["measured_s"] = *r.measured;
  if (r.efficiency) j["efficiency"] = *r.efficiency;
  if (r.efficiency_r_adjusted) j["efficiency_r_adjusted"] = *r.efficiency_r_adjusted;
  return j;
}

}  // namespace allpairs::model
