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

#ifndef ALLPAIRS_SWEEP_HPP
#define ALLPAIRS_SWEEP_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "allpairs/config.hpp"
#include "allpairs/metrics.hpp"

namespace allpairs {

enum class SweepAxis { CacheSize, Nodes, Hops, Seed };

/// "cache_size", "nodes", "h" or "seed". Throws ConfigError otherwise.
SweepAxis parse_axis(const std::string& name);
const char* to_string(SweepAxis axis);

/// Comma-separated values. Throws ConfigError when empty.
std::vector<std::string> parse_values(const std::string& list);

/// Host cache capacity from a sweep value: "25%" or a fraction <= 1 is
/// relative to n, anything larger is a slot count.
std::uint64_t cache_slots_for(const std::string& value, std::uint64_t n);

/// Applies one axis value to a copy of `base`.
RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const std::string& value,
                     std::uint64_t n);

/// Seeds the scheduler and, for synthetic apps, the payloads and costs.
void apply_seed(RunConfig& config, std::uint64_t seed);

struct SweepRow {
  std::string axis;
  std::string value;
  bool dist_cache = true;
  std::uint64_t seed = 0;
  std::uint64_t nodes = 1;
  std::uint64_t host_cache_slots = 0;
  std::uint64_t hops = 0;
  std::uint64_t n = 0;
  std::uint64_t total_loads = 0;
  double reload_factor = 0;
  double makespan_s = 0;
  std::optional<double> speedup;  // nodes axis only
  double efficiency = 0;
  double efficiency_r_adjusted = 0;
  double io_bytes_per_s = 0;
  TierStats device;
  TierStats host;
  std::uint64_t remote_requests = 0;
  std::uint64_t remote_hits = 0;
};

SweepRow sweep_row(const std::string& axis, const std::string& value, const RunConfig& config,
                   const RunMetrics& m);

/// One row per value; the nodes axis emits a pair of rows per value, with
/// the distributed cache enabled and disabled, and fills in the speedup
/// against the single-node run of the same setting.
std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis,
                                const std::vector<std::string>& values);

/// Column names of the sweep table, in order.
const std::vector<std::string>& sweep_columns();
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace allpairs

#endif  // ALLPAIRS_SWEEP_HPP
