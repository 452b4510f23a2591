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

#ifndef ALLPAIRS_SRC_DRIVERS_HPP
#define ALLPAIRS_SRC_DRIVERS_HPP

#include <vector>

#include "allpairs/app.hpp"
#include "allpairs/config.hpp"
#include "allpairs/metrics.hpp"
#include "allpairs/storage.hpp"
#include "allpairs/trace.hpp"
#include "allpairs/transport.hpp"

namespace allpairs::detail {

struct ClusterRun {
  std::vector<NodeMetrics> stats;  // by node id
  std::vector<PairResult> results;
  std::vector<TraceEvent> trace;
  ProtocolStats protocol;
  bool has_protocol = false;
};

ClusterRun run_simulated(const RunConfig& config, const Application& app, StorageServer& storage);
ClusterRun run_threaded(const RunConfig& config, const Application& app, StorageServer& storage);
/// Only this rank's node lives in the process; peers are reached over TCP.
ClusterRun run_threaded_rank(const RunConfig& config, const Application& app,
                             StorageServer& storage, NodeId rank,
                             const std::vector<PeerAddress>& peers);

std::size_t cpu_pool_width(const NodeConfig& node, Mode mode);

}  // namespace allpairs::detail

#endif  // ALLPAIRS_SRC_DRIVERS_HPP
