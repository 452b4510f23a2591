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

#ifndef ALLPAIRS_RUNTIME_HPP
#define ALLPAIRS_RUNTIME_HPP

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "allpairs/app.hpp"
#include "allpairs/config.hpp"
#include "allpairs/metrics.hpp"
#include "allpairs/trace.hpp"
#include "allpairs/transport.hpp"

namespace allpairs {

struct RunResult {
  RunMetrics metrics;
  std::vector<PairResult> results;  // sorted by (left, right)
  std::vector<TraceEvent> trace;    // empty unless profiling
};

/// Builds the application from `config.app`, populates a fresh storage
/// server and runs to completion in the configured mode with all nodes in
/// this process. Writes the trace and metrics files named in the config.
RunResult run(const RunConfig& config);
RunResult run(const RunConfig& config, const Application& app);

/// One OS process of a sockets-mode cluster. Rank 0 returns the complete
/// result; other ranks return only their own node's metrics.
RunResult run_socket_rank(const RunConfig& config, NodeId rank,
                          const std::vector<PeerAddress>& peers);

/// Every pair computed in one thread, in index order, with no caching.
std::vector<PairResult> run_sequential_reference(const Application& app);

/// Virtual clock of the discrete-event mode. Events at equal times run in
/// scheduling order.
class SimClock {
 public:
  using Action = std::function<void()>;

  void schedule(Nanos at, Action action);
  void schedule_after(Nanos delay, Action action) { schedule(now_ + delay, std::move(action)); }
  /// Runs the earliest event, advancing the clock to its time. False when
  /// nothing is pending.
  bool step();
  Nanos now() const { return now_; }
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Event {
    Nanos at;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  Nanos now_{0};
  std::uint64_t seq_ = 0;
};

}  // namespace allpairs

#endif  // ALLPAIRS_RUNTIME_HPP
