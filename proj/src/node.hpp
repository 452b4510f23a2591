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

#ifndef ALLPAIRS_SRC_NODE_HPP
#define ALLPAIRS_SRC_NODE_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "allpairs/app.hpp"
#include "allpairs/cache.hpp"
#include "allpairs/config.hpp"
#include "allpairs/dist_cache.hpp"
#include "allpairs/metrics.hpp"
#include "allpairs/scheduler.hpp"
#include "allpairs/storage.hpp"
#include "allpairs/wire.hpp"

namespace allpairs::detail {

enum class LaneKind : std::uint8_t { Cpu, Io, Launch, Up, Down };

std::string lane_name(LaneKind kind, std::uint16_t device);

/// One pipeline stage. `work` does the actual computation on the lane;
/// `done` continues the job on the node's dispatcher.
struct StageTask {
  LaneKind lane = LaneKind::Cpu;
  std::uint16_t device = 0;
  Nanos cost{0};               // modeled duration
  std::uint64_t io_bytes = 0;  // Io lane: modeled bytes drawn from storage
  const char* label = "";
  std::int64_t i = -1;
  std::int64_t j = -1;
  std::function<void()> work;
  std::function<void()> done;
};

/// What a node needs from its execution environment. Every callback the
/// node receives runs on its dispatcher, one at a time.
class NodeServices {
 public:
  virtual ~NodeServices() = default;
  virtual Nanos now() const = 0;
  /// Wall-clock execution: storage reads are throttled for real.
  virtual bool real_time() const = 0;
  virtual void enqueue(StageTask task) = 0;
  virtual void post(std::function<void()> fn) = 0;
  virtual void after(Nanos delay, std::function<void()> fn) = 0;
  /// Never called with dst == self.
  virtual void send(NodeId dst, const Frame& frame, std::uint64_t modeled_bytes) = 0;
  virtual std::vector<LaneMetrics> lane_metrics() const = 0;
  /// The node will not act again.
  virtual void finished() = 0;
};

/// Correlates cache-protocol steps across nodes by request id.
class ProtocolObserver {
 public:
  void message(std::uint64_t rid);
  void probe(std::uint64_t rid);
  void served(std::uint64_t rid);
  void failed(std::uint64_t rid);
  ProtocolStats summarize(std::size_t hops) const;

 private:
  struct Record {
    std::size_t messages = 0;
    std::size_t probes = 0;
    std::size_t hit_hop = 0;
    bool failed = false;
  };
  mutable std::mutex mutex_;
  std::map<std::uint64_t, Record> records_;
};

struct NodeContext {
  NodeId id = 0;
  const RunConfig* config = nullptr;
  const Application* app = nullptr;
  StorageServer* storage = nullptr;
  NodeServices* services = nullptr;
  ProtocolObserver* observer = nullptr;  // optional
};

class Node {
 public:
  explicit Node(NodeContext ctx);
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  ~Node();

  void start();
  void on_frame(NodeId src, Frame frame);

  bool done() const { return done_; }
  bool stopping() const { return stopping_; }
  NodeId id() const { return id_; }
  Nanos last_progress() const { return last_progress_; }
  /// Human-readable state of every in-flight job, for deadlock reports.
  std::string dump() const;

  NodeMetrics local_metrics() const;
  /// Node 0 after completion: one entry per node, by id.
  const std::vector<NodeMetrics>& collected_stats() const { return stats_; }
  /// Node 0 after completion.
  std::vector<PairResult> take_results() { return std::move(results_); }

 private:
  enum class KeyPhase : std::uint8_t {
    NeedDevice,
    WaitingDevice,
    NeedHostToken,
    WaitingHostToken,
    NeedHost,
    WaitingHost,
    WaitingRemote,
    Loading,
    Transferring,
    Ready,
  };
  static const char* to_string(KeyPhase p);

  struct KeyState {
    ItemKey key;
    KeyPhase phase = KeyPhase::NeedDevice;
    ReadLease device;
    WriteTicket device_ticket;
    ReadLease host;
    WriteTicket host_ticket;
    bool host_token = false;
    std::uint64_t remote_rid = 0;
  };

  struct Job {
    std::uint64_t id = 0;
    std::uint64_t i = 0, j = 0;
    std::uint16_t worker = 0;
    KeyState keys[2];
    int cursor = 0;
    bool device_token = false;
    bool comparing = false;
  };

  struct Worker {
    std::uint16_t index = 0;
    WorkerDeque deque;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;  // current leaf
    std::size_t next_pair = 0;
    std::optional<Region> last_leaf;
    std::mt19937_64 rng;
    bool remote_pending = false;
    bool backoff_pending = false;
    std::size_t remote_attempts = 0;
  };

  // scheduler
  void pump(Worker& w);
  void pump_all();
  void run_task(Worker& w, const TaskNode& task);
  bool try_local_steal(Worker& w);
  void submit(Worker& w, std::uint64_t i, std::uint64_t j);
  void on_steal_request(NodeId src, const Frame& f);
  void on_steal_reply(const Frame& f);

  // job flow
  void advance(Job& job);
  bool try_device(Job& job);
  bool take_host_token(Job& job);
  bool try_host(Job& job);
  void upload_from_host(Job& job);
  void request_remote(Job& job);
  void load_local(Job& job);
  void launch_compare(Job& job);
  void complete(Job& job, PairResult result);
  void release_host_token(KeyState& k);
  void release_device_token(Job& job);
  Job* find_job(std::uint64_t id);
  std::function<void()> resume(std::uint64_t job_id, KeyPhase phase);

  // cache protocol
  void on_cache_message(CacheMessage msg);
  void route_cache(NodeId dst, CacheMessage msg);

  // completion and shutdown
  void flush_completions();
  void on_completion(const Frame& f);
  void on_shutdown();
  void on_node_stats(NodeId src, const Frame& f);
  void route(NodeId dst, Frame frame, std::uint64_t modeled_bytes = 0);
  void finish();

  double speed(const Job& job) const;
  Nanos transfer_cost() const;
  std::uint64_t next_request_id() { return (static_cast<std::uint64_t>(id_) << 48) | ++rid_counter_; }

  NodeId id_;
  const RunConfig& config_;
  const Application& app_;
  StorageServer& storage_;
  NodeServices& svc_;
  ProtocolObserver* observer_;
  std::size_t node_count_;
  const NodeConfig& node_config_;

  std::vector<std::unique_ptr<CacheTier>> devices_;
  std::unique_ptr<CacheTier> host_;
  CandidatesTable candidates_;
  std::size_t hops_;

  std::vector<std::unique_ptr<Worker>> workers_;
  std::unique_ptr<JobLimiter> limiter_;
  std::vector<std::size_t> device_tokens_;
  std::vector<std::deque<std::uint64_t>> device_token_waiters_;
  std::size_t host_tokens_;
  std::deque<std::uint64_t> host_token_waiters_;

  std::map<std::uint64_t, std::unique_ptr<Job>> jobs_;
  std::map<std::uint64_t, std::uint64_t> pending_remote_;  // rid -> job id
  std::uint64_t next_job_ = 1;
  std::uint64_t rid_counter_ = 0;

  Bytes completion_batch_;
  std::size_t batch_entries_ = 0;

  // node 0
  std::unique_ptr<PairLedger> ledger_;
  std::vector<PairResult> results_;
  std::vector<NodeMetrics> stats_;
  std::size_t stats_received_ = 0;

  bool stopping_ = false;
  bool done_ = false;
  Nanos last_progress_{0};
  NodeMetrics m_;
};

}  // namespace allpairs::detail

#endif  // ALLPAIRS_SRC_NODE_HPP
