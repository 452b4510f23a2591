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

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <queue>
#include <thread>

#include "allpairs/errors.hpp"
#include "drivers.hpp"
#include "node.hpp"

namespace allpairs::detail {

namespace {

using Clock = std::chrono::steady_clock;

/// First failure wins; everyone else is told to stop.
class AbortSignal {
 public:
  void raise(std::exception_ptr e) {
    std::lock_guard lock(mutex_);
    if (!error_) error_ = e;
    cv_.notify_all();
  }
  void node_done() {
    std::lock_guard lock(mutex_);
    ++done_;
    cv_.notify_all();
  }
  /// Blocks until `nodes` nodes are done or something failed.
  void wait(std::size_t nodes) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return error_ || done_ >= nodes; });
  }
  std::exception_ptr error() const {
    std::lock_guard lock(mutex_);
    return error_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::exception_ptr error_;
  std::size_t done_ = 0;
};

class ThreadHost final : public NodeServices {
 public:
  ThreadHost(NodeId id, const RunConfig& config, std::size_t cpu_width, std::size_t devices,
             Clock::time_point epoch, AbortSignal& abort)
      : id_(id), config_(config), epoch_(epoch), abort_(abort) {
    add_lane("cpu", cpu_width);
    add_lane("io", 1);
    for (std::size_t d = 0; d < devices; ++d) {
      const auto dev = static_cast<std::uint16_t>(d);
      add_lane(lane_name(LaneKind::Launch, dev), 1);
      add_lane(lane_name(LaneKind::Up, dev), 1);
      add_lane(lane_name(LaneKind::Down, dev), 1);
    }
  }

  ~ThreadHost() override { stop(); }

  void set_transport(Transport* t) { transport_ = t; }

  Nanos now() const override { return std::chrono::duration_cast<Nanos>(Clock::now() - epoch_); }
  bool real_time() const override { return true; }

  void enqueue(StageTask task) override {
    Lane& lane = *lanes_.at(lane_index(task));
    {
      std::lock_guard lock(lane.mutex);
      lane.queue.push_back(std::move(task));
    }
    lane.cv.notify_one();
  }

  void post(std::function<void()> fn) override {
    {
      std::lock_guard lock(mutex_);
      mailbox_.push_back(std::move(fn));
    }
    cv_.notify_one();
  }

  void after(Nanos delay, std::function<void()> fn) override {
    {
      std::lock_guard lock(mutex_);
      timers_.push(Timer{Clock::now() + delay, timer_seq_++, std::move(fn)});
    }
    cv_.notify_one();
  }

  void send(NodeId dst, const Frame& frame, std::uint64_t) override {
    transport_->send(id_, dst, frame);
  }

  std::vector<LaneMetrics> lane_metrics() const override {
    std::vector<LaneMetrics> out;
    for (const auto& l : lanes_) {
      for (std::size_t s = 0; s < l->width; ++s) {
        out.push_back({l->width > 1 ? l->name + "." + std::to_string(s) : l->name,
                       l->busy_ns[s].load(), l->tasks[s].load()});
      }
    }
    return out;
  }

  void finished() override { abort_.node_done(); }

  void launch(Node* node) {
    node_ = node;
    for (auto& l : lanes_) {
      for (std::size_t s = 0; s < l->width; ++s) {
        l->threads.emplace_back([this, lane = l.get(), s] { lane_loop(*lane, s); });
      }
    }
    post([node] { node->start(); });
    dispatcher_ = std::thread([this] { dispatch_loop(); });
  }

  void stop() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& l : lanes_) {
      {
        std::lock_guard lock(l->mutex);
        l->stop = true;
      }
      l->cv.notify_all();
    }
    if (dispatcher_.joinable()) dispatcher_.join();
    for (auto& l : lanes_) {
      for (auto& t : l->threads) {
        if (t.joinable()) t.join();
      }
      l->threads.clear();
    }
  }

  std::vector<TraceEvent> take_trace() {
    std::lock_guard lock(trace_mutex_);
    return std::move(trace_);
  }

 private:
  struct Lane {
    std::string name;
    std::size_t width = 1;
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<StageTask> queue;
    bool stop = false;
    std::vector<std::thread> threads;
    std::unique_ptr<std::atomic<std::int64_t>[]> busy_ns;
    std::unique_ptr<std::atomic<std::uint64_t>[]> tasks;
  };

  struct Timer {
    Clock::time_point at;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Timer& a, const Timer& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  void add_lane(std::string name, std::size_t width) {
    auto l = std::make_unique<Lane>();
    l->name = std::move(name);
    l->width = width;
    l->busy_ns = std::make_unique<std::atomic<std::int64_t>[]>(width);
    l->tasks = std::make_unique<std::atomic<std::uint64_t>[]>(width);
    lanes_.push_back(std::move(l));
  }

  std::size_t lane_index(const StageTask& t) const {
    switch (t.lane) {
      case LaneKind::Cpu: return 0;
      case LaneKind::Io: return 1;
      case LaneKind::Launch: return 2 + 3 * t.device;
      case LaneKind::Up: return 3 + 3 * t.device;
      case LaneKind::Down: return 4 + 3 * t.device;
    }
    return 0;
  }

  Clock::duration scaled(Nanos d) const {
    return std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double, std::nano>(static_cast<double>(d.count()) * config_.time_scale));
  }

  void lane_loop(Lane& lane, std::size_t slot) {
    for (;;) {
      StageTask task;
      {
        std::unique_lock lock(lane.mutex);
        lane.cv.wait(lock, [&] { return lane.stop || !lane.queue.empty(); });
        if (lane.stop) return;
        task = std::move(lane.queue.front());
        lane.queue.pop_front();
      }
      const auto begin = Clock::now();
      try {
        if (task.work) task.work();
      } catch (...) {
        abort_.raise(std::current_exception());
        return;
      }
      // Stand-in for device or CPU time the real workload would spend.
      const auto until = begin + scaled(task.lane == LaneKind::Io ? Nanos{0} : task.cost);
      while (Clock::now() < until) std::this_thread::yield();
      const auto end = Clock::now();
      lane.busy_ns[slot] += std::chrono::duration_cast<Nanos>(end - begin).count();
      ++lane.tasks[slot];
      if (config_.profiling) {
        std::lock_guard lock(trace_mutex_);
        trace_.push_back(TraceEvent{id_, lane.width > 1 ? lane.name + "." + std::to_string(slot) : lane.name,
                                    task.label,
                                    std::chrono::duration_cast<Nanos>(begin - epoch_).count(),
                                    std::chrono::duration_cast<Nanos>(end - epoch_).count(), task.i,
                                    task.j});
      }
      if (task.done) post(std::move(task.done));
    }
  }

  void dispatch_loop() {
    const auto stall = std::chrono::duration_cast<Clock::duration>(config_.stall_timeout);
    for (;;) {
      std::function<void()> fn;
      {
        std::unique_lock lock(mutex_);
        for (;;) {
          if (stop_) return;
          if (!mailbox_.empty()) {
            fn = std::move(mailbox_.front());
            mailbox_.pop_front();
            break;
          }
          const auto now = Clock::now();
          if (!timers_.empty() && timers_.top().at <= now) {
            fn = std::move(const_cast<Timer&>(timers_.top()).fn);
            timers_.pop();
            break;
          }
          if (now - epoch_ - node_->last_progress() > stall) {
            lock.unlock();
            abort_.raise(std::make_exception_ptr(DeadlockError(
                "node " + std::to_string(id_) + ": no job completed within the stall window\n" +
                node_->dump())));
            return;
          }
          auto wake = now + std::chrono::milliseconds(100);
          if (!timers_.empty()) wake = std::min(wake, timers_.top().at);
          cv_.wait_until(lock, wake);
        }
      }
      try {
        fn();
      } catch (...) {
        abort_.raise(std::current_exception());
        return;
      }
      if (node_->done()) return;
    }
  }

  NodeId id_;
  const RunConfig& config_;
  Clock::time_point epoch_;
  AbortSignal& abort_;
  Transport* transport_ = nullptr;
  Node* node_ = nullptr;

  std::vector<std::unique_ptr<Lane>> lanes_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> mailbox_;
  std::priority_queue<Timer, std::vector<Timer>, Later> timers_;
  std::uint64_t timer_seq_ = 0;
  bool stop_ = false;
  std::thread dispatcher_;

  std::mutex trace_mutex_;
  std::vector<TraceEvent> trace_;
};

void sort_trace(std::vector<TraceEvent>& trace) {
  std::stable_sort(trace.begin(), trace.end(), [](const auto& a, const auto& b) {
    return std::tie(a.start_ns, a.node) < std::tie(b.start_ns, b.node);
  });
}

}  // namespace

ClusterRun run_threaded(const RunConfig& config, const Application& app, StorageServer& storage) {
  const std::size_t p = config.cluster.size();
  AbortSignal abort;
  ProtocolObserver observer;
  InProcNetwork network(p);
  const auto epoch = Clock::now();
  std::vector<std::unique_ptr<ThreadHost>> hosts;
  std::vector<std::unique_ptr<Node>> nodes;
  for (std::size_t i = 0; i < p; ++i) {
    const auto& nc = config.cluster.nodes[i];
    hosts.push_back(std::make_unique<ThreadHost>(static_cast<NodeId>(i), config,
                                                 cpu_pool_width(nc, Mode::Real), nc.devices.size(),
                                                 epoch, abort));
    hosts.back()->set_transport(&network);
  }
  for (std::size_t i = 0; i < p; ++i) {
    nodes.push_back(std::make_unique<Node>(
        NodeContext{static_cast<NodeId>(i), &config, &app, &storage, hosts[i].get(), &observer}));
    Node* n = nodes.back().get();
    ThreadHost* h = hosts[i].get();
    network.attach(static_cast<NodeId>(i), [n, h](NodeId src, Frame f) {
      h->post([n, src, f = std::move(f)]() mutable { n->on_frame(src, std::move(f)); });
    });
  }
  for (std::size_t i = 0; i < p; ++i) hosts[i]->launch(nodes[i].get());
  abort.wait(p);
  for (auto& h : hosts) h->stop();
  if (auto e = abort.error()) std::rethrow_exception(e);

  ClusterRun out;
  out.stats = nodes[0]->collected_stats();
  out.results = nodes[0]->take_results();
  out.protocol = observer.summarize(config.dist_cache.hops);
  out.has_protocol = true;
  for (auto& h : hosts) {
    auto t = h->take_trace();
    out.trace.insert(out.trace.end(), t.begin(), t.end());
  }
  sort_trace(out.trace);
  // Nodes hold leases into their own tiers; tear down before the hosts.
  nodes.clear();
  return out;
}

ClusterRun run_threaded_rank(const RunConfig& config, const Application& app,
                             StorageServer& storage, NodeId rank,
                             const std::vector<PeerAddress>& peers) {
  if (peers.size() != config.cluster.size()) {
    throw ConfigError("peer list has " + std::to_string(peers.size()) + " entries but the cluster has " +
                      std::to_string(config.cluster.size()) + " nodes");
  }
  AbortSignal abort;
  const auto& nc = config.cluster.nodes.at(rank);
  const auto epoch = Clock::now();
  ThreadHost host(rank, config, cpu_pool_width(nc, Mode::Real), nc.devices.size(), epoch, abort);
  Node node(NodeContext{rank, &config, &app, &storage, &host, nullptr});
  Node* n = &node;
  ThreadHost* h = &host;
  std::unique_ptr<TcpTransport> transport;
  if (peers.size() > 1) {
    transport = std::make_unique<TcpTransport>(
        rank, peers,
        [n, h](NodeId src, Frame f) {
          h->post([n, src, f = std::move(f)]() mutable { n->on_frame(src, std::move(f)); });
        },
        [n, h, &abort](const std::string& why) {
          h->post([n, why, &abort] {
            if (!n->stopping() && !n->done()) {
              abort.raise(std::make_exception_ptr(TransportError(why)));
            }
          });
        });
    host.set_transport(transport.get());
  }
  host.launch(&node);
  abort.wait(1);
  if (transport) transport->quiesce();
  host.stop();
  if (transport) transport->close();
  if (auto e = abort.error()) std::rethrow_exception(e);

  ClusterRun out;
  if (rank == 0) {
    out.stats = node.collected_stats();
    out.results = node.take_results();
  } else {
    out.stats = {node.local_metrics()};
  }
  out.trace = host.take_trace();
  sort_trace(out.trace);
  return out;
}

}  // namespace allpairs::detail
