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
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <thread>

#include "allpairs/errors.hpp"
#include "allpairs/runtime.hpp"
#include "drivers.hpp"
#include "node.hpp"

namespace allpairs {

void SimClock::schedule(Nanos at, Action action) {
  queue_.push(Event{std::max(at, now_), seq_++, std::move(action)});
}

bool SimClock::step() {
  if (queue_.empty()) return false;
  // priority_queue::top is const; the action is moved out before pop.
  Event e = std::move(const_cast<Event&>(queue_.top()));
  queue_.pop();
  now_ = e.at;
  e.action();
  return true;
}

namespace detail {

std::size_t cpu_pool_width(const NodeConfig& node, Mode mode) {
  if (node.cpu_threads > 0) return node.cpu_threads;
  if (mode == Mode::Sim) return 16;
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

class SimCluster;

class SimHost final : public NodeServices {
 public:
  SimHost(SimCluster& cluster, NodeId id, std::size_t cpu_width, std::size_t devices);

  Nanos now() const override;
  bool real_time() const override { return false; }
  void enqueue(StageTask task) override;
  void post(std::function<void()> fn) override;
  void after(Nanos delay, std::function<void()> fn) override;
  void send(NodeId dst, const Frame& frame, std::uint64_t modeled_bytes) override;
  std::vector<LaneMetrics> lane_metrics() const override;
  void finished() override;

  std::unique_ptr<Node> node;
  std::vector<TraceEvent> trace;

 private:
  struct Lane {
    std::string name;
    std::vector<bool> busy;
    std::vector<std::int64_t> busy_ns;
    std::vector<std::uint64_t> tasks;
    std::deque<StageTask> queue;
  };

  Lane& lane_for(const StageTask& t);
  void start(Lane& lane, std::size_t slot, StageTask task);
  void finish(Lane& lane, std::size_t slot, const StageTask& task, Nanos begin);
  std::function<void()> guarded(std::function<void()> fn);

  SimCluster& cluster_;
  NodeId id_;
  std::vector<Lane> lanes_;  // cpu, io, then launch/up/down per device
};

class SimCluster {
 public:
  SimCluster(const RunConfig& config, const Application& app, StorageServer& storage)
      : config(config),
        network(config.cluster.size(), config.cluster.network),
        link(config.cluster.storage.bandwidth_bytes_per_s) {
    for (std::size_t i = 0; i < config.cluster.size(); ++i) {
      const auto& nc = config.cluster.nodes[i];
      hosts.push_back(std::make_unique<SimHost>(*this, static_cast<NodeId>(i),
                                                cpu_pool_width(nc, Mode::Sim), nc.devices.size()));
    }
    for (std::size_t i = 0; i < hosts.size(); ++i) {
      hosts[i]->node = std::make_unique<Node>(NodeContext{static_cast<NodeId>(i), &config, &app,
                                                          &storage, hosts[i].get(), &observer});
    }
  }

  void storage_read(std::uint64_t bytes, std::function<void()> done) {
    clock.schedule_after(config.cluster.storage.request_latency, [this, bytes, done] {
      if (bytes == 0 || std::isinf(config.cluster.storage.bandwidth_bytes_per_s)) {
        done();
        return;
      }
      waiting[link.add(clock.now(), static_cast<double>(bytes))] = done;
      reschedule_storage();
    });
  }

  ClusterRun run() {
    for (auto& h : hosts) {
      Node* n = h->node.get();
      clock.schedule(Nanos{0}, [n] { n->start(); });
    }
    while (finished < hosts.size()) {
      if (!clock.step()) {
        throw DeadlockError("simulation: no pending events with pairs outstanding\n" + dump());
      }
      Nanos progress{0};
      for (auto& h : hosts) progress = std::max(progress, h->node->last_progress());
      if (clock.now() - progress > config.stall_timeout) {
        throw DeadlockError("simulation: no job completed for " +
                            std::to_string(to_seconds(config.stall_timeout)) + " s\n" + dump());
      }
    }
    ClusterRun out;
    Node& root = *hosts[0]->node;
    out.stats = root.collected_stats();
    out.results = root.take_results();
    out.protocol = observer.summarize(config.dist_cache.hops);
    out.has_protocol = true;
    for (auto& h : hosts) {
      out.trace.insert(out.trace.end(), h->trace.begin(), h->trace.end());
    }
    std::stable_sort(out.trace.begin(), out.trace.end(), [](const auto& a, const auto& b) {
      return std::tie(a.start_ns, a.node) < std::tie(b.start_ns, b.node);
    });
    return out;
  }

  std::string dump() const {
    std::string s;
    for (const auto& h : hosts) s += h->node->dump();
    return s;
  }

  const RunConfig& config;
  SimClock clock;
  SimNetwork network;
  ProtocolObserver observer;
  std::vector<std::unique_ptr<SimHost>> hosts;
  std::size_t finished = 0;

 private:
  void reschedule_storage() {
    const std::uint64_t version = ++storage_version_;
    auto next = link.next_completion();
    if (!next) return;
    clock.schedule(next->first, [this, version, id = next->second] {
      if (version != storage_version_) return;
      link.complete(clock.now(), id);
      auto done = std::move(waiting.at(id));
      waiting.erase(id);
      reschedule_storage();
      done();
    });
  }

  FairShareLink link;
  std::map<std::uint64_t, std::function<void()>> waiting;
  std::uint64_t storage_version_ = 0;
};

SimHost::SimHost(SimCluster& cluster, NodeId id, std::size_t cpu_width, std::size_t devices)
    : cluster_(cluster), id_(id) {
  auto make = [](std::string name, std::size_t width) {
    Lane l;
    l.name = std::move(name);
    l.busy.assign(width, false);
    l.busy_ns.assign(width, 0);
    l.tasks.assign(width, 0);
    return l;
  };
  lanes_.push_back(make("cpu", cpu_width));
  lanes_.push_back(make("io", 1));
  for (std::size_t d = 0; d < devices; ++d) {
    const auto dev = static_cast<std::uint16_t>(d);
    lanes_.push_back(make(lane_name(LaneKind::Launch, dev), 1));
    lanes_.push_back(make(lane_name(LaneKind::Up, dev), 1));
    lanes_.push_back(make(lane_name(LaneKind::Down, dev), 1));
  }
}

Nanos SimHost::now() const { return cluster_.clock.now(); }

std::function<void()> SimHost::guarded(std::function<void()> fn) {
  return [this, fn = std::move(fn)] {
    if (!node->done()) fn();
  };
}

void SimHost::post(std::function<void()> fn) { cluster_.clock.schedule(now(), guarded(std::move(fn))); }

void SimHost::after(Nanos delay, std::function<void()> fn) {
  cluster_.clock.schedule_after(delay, guarded(std::move(fn)));
}

void SimHost::send(NodeId dst, const Frame& frame, std::uint64_t modeled_bytes) {
  const Nanos at = cluster_.network.deliver_at(id_, dst, now(), modeled_bytes);
  Frame copy = decode(encode(frame));
  SimHost* target = cluster_.hosts.at(dst).get();
  const NodeId src = id_;
  cluster_.clock.schedule(at, [target, src, f = std::move(copy)]() mutable {
    if (!target->node->done()) target->node->on_frame(src, std::move(f));
  });
}

SimHost::Lane& SimHost::lane_for(const StageTask& t) {
  switch (t.lane) {
    case LaneKind::Cpu: return lanes_[0];
    case LaneKind::Io: return lanes_[1];
    case LaneKind::Launch: return lanes_.at(2 + 3 * t.device);
    case LaneKind::Up: return lanes_.at(3 + 3 * t.device);
    case LaneKind::Down: return lanes_.at(4 + 3 * t.device);
  }
  throw Error("unknown lane");
}

void SimHost::enqueue(StageTask task) {
  Lane& lane = lane_for(task);
  for (std::size_t s = 0; s < lane.busy.size(); ++s) {
    if (!lane.busy[s]) {
      start(lane, s, std::move(task));
      return;
    }
  }
  lane.queue.push_back(std::move(task));
}

void SimHost::start(Lane& lane, std::size_t slot, StageTask task) {
  lane.busy[slot] = true;
  const Nanos begin = now();
  if (task.work) task.work();
  auto shared = std::make_shared<StageTask>(std::move(task));
  auto finisher = [this, &lane, slot, shared, begin] { finish(lane, slot, *shared, begin); };
  if (shared->lane == LaneKind::Io) {
    cluster_.storage_read(shared->io_bytes, finisher);
  } else {
    cluster_.clock.schedule_after(shared->cost, finisher);
  }
}

void SimHost::finish(Lane& lane, std::size_t slot, const StageTask& task, Nanos begin) {
  const Nanos end = now();
  lane.busy_ns[slot] += (end - begin).count();
  ++lane.tasks[slot];
  if (cluster_.config.profiling) {
    std::string name = lane.busy.size() > 1 ? lane.name + "." + std::to_string(slot) : lane.name;
    trace.push_back(TraceEvent{id_, std::move(name), task.label, begin.count(), end.count(), task.i, task.j});
  }
  lane.busy[slot] = false;
  if (!lane.queue.empty()) {
    StageTask next = std::move(lane.queue.front());
    lane.queue.pop_front();
    start(lane, slot, std::move(next));
  }
  if (task.done && !node->done()) task.done();
}

std::vector<LaneMetrics> SimHost::lane_metrics() const {
  std::vector<LaneMetrics> out;
  for (const auto& l : lanes_) {
    for (std::size_t s = 0; s < l.busy.size(); ++s) {
      out.push_back({l.busy.size() > 1 ? l.name + "." + std::to_string(s) : l.name, l.busy_ns[s],
                     l.tasks[s]});
    }
  }
  return out;
}

void SimHost::finished() { ++cluster_.finished; }

}  // namespace

ClusterRun run_simulated(const RunConfig& config, const Application& app, StorageServer& storage) {
  SimCluster cluster(config, app, storage);
  return cluster.run();
}

}  // namespace detail
}  // namespace allpairs
