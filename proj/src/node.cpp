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

#include "node.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "allpairs/errors.hpp"
#include "allpairs/random.hpp"

namespace allpairs::detail {

namespace {

constexpr Nanos kSlotBackoff{100'000};
constexpr std::size_t kCompletionEntryBytes = 8 + 8 + 8 + 1;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Bytes encode_task(const TaskNode& t) {
  Bytes out;
  ByteWriter w(out);
  w.u64(t.region.r0);
  w.u64(t.region.r1);
  w.u64(t.region.c0);
  w.u64(t.region.c1);
  w.u16(t.level);
  return out;
}

TaskNode decode_task(ByteView b) {
  ByteReader r(b);
  TaskNode t;
  t.region.r0 = r.u64();
  t.region.r1 = r.u64();
  t.region.c0 = r.u64();
  t.region.c1 = r.u64();
  t.level = r.u16();
  return t;
}

void add(TierStats& into, const TierStats& s) {
  into.hits += s.hits;
  into.misses += s.misses;
  into.waits += s.waits;
  into.evictions += s.evictions;
  into.aborts += s.aborts;
  into.no_slot += s.no_slot;
  into.occupancy += s.occupancy;
  into.capacity += s.capacity;
}

bool clean(const CacheTier& tier) {
  for (const auto& s : tier.slots()) {
    if (s.readers != 0 || s.state == SlotState::Write) return false;
  }
  return true;
}

}  // namespace

std::string lane_name(LaneKind kind, std::uint16_t device) {
  switch (kind) {
    case LaneKind::Cpu: return "cpu";
    case LaneKind::Io: return "io";
    case LaneKind::Launch: return "device" + std::to_string(device) + ".launch";
    case LaneKind::Up: return "device" + std::to_string(device) + ".up";
    case LaneKind::Down: return "device" + std::to_string(device) + ".down";
  }
  return "?";
}

void ProtocolObserver::message(std::uint64_t rid) {
  std::lock_guard lock(mutex_);
  ++records_[rid].messages;
}

void ProtocolObserver::probe(std::uint64_t rid) {
  std::lock_guard lock(mutex_);
  ++records_[rid].probes;
}

void ProtocolObserver::served(std::uint64_t rid) {
  std::lock_guard lock(mutex_);
  auto& r = records_[rid];
  r.hit_hop = r.probes;
}

void ProtocolObserver::failed(std::uint64_t rid) {
  std::lock_guard lock(mutex_);
  records_[rid].failed = true;
}

ProtocolStats ProtocolObserver::summarize(std::size_t hops) const {
  std::lock_guard lock(mutex_);
  ProtocolStats s;
  s.hits_by_hop.assign(std::max<std::size_t>(hops, 1), 0);
  for (const auto& [rid, r] : records_) {
    ++s.requests;
    s.total_messages += r.messages;
    s.max_messages = std::max<std::uint64_t>(s.max_messages, r.messages);
    if (r.messages > hops + 2) ++s.bound_violations;
    if (r.hit_hop > 0) {
      ++s.hits;
      if (r.hit_hop > s.hits_by_hop.size()) s.hits_by_hop.resize(r.hit_hop, 0);
      ++s.hits_by_hop[r.hit_hop - 1];
    } else {
      ++s.failures;
    }
  }
  return s;
}

const char* Node::to_string(KeyPhase p) {
  switch (p) {
    case KeyPhase::NeedDevice: return "NeedDevice";
    case KeyPhase::WaitingDevice: return "WaitingDevice";
    case KeyPhase::NeedHostToken: return "NeedHostToken";
    case KeyPhase::WaitingHostToken: return "WaitingHostToken";
    case KeyPhase::NeedHost: return "NeedHost";
    case KeyPhase::WaitingHost: return "WaitingHost";
    case KeyPhase::WaitingRemote: return "WaitingRemote";
    case KeyPhase::Loading: return "Loading";
    case KeyPhase::Transferring: return "Transferring";
    case KeyPhase::Ready: return "Ready";
  }
  return "?";
}

Node::Node(NodeContext ctx)
    : id_(ctx.id),
      config_(*ctx.config),
      app_(*ctx.app),
      storage_(*ctx.storage),
      svc_(*ctx.services),
      observer_(ctx.observer),
      node_count_(ctx.config->cluster.size()),
      node_config_(ctx.config->cluster.nodes.at(ctx.id)),
      candidates_(ctx.id, node_count_,
                  ctx.config->dist_cache.history ? ctx.config->dist_cache.history
                                                 : default_history(ctx.config->dist_cache.hops)),
      hops_(ctx.config->dist_cache.hops) {
  const std::uint64_t slot = app_.slot_size();
  std::size_t device_slots_total = 0;
  for (std::size_t d = 0; d < node_config_.devices.size(); ++d) {
    const std::size_t slots = node_config_.devices[d].cache.resolve(slot);
    if (slots < 2) {
      throw ConfigError("node " + std::to_string(id_) + " device " + std::to_string(d) +
                        ": device cache must hold at least 2 slots");
    }
    devices_.push_back(std::make_unique<CacheTier>(TierLevel::on_device(static_cast<std::uint16_t>(d)),
                                                   slots, slot));
    device_tokens_.push_back(slots / 2);
    device_slots_total += slots;
  }
  device_token_waiters_.resize(devices_.size());
  const std::size_t host_slots = node_config_.host_cache.resolve(slot);
  if (host_slots < 2) {
    throw ConfigError("node " + std::to_string(id_) + ": host cache must hold at least 2 slots");
  }
  host_ = std::make_unique<CacheTier>(TierLevel::host(), host_slots, slot);
  host_tokens_ = host_slots;

  const std::size_t limit =
      config_.scheduler.job_limit ? config_.scheduler.job_limit : 4 * device_slots_total;
  limiter_ = std::make_unique<JobLimiter>(limit);

  for (std::size_t d = 0; d < devices_.size(); ++d) {
    auto w = std::make_unique<Worker>();
    w->index = static_cast<std::uint16_t>(d);
    w->rng.seed(mix_hash(config_.scheduler.seed, (static_cast<std::uint64_t>(id_) << 16) | d));
    workers_.push_back(std::move(w));
  }
  m_.node = id_;
  m_.device_busy_ns.assign(devices_.size(), 0);
  if (id_ == 0) {
    ledger_ = std::make_unique<PairLedger>(app_.item_count());
    stats_.resize(node_count_);
  }
}

Node::~Node() {
  // Leases and tickets point into the tiers; drop them first.
  jobs_.clear();
}

double Node::speed(const Job& job) const { return node_config_.devices[job.worker].speed; }

Nanos Node::transfer_cost() const {
  const double bw = config_.cluster.link_bytes_per_s;
  if (std::isinf(bw)) return Nanos{0};
  return from_seconds(static_cast<double>(app_.slot_size()) / bw);
}

void Node::start() {
  last_progress_ = svc_.now();
  if (id_ == 0) {
    workers_[0]->deque.push(root_task(app_.item_count()));
    ++m_.tasks_created;
  }
  pump_all();
  if (id_ == 0 && ledger_->complete()) on_completion(Frame{FrameKind::Completion, 0, 0, id_, {}, {}});
}

// ---------------------------------------------------------------- scheduler

void Node::pump_all() {
  for (auto& w : workers_) pump(*w);
}

void Node::pump(Worker& w) {
  if (stopping_) return;
  for (;;) {
    while (w.next_pair < w.pairs.size()) {
      if (!limiter_->try_acquire()) return;
      const auto [i, j] = w.pairs[w.next_pair++];
      submit(w, i, j);
      if (stopping_) return;
    }
    if (auto task = w.deque.pop_deepest()) {
      run_task(w, *task);
      continue;
    }
    if (w.remote_pending || w.backoff_pending || limiter_->full()) return;
    if (try_local_steal(w)) continue;
    break;
  }
  if (node_count_ > 1 && w.remote_attempts < config_.scheduler.steal_retry_remote) {
    std::uniform_int_distribution<std::size_t> pick(0, node_count_ - 2);
    std::size_t victim = pick(w.rng);
    if (victim >= id_) ++victim;
    ++w.remote_attempts;
    ++m_.steal_remote_attempts;
    w.remote_pending = true;
    route(static_cast<NodeId>(victim),
          Frame{FrameKind::StealRequest, next_request_id(), w.index, id_, {}, {}});
    return;
  }
  w.backoff_pending = true;
  Worker* wp = &w;
  svc_.after(config_.scheduler.steal_backoff, [this, wp] {
    wp->backoff_pending = false;
    wp->remote_attempts = 0;
    pump(*wp);
  });
}

bool Node::try_local_steal(Worker& w) {
  if (workers_.size() < 2) return false;
  std::uniform_int_distribution<std::size_t> pick(0, workers_.size() - 2);
  for (std::size_t a = 0; a < config_.scheduler.steal_retry_local; ++a) {
    std::size_t victim = pick(w.rng);
    if (victim >= w.index) ++victim;
    ++m_.steal_local_attempts;
    if (auto t = workers_[victim]->deque.steal_highest()) {
      ++m_.steal_local_success;
      w.deque.push(*t);
      return true;
    }
  }
  return false;
}

void Node::run_task(Worker& w, const TaskNode& task) {
  ++m_.tasks_executed;
  if (task.region.pair_count() == 0) return;
  if (!task.region.is_leaf(config_.scheduler.leaf_block)) {
    auto children = split(task);
    m_.tasks_created += children.size();
    for (auto it = children.rbegin(); it != children.rend(); ++it) w.deque.push(*it);
    return;
  }
  ++m_.leaves_executed;
  if (w.last_leaf) {
    const auto dist = [](std::uint64_t a, std::uint64_t b) {
      return static_cast<double>(a > b ? a - b : b - a);
    };
    m_.leaf_distance_sum += dist(task.region.r0, w.last_leaf->r0) + dist(task.region.c0, w.last_leaf->c0);
    ++m_.leaf_transitions;
  }
  w.last_leaf = task.region;
  w.pairs.clear();
  w.next_pair = 0;
  task.region.for_each_pair([&](std::uint64_t i, std::uint64_t j) { w.pairs.emplace_back(i, j); });
}

void Node::on_steal_request(NodeId src, const Frame& f) {
  Frame reply{FrameKind::StealReply, f.request_id, f.key, id_, {}, {}};
  if (!stopping_) {
    Worker* best = nullptr;
    std::uint16_t best_level = 0;
    for (auto& w : workers_) {
      if (auto level = w->deque.top_level(); level && (!best || *level < best_level)) {
        best = w.get();
        best_level = *level;
      }
    }
    if (best) {
      if (auto t = best->deque.steal_highest()) {
        reply.payload = encode_task(*t);
        ++m_.steals_served;
      }
    }
  }
  route(src, std::move(reply));
}

void Node::on_steal_reply(const Frame& f) {
  if (f.key >= workers_.size()) throw FrameError("steal reply for unknown worker");
  Worker& w = *workers_[f.key];
  w.remote_pending = false;
  if (!f.payload.empty()) {
    w.deque.push(decode_task(f.payload));
    ++m_.steal_remote_success;
    w.remote_attempts = 0;
  }
  pump(w);
}

// ---------------------------------------------------------------- job flow

void Node::submit(Worker& w, std::uint64_t i, std::uint64_t j) {
  auto job = std::make_unique<Job>();
  job->id = next_job_++;
  job->i = i;
  job->j = j;
  job->worker = w.index;
  job->keys[0].key = ItemKey{i};
  job->keys[1].key = ItemKey{j};
  Job& ref = *job;
  jobs_.emplace(ref.id, std::move(job));
  ++m_.jobs_submitted;
  if (device_tokens_[w.index] > 0) {
    --device_tokens_[w.index];
    ref.device_token = true;
    advance(ref);
  } else {
    device_token_waiters_[w.index].push_back(ref.id);
  }
}

Node::Job* Node::find_job(std::uint64_t id) {
  auto it = jobs_.find(id);
  return it == jobs_.end() ? nullptr : it->second.get();
}

std::function<void()> Node::resume(std::uint64_t job_id, KeyPhase phase) {
  return [this, job_id, phase] {
    svc_.post([this, job_id, phase] {
      if (Job* job = find_job(job_id)) {
        job->keys[job->cursor].phase = phase;
        advance(*job);
      }
    });
  };
}

void Node::advance(Job& job) {
  while (job.cursor < 2) {
    KeyState& k = job.keys[job.cursor];
    switch (k.phase) {
      case KeyPhase::NeedDevice:
        if (!try_device(job)) return;
        break;
      case KeyPhase::NeedHostToken:
        if (!take_host_token(job)) return;
        break;
      case KeyPhase::NeedHost:
        if (!try_host(job)) return;
        break;
      case KeyPhase::Ready:
        ++job.cursor;
        break;
      default:
        return;
    }
  }
  if (!job.comparing) launch_compare(job);
}

bool Node::try_device(Job& job) {
  KeyState& k = job.keys[job.cursor];
  CacheTier& tier = *devices_[job.worker];
  auto result = tier.acquire(k.key, resume(job.id, KeyPhase::NeedDevice));
  return std::visit(
      overloaded{
          [&](Hit& h) {
            k.device = std::move(h.lease);
            k.phase = KeyPhase::Ready;
            return true;
          },
          [&](MustWait&) {
            k.phase = KeyPhase::WaitingDevice;
            return false;
          },
          [&](Miss& m) {
            k.device_ticket = std::move(m.ticket);
            k.phase = KeyPhase::NeedHostToken;
            return true;
          },
          [&](NoEvictableSlot&) {
            ++m_.slot_backoffs;
            k.phase = KeyPhase::WaitingDevice;
            svc_.after(kSlotBackoff, [fn = resume(job.id, KeyPhase::NeedDevice)] { fn(); });
            return false;
          },
      },
      result);
}

bool Node::take_host_token(Job& job) {
  KeyState& k = job.keys[job.cursor];
  if (host_tokens_ == 0) {
    k.phase = KeyPhase::WaitingHostToken;
    host_token_waiters_.push_back(job.id);
    return false;
  }
  --host_tokens_;
  k.host_token = true;
  k.phase = KeyPhase::NeedHost;
  return true;
}

void Node::release_host_token(KeyState& k) {
  if (!k.host_token) return;
  k.host_token = false;
  while (!host_token_waiters_.empty()) {
    const auto id = host_token_waiters_.front();
    host_token_waiters_.pop_front();
    if (Job* waiter = find_job(id)) {
      KeyState& wk = waiter->keys[waiter->cursor];
      wk.host_token = true;
      wk.phase = KeyPhase::NeedHost;
      svc_.post([this, id] {
        if (Job* j = find_job(id)) advance(*j);
      });
      return;
    }
  }
  ++host_tokens_;
}

void Node::release_device_token(Job& job) {
  if (!job.device_token) return;
  job.device_token = false;
  auto& waiters = device_token_waiters_[job.worker];
  while (!waiters.empty()) {
    const auto id = waiters.front();
    waiters.pop_front();
    if (Job* waiter = find_job(id)) {
      waiter->device_token = true;
      svc_.post([this, id] {
        if (Job* j = find_job(id)) advance(*j);
      });
      return;
    }
  }
  ++device_tokens_[job.worker];
}

bool Node::try_host(Job& job) {
  KeyState& k = job.keys[job.cursor];
  auto result = host_->acquire(k.key, resume(job.id, KeyPhase::NeedHost));
  return std::visit(
      overloaded{
          [&](Hit& h) {
            k.host = std::move(h.lease);
            upload_from_host(job);
            return false;
          },
          [&](MustWait&) {
            k.phase = KeyPhase::WaitingHost;
            return false;
          },
          [&](Miss& m) {
            k.host_ticket = std::move(m.ticket);
            if (config_.dist_cache.enabled && node_count_ > 1) {
              request_remote(job);
            } else {
              load_local(job);
            }
            return false;
          },
          [&](NoEvictableSlot&) {
            ++m_.slot_backoffs;
            k.phase = KeyPhase::WaitingHost;
            svc_.after(kSlotBackoff, [fn = resume(job.id, KeyPhase::NeedHost)] { fn(); });
            return false;
          },
      },
      result);
}

void Node::upload_from_host(Job& job) {
  KeyState& k = job.keys[job.cursor];
  k.phase = KeyPhase::Transferring;
  auto buffer = std::make_shared<Bytes>();
  const ByteView source = k.host.data();
  const std::uint64_t id = job.id;
  const int cursor = job.cursor;
  StageTask t;
  t.lane = LaneKind::Up;
  t.device = job.worker;
  t.cost = transfer_cost();
  t.label = "up";
  t.i = static_cast<std::int64_t>(k.key.index());
  t.work = [buffer, source] { buffer->assign(source.begin(), source.end()); };
  t.done = [this, id, cursor, buffer] {
    Job* j = find_job(id);
    if (!j) return;
    KeyState& ks = j->keys[cursor];
    ks.device = devices_[j->worker]->publish_and_pin(std::move(ks.device_ticket), *buffer);
    ks.host.release();
    release_host_token(ks);
    ks.phase = KeyPhase::Ready;
    advance(*j);
  };
  svc_.enqueue(std::move(t));
}

void Node::request_remote(Job& job) {
  KeyState& k = job.keys[job.cursor];
  k.phase = KeyPhase::WaitingRemote;
  k.remote_rid = next_request_id();
  pending_remote_[k.remote_rid] = job.id;
  ++m_.remote.requests;
  const std::uint64_t rid = k.remote_rid;
  svc_.after(config_.dist_cache.timeout, [this, rid] {
    auto it = pending_remote_.find(rid);
    if (it == pending_remote_.end()) return;
    const auto job_id = it->second;
    pending_remote_.erase(it);
    ++m_.remote.timeouts;
    if (Job* j = find_job(job_id)) load_local(*j);
  });
  route_cache(owner_of(k.key, node_count_),
              CacheMessage{CacheKind::Request, rid, k.key, id_, {}, {}});
}

void Node::load_local(Job& job) {
  KeyState& k = job.keys[job.cursor];
  k.phase = KeyPhase::Loading;
  const ItemKey key = k.key;
  const auto index = static_cast<std::int64_t>(key.index());
  const std::uint64_t id = job.id;
  const int cursor = job.cursor;
  const std::uint16_t dev = job.worker;
  const double spd = speed(job);
  const std::string path = app_.path_for_key(key);
  const std::uint64_t modeled = storage_.modeled_size(path);
  auto raw = std::make_shared<ItemData>();
  auto parsed = std::make_shared<ItemData>();
  auto pre = std::make_shared<ItemData>();
  const bool throttled = svc_.real_time();

  auto publish = [this, id, cursor, pre] {
    Job* j = find_job(id);
    if (!j) return;
    KeyState& ks = j->keys[cursor];
    host_->publish(std::move(ks.host_ticket), pre->payload);
    auto held = host_->inspect(ks.key);
    if (!held || held->state != SlotState::Read) ++m_.write_through_violations;
    ks.device = devices_[j->worker]->publish_and_pin(std::move(ks.device_ticket), pre->payload);
    release_host_token(ks);
    ks.phase = KeyPhase::Ready;
    advance(*j);
  };

  auto down = [this, dev, index, publish] {
    StageTask t;
    t.lane = LaneKind::Down;
    t.device = dev;
    t.cost = transfer_cost();
    t.label = "down";
    t.i = index;
    t.done = publish;
    svc_.enqueue(std::move(t));
  };

  auto preprocess = [this, dev, index, key, spd, parsed, pre, down] {
    StageTask t;
    t.lane = LaneKind::Launch;
    t.device = dev;
    t.cost = Nanos{static_cast<std::int64_t>(
        static_cast<double>(app_.costs().sample(CostStage::Preprocess, key.index()).count()) / spd)};
    t.label = "preprocess";
    t.i = index;
    m_.device_busy_ns[dev] += t.cost.count();
    t.work = [this, key, parsed, pre] { *pre = app_.preprocess(key, *parsed); };
    t.done = down;
    svc_.enqueue(std::move(t));
  };

  auto upload = [this, dev, index, preprocess] {
    StageTask t;
    t.lane = LaneKind::Up;
    t.device = dev;
    t.cost = transfer_cost();
    t.label = "up";
    t.i = index;
    t.done = preprocess;
    svc_.enqueue(std::move(t));
  };

  auto parse = [this, index, key, raw, parsed, upload, modeled] {
    ++m_.loads;
    m_.bytes_loaded += modeled;
    StageTask t;
    t.lane = LaneKind::Cpu;
    t.cost = app_.costs().sample(CostStage::Parse, key.index());
    t.label = "parse";
    t.i = index;
    t.work = [this, key, raw, parsed] { *parsed = app_.parse(key, *raw); };
    t.done = upload;
    svc_.enqueue(std::move(t));
  };

  StageTask t;
  t.lane = LaneKind::Io;
  t.io_bytes = modeled;
  t.label = "read";
  t.i = index;
  t.work = [this, path, raw, throttled] {
    *raw = throttled ? storage_.read(path) : storage_.fetch(path);
  };
  t.done = parse;
  svc_.enqueue(std::move(t));
}

void Node::launch_compare(Job& job) {
  job.comparing = true;
  const ByteView left = job.keys[0].device.data();
  const ByteView right = job.keys[1].device.data();
  const std::uint64_t id = job.id;
  const ItemKey a = job.keys[0].key, b = job.keys[1].key;
  auto out = std::make_shared<Bytes>();
  StageTask t;
  t.lane = LaneKind::Launch;
  t.device = job.worker;
  t.cost = Nanos{static_cast<std::int64_t>(
      static_cast<double>(app_.costs().sample(CostStage::Compare, a.index(), b.index()).count()) /
      speed(job))};
  t.label = "compare";
  t.i = static_cast<std::int64_t>(a.index());
  t.j = static_cast<std::int64_t>(b.index());
  t.work = [this, a, b, left, right, out] { *out = app_.compare(a, left, b, right); };
  m_.device_busy_ns[job.worker] += t.cost.count();
  t.done = [this, id, a, b, out] {
    Job* j = find_job(id);
    if (!j) return;
    j->keys[0].device.release();
    j->keys[1].device.release();
    release_device_token(*j);
    auto result = std::make_shared<PairResult>();
    StageTask post;
    post.lane = LaneKind::Cpu;
    post.cost = app_.costs().sample(CostStage::Postprocess, a.index(), b.index());
    post.label = "postprocess";
    post.i = static_cast<std::int64_t>(a.index());
    post.j = static_cast<std::int64_t>(b.index());
    post.work = [this, a, b, out, result] { *result = app_.postprocess(a, b, *out); };
    post.done = [this, id, result] {
      if (Job* jj = find_job(id)) complete(*jj, *result);
    };
    svc_.enqueue(std::move(post));
  };
  svc_.enqueue(std::move(t));
}

void Node::complete(Job& job, PairResult result) {
  ByteWriter w(completion_batch_);
  w.u64(job.i);
  w.u64(job.j);
  w.f64(result.value);
  w.u8(result.match ? 1 : 0);
  ++batch_entries_;
  ++m_.jobs_completed;
  m_.finish_ns = svc_.now().count();
  last_progress_ = svc_.now();
  limiter_->release();
  jobs_.erase(job.id);
  if (batch_entries_ >= config_.completion_batch || jobs_.empty()) flush_completions();
  pump_all();
}

// ---------------------------------------------------------------- cache protocol

void Node::route_cache(NodeId dst, CacheMessage msg) {
  Frame f = to_frame(msg);
  const std::uint64_t modeled =
      msg.kind == CacheKind::Data ? encoded_size(f) - f.payload.size() + app_.slot_size() : 0;
  if (dst != id_ && observer_) observer_->message(msg.request_id);
  route(dst, std::move(f), modeled);
}

void Node::on_cache_message(CacheMessage msg) {
  switch (msg.kind) {
    case CacheKind::Request: {
      ++m_.remote.mediated;
      auto out = handle_request_at_owner(candidates_, msg, hops_);
      if (out.msg.kind == CacheKind::Failure && observer_) observer_->failed(msg.request_id);
      route_cache(out.dst, std::move(out.msg));
      break;
    }
    case CacheKind::Forward: {
      ++m_.remote.probes;
      if (observer_) observer_->probe(msg.request_id);
      auto out = handle_probe_at_candidate(msg, [this](ItemKey k) { return host_->peek(k); });
      if (out.msg.kind == CacheKind::Data) {
        ++m_.remote.served;
        if (observer_) observer_->served(msg.request_id);
      } else if (out.msg.kind == CacheKind::Failure && observer_) {
        observer_->failed(msg.request_id);
      }
      route_cache(out.dst, std::move(out.msg));
      break;
    }
    case CacheKind::Data:
    case CacheKind::Failure: {
      auto it = pending_remote_.find(msg.request_id);
      if (it == pending_remote_.end()) {
        ++m_.remote.late_replies;
        return;
      }
      const auto job_id = it->second;
      pending_remote_.erase(it);
      Job* job = find_job(job_id);
      if (!job) return;
      KeyState& k = job->keys[job->cursor];
      if (msg.kind == CacheKind::Data) {
        ++m_.remote.hits;
        k.host = host_->publish_and_pin(std::move(k.host_ticket), msg.payload);
        upload_from_host(*job);
      } else {
        ++m_.remote.failures;
        load_local(*job);
      }
      break;
    }
  }
}

// ---------------------------------------------------------------- completion and shutdown

void Node::route(NodeId dst, Frame frame, std::uint64_t modeled_bytes) {
  if (dst == id_) {
    svc_.post([this, f = std::move(frame)]() mutable { on_frame(id_, std::move(f)); });
    return;
  }
  const std::uint64_t bytes = modeled_bytes ? modeled_bytes : encoded_size(frame);
  ++m_.messages_sent[allpairs::to_string(frame.kind)];
  m_.message_bytes += bytes;
  svc_.send(dst, frame, bytes);
}

void Node::flush_completions() {
  if (batch_entries_ == 0) return;
  Frame f{FrameKind::Completion, 0, batch_entries_, id_, {}, std::move(completion_batch_)};
  completion_batch_.clear();
  batch_entries_ = 0;
  route(0, std::move(f));
}

void Node::on_completion(const Frame& f) {
  if (id_ != 0) throw FrameError("completion report sent to node " + std::to_string(id_));
  if (f.payload.size() != f.key * kCompletionEntryBytes) throw FrameError("completion batch size mismatch");
  ByteReader r(f.payload);
  for (std::uint64_t e = 0; e < f.key; ++e) {
    PairResult res;
    const auto i = r.u64();
    const auto j = r.u64();
    res.left = ItemKey{i};
    res.right = ItemKey{j};
    res.value = r.f64();
    res.match = r.u8() != 0;
    if (i >= j || j >= app_.item_count()) throw LedgerError("completion for invalid pair");
    if (!ledger_->mark(i, j)) {
      throw LedgerError("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") completed twice");
    }
    results_.push_back(res);
  }
  last_progress_ = svc_.now();
  if (ledger_->complete() && !stopping_) {
    for (std::size_t n = 0; n < node_count_; ++n) {
      route(static_cast<NodeId>(n), Frame{FrameKind::Shutdown, 0, 0, id_, {}, {}});
    }
  }
}

void Node::on_shutdown() {
  if (stopping_) return;
  stopping_ = true;
  flush_completions();
  const std::string text = to_json(local_metrics()).dump();
  Frame f{FrameKind::NodeStats, 0, 0, id_, {}, {}};
  f.payload.resize(text.size());
  std::transform(text.begin(), text.end(), f.payload.begin(),
                 [](char c) { return static_cast<std::byte>(c); });
  route(0, std::move(f));
  if (id_ != 0) finish();
}

void Node::on_node_stats(NodeId src, const Frame& f) {
  if (id_ != 0) throw FrameError("node stats sent to node " + std::to_string(id_));
  const std::string text(reinterpret_cast<const char*>(f.payload.data()), f.payload.size());
  try {
    stats_.at(src) = node_metrics_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw FrameError(std::string("bad node stats: ") + e.what());
  }
  if (++stats_received_ == node_count_) finish();
}

void Node::finish() {
  done_ = true;
  svc_.finished();
}

void Node::on_frame(NodeId src, Frame frame) {
  if (done_) return;
  switch (frame.kind) {
    case FrameKind::Request:
    case FrameKind::Forward:
    case FrameKind::Data:
    case FrameKind::Failure:
      on_cache_message(cache_message_from(frame));
      break;
    case FrameKind::StealRequest: on_steal_request(src, frame); break;
    case FrameKind::StealReply: on_steal_reply(frame); break;
    case FrameKind::Completion: on_completion(frame); break;
    case FrameKind::Shutdown: on_shutdown(); break;
    case FrameKind::NodeStats: on_node_stats(src, frame); break;
  }
}

NodeMetrics Node::local_metrics() const {
  NodeMetrics m = m_;
  m.device = {};
  m.lease_hygiene = clean(*host_);
  for (const auto& d : devices_) {
    add(m.device, d->snapshot_stats());
    m.lease_hygiene = m.lease_hygiene && clean(*d);
  }
  m.host = host_->snapshot_stats();
  m.lanes = svc_.lane_metrics();
  return m;
}

std::string Node::dump() const {
  std::ostringstream out;
  out << "node " << id_ << ": " << jobs_.size() << " job(s) in flight, limiter "
      << limiter_->current() << "/" << limiter_->limit() << ", host tokens " << host_tokens_
      << ", pending remote " << pending_remote_.size() << "\n";
  for (const auto& [id, job] : jobs_) {
    out << "  job " << id << " (" << job->i << ", " << job->j << ") worker " << job->worker
        << (job->device_token ? "" : " [waiting device token]")
        << (job->comparing ? " [comparing]" : "") << ": " << job->keys[0].key.index() << "="
        << to_string(job->keys[0].phase) << " " << job->keys[1].key.index() << "="
        << to_string(job->keys[1].phase) << "\n";
  }
  return out.str();
}

}  // namespace allpairs::detail
