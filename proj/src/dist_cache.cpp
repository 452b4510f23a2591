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

#include "allpairs/dist_cache.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "allpairs/errors.hpp"

namespace allpairs {

NodeId owner_of(ItemKey key, std::size_t node_count) {
  if (node_count == 0) throw std::invalid_argument("owner_of: node count must be >= 1");
  return static_cast<NodeId>(key.index() % node_count);
}

CandidatesTable::CandidatesTable(NodeId self, std::size_t node_count, std::size_t history)
    : self_(self), node_count_(node_count), history_(history) {}

std::vector<NodeId> CandidatesTable::take_and_record(ItemKey key, NodeId requester,
                                                     std::size_t hops) {
  if (owner_of(key, node_count_) != self_) {
    throw std::logic_error("candidates: node " + std::to_string(self_) +
                           " is not the point of contact for item " +
                           std::to_string(key.index()));
  }
  auto& list = table_[key];
  std::vector<NodeId> taken(list.begin(),
                            list.begin() + static_cast<std::ptrdiff_t>(std::min(hops, list.size())));
  list.erase(std::remove(list.begin(), list.end(), requester), list.end());
  list.insert(list.begin(), requester);
  if (list.size() > history_) list.resize(history_);
  return taken;
}

std::vector<NodeId> CandidatesTable::candidates(ItemKey key) const {
  auto it = table_.find(key);
  return it == table_.end() ? std::vector<NodeId>{} : it->second;
}

Frame to_frame(const CacheMessage& msg) {
  Frame f;
  switch (msg.kind) {
    case CacheKind::Request: f.kind = FrameKind::Request; break;
    case CacheKind::Forward: f.kind = FrameKind::Forward; break;
    case CacheKind::Data: f.kind = FrameKind::Data; break;
    case CacheKind::Failure: f.kind = FrameKind::Failure; break;
  }
  f.request_id = msg.request_id;
  f.key = msg.key.index();
  f.origin = msg.origin;
  f.candidates = msg.remaining;
  f.payload = msg.payload;
  return f;
}

CacheMessage cache_message_from(const Frame& frame) {
  CacheMessage m;
  switch (frame.kind) {
    case FrameKind::Request: m.kind = CacheKind::Request; break;
    case FrameKind::Forward: m.kind = CacheKind::Forward; break;
    case FrameKind::Data: m.kind = CacheKind::Data; break;
    case FrameKind::Failure: m.kind = CacheKind::Failure; break;
    default: throw FrameError(std::string("not a cache frame: ") + to_string(frame.kind));
  }
  m.request_id = frame.request_id;
  m.key = ItemKey{frame.key};
  m.origin = frame.origin;
  m.remaining = frame.candidates;
  m.payload = frame.payload;
  return m;
}

Outgoing handle_request_at_owner(CandidatesTable& table, const CacheMessage& request,
                                 std::size_t hops) {
  auto candidates = table.take_and_record(request.key, request.origin, hops);
  Outgoing out;
  out.msg.request_id = request.request_id;
  out.msg.key = request.key;
  out.msg.origin = request.origin;
  if (candidates.empty()) {
    out.dst = request.origin;
    out.msg.kind = CacheKind::Failure;
    return out;
  }
  out.dst = candidates.front();
  out.msg.kind = CacheKind::Forward;
  out.msg.remaining.assign(candidates.begin() + 1, candidates.end());
  return out;
}

Outgoing handle_probe_at_candidate(const CacheMessage& forward, const HostLookup& lookup) {
  Outgoing out;
  out.msg.request_id = forward.request_id;
  out.msg.key = forward.key;
  out.msg.origin = forward.origin;
  if (auto payload = lookup(forward.key)) {
    out.dst = forward.origin;
    out.msg.kind = CacheKind::Data;
    out.msg.payload = std::move(*payload);
    return out;
  }
  if (!forward.remaining.empty()) {
    out.dst = forward.remaining.front();
    out.msg.kind = CacheKind::Forward;
    out.msg.remaining.assign(forward.remaining.begin() + 1, forward.remaining.end());
    return out;
  }
  out.dst = forward.origin;
  out.msg.kind = CacheKind::Failure;
  return out;
}

InMemoryCacheNetwork::InMemoryCacheNetwork(std::size_t node_count, std::size_t history)
    : hosts_(node_count) {
  tables_.reserve(node_count);
  for (std::size_t i = 0; i < node_count; ++i) {
    tables_.emplace_back(static_cast<NodeId>(i), node_count, history);
  }
}

void InMemoryCacheNetwork::store(NodeId node, ItemKey key, Bytes payload) {
  hosts_.at(node)[key] = std::move(payload);
}

void InMemoryCacheNetwork::evict(NodeId node, ItemKey key) { hosts_.at(node).erase(key); }

bool InMemoryCacheNetwork::holds(NodeId node, ItemKey key) const {
  return hosts_.at(node).count(key) != 0;
}

FetchTrace InMemoryCacheNetwork::remote_fetch(NodeId origin, ItemKey key, std::size_t hops) {
  FetchTrace trace;
  CacheMessage msg{CacheKind::Request, next_request_++, key, origin, {}, {}};
  NodeId at = origin;
  NodeId dst = owner_of(key, tables_.size());
  // Bounded by construction; the guard catches routing bugs.
  for (std::size_t step = 0; step < hops + 3; ++step) {
    if (dst != at) ++trace.messages;
    trace.steps.emplace_back(dst, msg.kind);
    at = dst;
    switch (msg.kind) {
      case CacheKind::Request: {
        auto out = handle_request_at_owner(tables_[at], msg, hops);
        dst = out.dst;
        msg = std::move(out.msg);
        break;
      }
      case CacheKind::Forward: {
        ++trace.probes;
        const NodeId here = at;
        auto out = handle_probe_at_candidate(msg, [&](ItemKey k) -> std::optional<Bytes> {
          auto it = hosts_[here].find(k);
          if (it == hosts_[here].end()) return std::nullopt;
          return it->second;
        });
        if (out.msg.kind == CacheKind::Data) {
          trace.hit_hop = trace.probes;
          trace.served_by = here;
        }
        dst = out.dst;
        msg = std::move(out.msg);
        break;
      }
      case CacheKind::Data:
        trace.hit = true;
        trace.payload = std::move(msg.payload);
        return trace;
      case CacheKind::Failure:
        return trace;
    }
  }
  throw std::logic_error("remote_fetch: request did not terminate");
}

}  // namespace allpairs
