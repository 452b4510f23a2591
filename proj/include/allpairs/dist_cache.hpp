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

#ifndef ALLPAIRS_DIST_CACHE_HPP
#define ALLPAIRS_DIST_CACHE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "allpairs/types.hpp"
#include "allpairs/wire.hpp"

namespace allpairs {

// Point-of-contact lookup across host caches.
//
// Item i is mediated by node i mod p. That node stores no data for i, only
// the list of nodes that most recently asked for it. A request travels
//
//   origin -> owner -> C1 -> C2 -> ... -> Ch
//
// and the first candidate holding the item in its host cache replies with
// the data directly to the origin; the last one replies with a failure.
// At most h + 2 messages are exchanged per request. Messages a node would
// send to itself are handled locally and are not counted.

inline constexpr std::size_t kDefaultHops = 1;
inline constexpr std::size_t kMaxHops = 8;

inline std::size_t default_history(std::size_t hops) { return std::max<std::size_t>(hops, 4); }

NodeId owner_of(ItemKey key, std::size_t node_count);

/// Per owned key, the most recent requesters, newest first.
class CandidatesTable {
 public:
  CandidatesTable(NodeId self, std::size_t node_count, std::size_t history);

  /// Returns the first `hops` candidates as they were before this request,
  /// then records `requester` at the front (deduplicated, trimmed).
  std::vector<NodeId> take_and_record(ItemKey key, NodeId requester, std::size_t hops);

  std::vector<NodeId> candidates(ItemKey key) const;
  std::size_t history() const { return history_; }
  std::size_t keys_tracked() const { return table_.size(); }

 private:
  NodeId self_;
  std::size_t node_count_;
  std::size_t history_;
  std::unordered_map<ItemKey, std::vector<NodeId>> table_;
};

enum class CacheKind : std::uint8_t { Request, Forward, Data, Failure };

struct CacheMessage {
  CacheKind kind = CacheKind::Request;
  std::uint64_t request_id = 0;
  ItemKey key;
  NodeId origin = 0;
  std::vector<NodeId> remaining;  // Forward only
  Bytes payload;                  // Data only

  friend bool operator==(const CacheMessage&, const CacheMessage&) = default;
};

Frame to_frame(const CacheMessage& msg);
CacheMessage cache_message_from(const Frame& frame);

struct Outgoing {
  NodeId dst = 0;
  CacheMessage msg;
};

/// Owner step: record the requester and route to the first candidate, or
/// fail straight back to the origin when there is none.
Outgoing handle_request_at_owner(CandidatesTable& table, const CacheMessage& request,
                                 std::size_t hops);

/// Host-cache lookup used by probes; yields the bytes of a READ slot.
using HostLookup = std::function<std::optional<Bytes>(ItemKey)>;

/// Candidate step: answer with data on a hit, otherwise pass the request on
/// or report failure once the list is exhausted.
Outgoing handle_probe_at_candidate(const CacheMessage& forward, const HostLookup& lookup);

/// Outcome of one request as seen by an observer of every protocol step.
struct FetchTrace {
  bool hit = false;
  std::size_t hit_hop = 0;   // 1-based probe index that served the data
  std::size_t probes = 0;    // candidates consulted
  std::size_t messages = 0;  // steps that crossed between distinct nodes
  std::optional<NodeId> served_by;
  Bytes payload;
  std::vector<std::pair<NodeId, CacheKind>> steps;  // receiver, message kind
};

/// All nodes of a cluster in one address space, stepping the protocol
/// synchronously. Reference execution of a remote fetch for tests and
/// tooling; the runtime drives the same handlers over its transport.
class InMemoryCacheNetwork {
 public:
  InMemoryCacheNetwork(std::size_t node_count, std::size_t history);

  /// Host-cache contents of a node (READ slots only).
  void store(NodeId node, ItemKey key, Bytes payload);
  void evict(NodeId node, ItemKey key);
  bool holds(NodeId node, ItemKey key) const;

  FetchTrace remote_fetch(NodeId origin, ItemKey key, std::size_t hops);

  const CandidatesTable& table(NodeId node) const { return tables_.at(node); }
  std::size_t node_count() const { return tables_.size(); }

 private:
  std::vector<CandidatesTable> tables_;
  std::vector<std::map<ItemKey, Bytes>> hosts_;
  std::uint64_t next_request_ = 1;
};

}  // namespace allpairs

#endif  // ALLPAIRS_DIST_CACHE_HPP
