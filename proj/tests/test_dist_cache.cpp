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


#include <doctest.h>

#include <random>

#include "allpairs/dist_cache.hpp"
#include "support.hpp"

using namespace allpairs;

namespace {

CacheMessage request(ItemKey key, NodeId origin) {
  return CacheMessage{CacheKind::Request, 1, key, origin, {}, {}};
}

}  // namespace

TEST_CASE("point of contact is key mod p") {
  CHECK(owner_of(ItemKey{7}, 4) == 3);
  CHECK(owner_of(ItemKey{8}, 4) == 0);
  CHECK(owner_of(ItemKey{5}, 1) == 0);
}

TEST_CASE("owner with no candidates fails and records the origin") {
  CandidatesTable table(3, 4, 2);
  const auto out = handle_request_at_owner(table, request(ItemKey{7}, 0), 1);
  CHECK(out.dst == 0);
  CHECK(out.msg.kind == CacheKind::Failure);
  CHECK(table.candidates(ItemKey{7}) == std::vector<NodeId>{0});
}

TEST_CASE("owner forwards to the first candidate with the rest attached") {
  CandidatesTable table(0, 4, 2);
  const ItemKey k{8};
  table.take_and_record(k, 2, 2);  // C
  table.take_and_record(k, 1, 2);  // B
  REQUIRE(table.candidates(k) == std::vector<NodeId>{1, 2});
  const auto out = handle_request_at_owner(table, request(k, 3), 2);
  CHECK(out.dst == 1);
  CHECK(out.msg.kind == CacheKind::Forward);
  CHECK(out.msg.remaining == std::vector<NodeId>{2});
  CHECK(out.msg.origin == 3);
  CHECK(table.candidates(k) == std::vector<NodeId>{3, 1});
}

TEST_CASE("the origin may be its own candidate") {
  CandidatesTable table(0, 4, 4);
  const ItemKey k{4};
  table.take_and_record(k, 2, 1);
  const auto out = handle_request_at_owner(table, request(k, 2), 1);
  CHECK(out.dst == 2);
  CHECK(out.msg.kind == CacheKind::Forward);
  CHECK(table.candidates(k) == std::vector<NodeId>{2});
}

TEST_CASE("candidate probe outcomes") {
  const ItemKey k{5};
  CacheMessage fwd{CacheKind::Forward, 9, k, 0, {3}, {}};
  const Bytes data(4, std::byte{1});
  auto hit = handle_probe_at_candidate(fwd, [&](ItemKey) { return std::optional<Bytes>(data); });
  CHECK(hit.dst == 0);
  CHECK(hit.msg.kind == CacheKind::Data);
  CHECK(hit.msg.payload == data);
  CHECK(hit.msg.request_id == 9);

  auto none = [](ItemKey) { return std::optional<Bytes>{}; };
  auto onward = handle_probe_at_candidate(fwd, none);
  CHECK(onward.dst == 3);
  CHECK(onward.msg.kind == CacheKind::Forward);
  CHECK(onward.msg.remaining.empty());

  fwd.remaining.clear();
  auto fail = handle_probe_at_candidate(fwd, none);
  CHECK(fail.dst == 0);
  CHECK(fail.msg.kind == CacheKind::Failure);
}

TEST_CASE("one-hop hit takes h+2 messages") {
  InMemoryCacheNetwork net(4, 4);
  const ItemKey k{7};
  CHECK_FALSE(net.remote_fetch(2, k, 1).hit);  // node 2 becomes a candidate
  net.store(2, k, Bytes(3, std::byte{7}));
  const auto t = net.remote_fetch(0, k, 1);
  CHECK(t.hit);
  CHECK(t.messages == 3);
  CHECK(t.hit_hop == 1);
  CHECK(t.served_by == NodeId{2});
  CHECK(t.payload == Bytes(3, std::byte{7}));
  const std::vector<std::pair<NodeId, CacheKind>> steps = {
      {3, CacheKind::Request}, {2, CacheKind::Forward}, {0, CacheKind::Data}};
  CHECK(t.steps == steps);
}

TEST_CASE("unknown key fails in two messages") {
  InMemoryCacheNetwork net(4, 4);
  const auto t = net.remote_fetch(0, ItemKey{7}, 1);
  CHECK_FALSE(t.hit);
  CHECK(t.messages == 2);
  CHECK(t.probes == 0);
}

TEST_CASE("three missing candidates cost exactly five messages") {
  InMemoryCacheNetwork net(5, 4);
  const ItemKey k{0};
  for (NodeId n : {1, 2, 3}) net.remote_fetch(n, k, 3);
  const auto t = net.remote_fetch(4, k, 3);
  CHECK_FALSE(t.hit);
  CHECK(t.probes == 3);
  CHECK(t.messages == 5);
  CHECK(t.steps.back() == std::make_pair(NodeId{4}, CacheKind::Failure));
}

TEST_CASE("data comes from a node that published it") {
  std::mt19937_64 rng(7);
  for (std::size_t h = 0; h <= 4; ++h) {
    InMemoryCacheNetwork net(6, default_history(h));
    for (int step = 0; step < 2000; ++step) {
      const ItemKey k{rng() % 12};
      const NodeId origin = static_cast<NodeId>(rng() % 6);
      if (rng() % 3 == 0) net.evict(static_cast<NodeId>(rng() % 6), k);
      const auto t = net.remote_fetch(origin, k, h);
      CHECK(t.messages <= h + 2);
      CHECK(t.steps.size() <= h + 2);
      if (t.hit) {
        REQUIRE(t.served_by);
        CHECK(net.holds(*t.served_by, k));
        CHECK(t.payload == Bytes(1, std::byte(k.index())));
        CHECK(t.hit_hop >= 1);
        CHECK(t.hit_hop <= h);
      } else {
        net.store(origin, k, Bytes(1, std::byte(k.index())));
      }
    }
  }
}

TEST_CASE("cache messages survive the frame codec") {
  const CacheMessage m{CacheKind::Forward, 77, ItemKey{12}, 3, {1, 2}, {}};
  CHECK(cache_message_from(to_frame(m)) == m);
  const CacheMessage d{CacheKind::Data, 78, ItemKey{12}, 3, {}, Bytes(5, std::byte{9})};
  CHECK(cache_message_from(to_frame(d)) == d);
}

TEST_CASE("table rejects keys it does not own") {
  CandidatesTable table(1, 4, 2);
  CHECK_THROWS(table.take_and_record(ItemKey{4}, 0, 1));
}
