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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "allpairs/errors.hpp"
#include "allpairs/runtime.hpp"
#include "allpairs/storage.hpp"
#include "allpairs/trace.hpp"
#include "allpairs/transport.hpp"
#include "allpairs/wire.hpp"
#include "support.hpp"

using namespace allpairs;
using namespace std::chrono_literals;

namespace {

std::uint16_t port_base() {
  return static_cast<std::uint16_t>(20000 + (::getpid() * 37) % 30000);
}

}  // namespace

TEST_CASE("frames round trip through the codec") {
  Frame f;
  f.kind = FrameKind::Forward;
  f.request_id = 0x0102030405060708ULL;
  f.key = 99;
  f.origin = 3;
  f.candidates = {1, 2, 7};
  const Bytes wire = encode(f);
  CHECK(wire.size() == encoded_size(f));
  CHECK(decode(wire) == f);
  Frame d;
  d.kind = FrameKind::Data;
  d.payload = Bytes(300, std::byte{0xab});
  CHECK(decode(encode(d)) == d);
  f.payload = d.payload;
  CHECK_THROWS_AS(encode(f), FrameError);
}

TEST_CASE("corrupted or truncated frames are rejected") {
  Frame f;
  f.kind = FrameKind::Data;
  f.payload = Bytes(16, std::byte{1});
  Bytes wire = encode(f);
  Bytes flipped = wire;
  flipped[wire.size() - 5] ^= std::byte{0x40};
  CHECK_THROWS_AS(decode(flipped), FrameError);
  CHECK_THROWS_AS(decode(ByteView(wire).first(wire.size() - 3)), FrameError);
  Bytes bad_kind = wire;
  bad_kind[4] = std::byte{0};
  CHECK_THROWS_AS(decode(bad_kind), FrameError);
}

TEST_CASE("simulated link charges latency plus size over bandwidth") {
  SimNetwork net(2, NetworkConfig{Nanos{10'000}, 1e9});
  const Nanos t0{5'000'000};
  CHECK(net.deliver_at(0, 1, t0, 1000) == t0 + Nanos{11'000});
  CHECK(net.transit(1000) == Nanos{11'000});
}

TEST_CASE("simulated channels deliver in send order") {
  SimNetwork net(2, NetworkConfig{Nanos{10'000}, 1e9});
  const Nanos big = net.deliver_at(0, 1, Nanos{0}, 1'000'000);
  const Nanos small = net.deliver_at(0, 1, Nanos{1}, 10);
  CHECK(small >= big);
  CHECK(net.deliver_at(1, 0, Nanos{1}, 10) < big);
}

TEST_CASE("in-process network delivers decoded frames") {
  InProcNetwork net(2);
  std::vector<Frame> at0, at1;
  net.attach(0, [&](NodeId src, Frame f) {
    CHECK(src == 1);
    at0.push_back(std::move(f));
  });
  net.attach(1, [&](NodeId src, Frame f) {
    CHECK(src == 0);
    at1.push_back(f);
    Frame reply;
    reply.kind = FrameKind::StealReply;
    net.send(1, 0, reply);
  });
  Frame req;
  req.kind = FrameKind::StealRequest;
  req.key = 3;
  net.send(0, 1, req);
  REQUIRE(at1.size() == 1);
  CHECK(at1[0].key == 3);
  REQUIRE(at0.size() == 1);
  CHECK(at0[0].kind == FrameKind::StealReply);
  CHECK(net.frames_sent() == 2);
}

TEST_CASE("peer lists") {
  const auto peers = parse_peers("127.0.0.1:9000,localhost:9001");
  REQUIRE(peers.size() == 2);
  CHECK(peers[1].host == "localhost");
  CHECK(peers[1].port == 9001);
  CHECK_THROWS_AS(parse_peers("host-without-port"), ConfigError);
  CHECK_THROWS_AS(parse_peers(""), ConfigError);
  CHECK_THROWS_AS(parse_peers("h:99999"), ConfigError);
}

TEST_CASE("four tcp ranks form a full mesh") {
  const std::uint16_t base = port_base();
  std::vector<PeerAddress> peers;
  for (std::uint16_t r = 0; r < 4; ++r) peers.push_back({"127.0.0.1", static_cast<std::uint16_t>(base + r)});
  std::mutex mu;
  std::condition_variable cv;
  std::set<std::pair<NodeId, NodeId>> seen;  // (src, dst)
  std::vector<std::unique_ptr<TcpTransport>> ranks(4);
  std::vector<std::thread> boot;
  for (NodeId r = 0; r < 4; ++r) {
    boot.emplace_back([&, r] {
      ranks[r] = std::make_unique<TcpTransport>(
          r, peers,
          [&, r](NodeId src, Frame f) {
            std::lock_guard lock(mu);
            CHECK(f.key == src * 10u + r);
            seen.emplace(src, r);
            cv.notify_all();
          },
          [](const std::string&) {}, 5s);
    });
  }
  for (auto& t : boot) t.join();
  for (NodeId a = 0; a < 4; ++a) {
    for (NodeId b = 0; b < 4; ++b) {
      if (a == b) continue;
      Frame f;
      f.kind = FrameKind::Completion;
      f.key = a * 10u + b;
      ranks[a]->send(a, b, f);
    }
  }
  {
    std::unique_lock lock(mu);
    CHECK(cv.wait_for(lock, 5s, [&] { return seen.size() == 12; }));
  }
  for (auto& t : ranks) t->quiesce();
  for (auto& t : ranks) t->close();
  for (auto& t : ranks) CHECK(t->failure().empty());
}

TEST_CASE("a single tcp rank needs no channels") {
  TcpTransport solo(0, {{"127.0.0.1", 1}}, [](NodeId, Frame) {}, [](const std::string&) {}, 100ms);
  CHECK(solo.size() == 1);
  solo.close();
}

TEST_CASE("unreachable peer is a connect failure") {
  const std::uint16_t free_port = static_cast<std::uint16_t>(port_base() + 100);
  const std::vector<PeerAddress> peers = {{"127.0.0.1", free_port},
                                          {"127.0.0.1", static_cast<std::uint16_t>(free_port + 1)}};
  CHECK_THROWS_AS(TcpTransport(1, peers, [](NodeId, Frame) {}, [](const std::string&) {}, 300ms),
                  ConnectFailure);
  const std::vector<PeerAddress> bogus = {{"no-such-host.invalid", 9},
                                          {"127.0.0.1", static_cast<std::uint16_t>(free_port + 2)}};
  CHECK_THROWS_AS(TcpTransport(1, bogus, [](NodeId, Frame) {}, [](const std::string&) {}, 300ms),
                  ConnectFailure);
}

TEST_CASE("storage serves stored bytes and rejects unknown paths") {
  StorageServer storage;
  storage.put("a", testing::bytes_of("hello"), 1000);
  CHECK(storage.contains("a"));
  CHECK(storage.modeled_size("a") == 1000);
  const auto data = storage.fetch("a");
  CHECK(data.stage == Stage::RawFile);
  CHECK(data.payload == testing::bytes_of("hello"));
  CHECK_THROWS_AS(storage.fetch("b"), NotFound);
  CHECK_THROWS_AS(storage.read("b"), NotFound);
}

TEST_CASE("a lone read takes size over bandwidth") {
  StorageServer storage(StorageServer::Options{400e6, Nanos{0}});
  CHECK(to_seconds(storage.uncontended_duration(38'100'000)) == doctest::Approx(0.09525));
  storage.put("blob", testing::bytes_of("x"), 38'100'000);
  const auto t0 = std::chrono::steady_clock::now();
  storage.read("blob");
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(took >= 0.09);
  CHECK(took < 0.25);
  CHECK(storage.bytes_served() == 38'100'000);
}

TEST_CASE("concurrent reads share the cap") {
  StorageServer storage(StorageServer::Options{100e6, Nanos{0}});
  storage.put("x", testing::bytes_of("x"), 5'000'000);
  storage.put("y", testing::bytes_of("y"), 5'000'000);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto a = std::async(std::launch::async, [&] {
    storage.read("x");
    return elapsed();
  });
  auto b = std::async(std::launch::async, [&] {
    storage.read("y");
    return elapsed();
  });
  const double single = 0.05;
  CHECK(std::max(a.get(), b.get()) >= 2 * single * 0.95);
}

TEST_CASE("fair share link splits bandwidth between transfers") {
  FairShareLink link(1e9);
  const auto a = link.add(Nanos{0}, 1e6);
  const auto b = link.add(Nanos{0}, 1e6);
  auto next = link.next_completion();
  REQUIRE(next);
  CHECK(next->first == Nanos{2'000'000});
  link.complete(next->first, next->second);
  next = link.next_completion();
  REQUIRE(next);
  CHECK(next->first == Nanos{2'000'000});
  CHECK((next->second == a || next->second == b));
  link.complete(next->first, next->second);
  CHECK(link.active() == 0);
  const auto c = link.add(Nanos{3'000'000}, 1e6);
  CHECK(link.next_completion() == std::make_pair(Nanos{4'000'000}, c));
}

TEST_CASE("token bucket grants at its rate") {
  using Clock = TokenBucket::Clock;
  const auto t0 = Clock::now();
  TokenBucket bucket(1000.0, 100.0, t0);
  CHECK(bucket.attempt(t0, 50) == doctest::Approx(0.0));
  CHECK(bucket.attempt(t0 + 100ms, 50) == doctest::Approx(50.0));
  CHECK(bucket.attempt(t0 + 100ms, 100) == doctest::Approx(50.0));
  CHECK(bucket.attempt(t0 + 10s, 1000) == doctest::Approx(100.0));
}

TEST_CASE("simulated clock runs the earliest event first") {
  SimClock clock;
  std::vector<int> order;
  clock.schedule(Nanos{7}, [&] { order.push_back(7); });
  clock.schedule(Nanos{5}, [&] { order.push_back(5); });
  REQUIRE(clock.step());
  CHECK(clock.now() == Nanos{5});
  clock.schedule_after(Nanos{1}, [&] { order.push_back(6); });
  clock.schedule(Nanos{0}, [&] { order.push_back(0); });  // clamped to now
  while (clock.step()) {
  }
  CHECK(order == std::vector<int>{5, 0, 6, 7});
  CHECK(clock.now() == Nanos{7});
  CHECK_FALSE(clock.step());
}

TEST_CASE("trace files round trip and flag overlapping lanes") {
  std::vector<TraceEvent> events = {
      {0, "io", "read", 0, 10, 1, -1},
      {0, "cpu.0", "parse", 10, 20, 1, -1},
      {1, "io", "read", 5, 15, 2, -1},
      {0, "io", "read", 10, 30, 3, -1},
  };
  std::stringstream ss;
  write_trace(ss, events);
  std::string header;
  std::getline(ss, header);
  CHECK(nlohmann::json::parse(header).at("schema") == kTraceSchema);
  ss.seekg(0);
  CHECK(read_trace(ss) == events);
  CHECK(lane_overlaps(events).empty());
  events.push_back({0, "io", "read", 25, 35, 4, -1});
  CHECK(lane_overlaps(events).size() == 1);
  std::stringstream bad("{\"schema\":\"other\"}\n");
  CHECK_THROWS(read_trace(bad));
}
