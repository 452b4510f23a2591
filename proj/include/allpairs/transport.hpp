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

#ifndef ALLPAIRS_TRANSPORT_HPP
#define ALLPAIRS_TRANSPORT_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "allpairs/config.hpp"
#include "allpairs/types.hpp"
#include "allpairs/wire.hpp"

namespace allpairs {

/// Called with the sender and the decoded frame. May run on any thread.
using FrameHandler = std::function<void(NodeId src, Frame frame)>;

/// Reliable, ordered delivery between the nodes of a static cluster.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::size_t size() const = 0;
  virtual void send(NodeId src, NodeId dst, const Frame& frame) = 0;
};

/// All nodes in one process. Frames are encoded and decoded on the way so
/// the wire format is exercised, then handed to the receiver's handler on
/// the sending thread.
class InProcNetwork final : public Transport {
 public:
  explicit InProcNetwork(std::size_t node_count);

  void attach(NodeId node, FrameHandler handler);
  std::size_t size() const override { return handlers_.size(); }
  void send(NodeId src, NodeId dst, const Frame& frame) override;
  std::uint64_t frames_sent() const { return frames_.load(); }

 private:
  std::vector<FrameHandler> handlers_;
  std::vector<std::unique_ptr<std::mutex>> channel_mutex_;  // src * p + dst
  std::atomic<std::uint64_t> frames_{0};
};

/// Timing of the simulated interconnect: every frame costs latency plus
/// size / bandwidth, and a channel never reorders.
class SimNetwork {
 public:
  SimNetwork(std::size_t node_count, NetworkConfig config);

  /// Arrival time of a frame of `bytes` sent now on (src, dst).
  Nanos deliver_at(NodeId src, NodeId dst, Nanos now, std::uint64_t bytes);
  Nanos transit(std::uint64_t bytes) const;

 private:
  std::size_t node_count_;
  NetworkConfig config_;
  std::vector<Nanos> last_;  // src * p + dst
};

struct PeerAddress {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port,host:port,..." in rank order.
std::vector<PeerAddress> parse_peers(const std::string& list);

/// One TCP connection per node pair. Rank r accepts from higher ranks and
/// connects to lower ones; the connecting side announces its rank with a
/// u16. Frames use the length-prefixed wire format.
class TcpTransport final : public Transport {
 public:
  using FailureHandler = std::function<void(const std::string&)>;

  TcpTransport(NodeId rank, std::vector<PeerAddress> peers, FrameHandler handler,
               FailureHandler on_failure,
               std::chrono::milliseconds connect_timeout = std::chrono::seconds(20));
  ~TcpTransport() override;

  std::size_t size() const override { return peers_.size(); }
  void send(NodeId src, NodeId dst, const Frame& frame) override;

  /// After this, send failures and closed peers are no longer errors.
  void quiesce() { quiet_ = true; }
  /// Set when a channel broke before quiesce; the message says why.
  std::string failure() const;
  void close();

 private:
  void establish(std::chrono::milliseconds timeout);
  void receive_loop(NodeId peer, int fd);
  void fail(const std::string& why);

  NodeId rank_;
  std::vector<PeerAddress> peers_;
  FrameHandler handler_;
  FailureHandler on_failure_;
  std::vector<int> fds_;
  std::vector<std::unique_ptr<std::mutex>> send_mutex_;
  std::vector<std::thread> receivers_;
  int listen_fd_ = -1;
  std::atomic<bool> quiet_{false};
  std::atomic<bool> closed_{false};
  mutable std::mutex failure_mutex_;
  std::string failure_;
};

}  // namespace allpairs

#endif  // ALLPAIRS_TRANSPORT_HPP
