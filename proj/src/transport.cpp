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

#include "allpairs/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <sstream>

#include "allpairs/errors.hpp"

namespace allpairs {

InProcNetwork::InProcNetwork(std::size_t node_count) : handlers_(node_count) {
  for (std::size_t i = 0; i < node_count * node_count; ++i) {
    channel_mutex_.push_back(std::make_unique<std::mutex>());
  }
}

void InProcNetwork::attach(NodeId node, FrameHandler handler) {
  handlers_.at(node) = std::move(handler);
}

void InProcNetwork::send(NodeId src, NodeId dst, const Frame& frame) {
  if (dst >= handlers_.size() || !handlers_[dst]) {
    throw TransportError("no node " + std::to_string(dst));
  }
  Frame copy = decode(encode(frame));
  std::lock_guard lock(*channel_mutex_[src * handlers_.size() + dst]);
  ++frames_;
  handlers_[dst](src, std::move(copy));
}

SimNetwork::SimNetwork(std::size_t node_count, NetworkConfig config)
    : node_count_(node_count), config_(config), last_(node_count * node_count, Nanos{0}) {}

Nanos SimNetwork::transit(std::uint64_t bytes) const {
  const double wire = std::isinf(config_.bandwidth_bytes_per_s)
                          ? 0.0
                          : static_cast<double>(bytes) / config_.bandwidth_bytes_per_s;
  return config_.latency + from_seconds(wire);
}

Nanos SimNetwork::deliver_at(NodeId src, NodeId dst, Nanos now, std::uint64_t bytes) {
  Nanos& last = last_.at(src * node_count_ + dst);
  last = std::max(now + transit(bytes), last);
  return last;
}

std::vector<PeerAddress> parse_peers(const std::string& list) {
  std::vector<PeerAddress> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
      throw ConfigError("peer '" + item + "' is not host:port");
    }
    int port = 0;
    try {
      port = std::stoi(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("peer '" + item + "' has a bad port");
    }
    if (port <= 0 || port > 65535) throw ConfigError("peer '" + item + "' has a bad port");
    out.push_back({item.substr(0, colon), static_cast<std::uint16_t>(port)});
  }
  if (out.empty()) throw ConfigError("empty peer list");
  return out;
}

namespace {

bool write_all(int fd, const void* data, std::size_t n) {
  const auto* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

bool read_all(int fd, void* data, std::size_t n) {
  auto* p = static_cast<char*>(data);
  while (n > 0) {
    const ssize_t r = ::recv(fd, p, n, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

sockaddr_in resolve(const PeerAddress& peer) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(peer.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw ConnectFailure("cannot resolve host '" + peer.host + "'");
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(peer.port);
  return addr;
}

std::string describe(const PeerAddress& p) { return p.host + ":" + std::to_string(p.port); }

}  // namespace

TcpTransport::TcpTransport(NodeId rank, std::vector<PeerAddress> peers, FrameHandler handler,
                           FailureHandler on_failure, std::chrono::milliseconds connect_timeout)
    : rank_(rank),
      peers_(std::move(peers)),
      handler_(std::move(handler)),
      on_failure_(std::move(on_failure)),
      fds_(peers_.size(), -1) {
  if (rank_ >= peers_.size()) {
    throw ConfigError("rank " + std::to_string(rank_) + " outside peer list of " +
                      std::to_string(peers_.size()));
  }
  for (std::size_t i = 0; i < peers_.size(); ++i) send_mutex_.push_back(std::make_unique<std::mutex>());
  try {
    establish(connect_timeout);
  } catch (...) {
    close();
    throw;
  }
  for (std::size_t i = 0; i < peers_.size(); ++i) {
    if (i == rank_) continue;
    receivers_.emplace_back([this, i] { receive_loop(static_cast<NodeId>(i), fds_[i]); });
  }
}

TcpTransport::~TcpTransport() { close(); }

void TcpTransport::establish(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  const std::size_t higher = peers_.size() - rank_ - 1;

  if (higher > 0) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = resolve(peers_[rank_]);
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, static_cast<int>(peers_.size())) != 0) {
      throw ConnectFailure("cannot listen on " + describe(peers_[rank_]) + ": " +
                           std::strerror(errno));
    }
  }

  for (std::size_t lower = 0; lower < rank_; ++lower) {
    const sockaddr_in addr = resolve(peers_[lower]);
    for (;;) {
      const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
        set_nodelay(fd);
        const std::uint16_t me = rank_;
        if (!write_all(fd, &me, sizeof me)) {
          ::close(fd);
          throw ConnectFailure("handshake with " + describe(peers_[lower]) + " failed");
        }
        fds_[lower] = fd;
        break;
      }
      ::close(fd);
      if (std::chrono::steady_clock::now() >= deadline) {
        throw ConnectFailure("cannot connect to rank " + std::to_string(lower) + " at " +
                             describe(peers_[lower]));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }

  for (std::size_t accepted = 0; accepted < higher;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (left.count() <= 0 || ::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) {
      throw ConnectFailure("timed out waiting for " + std::to_string(higher - accepted) +
                           " higher rank(s) to connect");
    }
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_nodelay(fd);
    std::uint16_t peer = 0;
    if (!read_all(fd, &peer, sizeof peer) || peer <= rank_ || peer >= peers_.size() ||
        fds_[peer] != -1) {
      ::close(fd);
      throw ConnectFailure("bad handshake from a peer of rank " + std::to_string(rank_));
    }
    fds_[peer] = fd;
    ++accepted;
  }
}

void TcpTransport::send(NodeId, NodeId dst, const Frame& frame) {
  if (dst >= peers_.size() || dst == rank_) throw TransportError("bad destination " + std::to_string(dst));
  const Bytes bytes = encode(frame);
  std::lock_guard lock(*send_mutex_[dst]);
  if (fds_[dst] < 0 || !write_all(fds_[dst], bytes.data(), bytes.size())) {
    if (quiet_) return;
    throw TransportError("channel to rank " + std::to_string(dst) + " broken");
  }
}

void TcpTransport::receive_loop(NodeId peer, int fd) {
  for (;;) {
    std::uint32_t length = 0;
    if (!read_all(fd, &length, sizeof length)) break;
    Bytes buf(4 + static_cast<std::size_t>(length));
    std::memcpy(buf.data(), &length, sizeof length);
    if (!read_all(fd, buf.data() + 4, length)) break;
    Frame frame;
    try {
      frame = decode(buf);
    } catch (const FrameError& e) {
      fail("rank " + std::to_string(peer) + ": " + e.what());
      return;
    }
    handler_(peer, std::move(frame));
  }
  if (!quiet_ && !closed_) fail("rank " + std::to_string(peer) + " closed its channel");
}

void TcpTransport::fail(const std::string& why) {
  {
    std::lock_guard lock(failure_mutex_);
    if (failure_.empty()) failure_ = why;
  }
  if (on_failure_) on_failure_(why);
}

std::string TcpTransport::failure() const {
  std::lock_guard lock(failure_mutex_);
  return failure_;
}

void TcpTransport::close() {
  if (closed_.exchange(true)) return;
  for (int& fd : fds_) {
    if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : receivers_) {
    if (t.joinable()) t.join();
  }
  for (int& fd : fds_) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

}  // namespace allpairs
