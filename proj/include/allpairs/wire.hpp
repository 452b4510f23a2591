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

#ifndef ALLPAIRS_WIRE_HPP
#define ALLPAIRS_WIRE_HPP

#include <cstdint>
#include <vector>

#include "allpairs/types.hpp"

namespace allpairs {

/// Frame layout, all integers little-endian:
///
///   u32  length            bytes that follow this field
///   u8   kind
///   u64  request_id
///   u64  key
///   u16  origin
///   u16  candidate_count
///   u16  candidates[candidate_count]
///   -- only for kinds that carry a payload --
///   u32  checksum          CRC-32 (zlib polynomial) of payload
///   u8   payload[...]      runs to the end of the frame
///
/// Cache protocol, work stealing and run control share this layout and are
/// told apart by the kind byte.
enum class FrameKind : std::uint8_t {
  Request = 1,
  Forward = 2,
  Data = 3,
  Failure = 4,
  StealRequest = 5,
  StealReply = 6,
  Completion = 7,
  Shutdown = 8,
  NodeStats = 9,
};

const char* to_string(FrameKind kind);
bool carries_payload(FrameKind kind);
bool is_cache_kind(FrameKind kind);

struct Frame {
  FrameKind kind = FrameKind::Request;
  std::uint64_t request_id = 0;
  std::uint64_t key = 0;
  NodeId origin = 0;
  std::vector<NodeId> candidates;
  Bytes payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 8 + 8 + 2 + 2;

std::uint32_t crc32_of(ByteView data);

Bytes encode(const Frame& frame);

/// Decodes one complete frame, including its length prefix. Throws
/// FrameError on truncation, trailing bytes, unknown kind or checksum
/// mismatch.
Frame decode(ByteView bytes);

/// Size `encode(frame)` would produce.
std::size_t encoded_size(const Frame& frame);

/// Little-endian helpers shared by payload encoders.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}
  void u8(std::uint8_t v) { put(&v, 1); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(ByteView v) { out_.insert(out_.end(), v.begin(), v.end()); }

 private:
  void put(const void* p, std::size_t n);
  Bytes& out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  ByteView take(std::size_t n);
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace allpairs

#endif  // ALLPAIRS_WIRE_HPP
