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

#include "allpairs/wire.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <string>

#include <zlib.h>

#include "allpairs/errors.hpp"

namespace allpairs {

static_assert(std::endian::native == std::endian::little, "wire codec assumes a little-endian host");

const char* to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Request: return "Request";
    case FrameKind::Forward: return "Forward";
    case FrameKind::Data: return "Data";
    case FrameKind::Failure: return "Failure";
    case FrameKind::StealRequest: return "StealRequest";
    case FrameKind::StealReply: return "StealReply";
    case FrameKind::Completion: return "Completion";
    case FrameKind::Shutdown: return "Shutdown";
    case FrameKind::NodeStats: return "NodeStats";
  }
  return "?";
}

bool carries_payload(FrameKind kind) {
  return kind == FrameKind::Data || kind == FrameKind::StealReply ||
         kind == FrameKind::Completion || kind == FrameKind::NodeStats;
}

bool is_cache_kind(FrameKind kind) {
  return kind == FrameKind::Request || kind == FrameKind::Forward || kind == FrameKind::Data ||
         kind == FrameKind::Failure;
}

std::uint32_t crc32_of(ByteView data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  const auto* p = reinterpret_cast<const Bytef*>(data.data());
  std::size_t left = data.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void ByteWriter::put(const void* p, std::size_t n) {
  const auto* b = static_cast<const std::byte*>(p);
  out_.insert(out_.end(), b, b + n);
}
void ByteWriter::u16(std::uint16_t v) { put(&v, sizeof v); }
void ByteWriter::u32(std::uint32_t v) { put(&v, sizeof v); }
void ByteWriter::u64(std::uint64_t v) { put(&v, sizeof v); }
void ByteWriter::f64(double v) { put(&v, sizeof v); }

void ByteReader::need(std::size_t n) const {
  if (in_.size() - pos_ < n) throw FrameError("frame truncated");
}

ByteView ByteReader::take(std::size_t n) {
  need(n);
  auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

#define ALLPAIRS_READ_POD(name, type)      \
  type ByteReader::name() {                \
    type v;                                \
    std::memcpy(&v, take(sizeof v).data(), sizeof v); \
    return v;                              \
  }
ALLPAIRS_READ_POD(u16, std::uint16_t)
ALLPAIRS_READ_POD(u32, std::uint32_t)
ALLPAIRS_READ_POD(u64, std::uint64_t)
ALLPAIRS_READ_POD(f64, double)
#undef ALLPAIRS_READ_POD

std::size_t encoded_size(const Frame& frame) {
  std::size_t n = kFrameHeaderBytes + 2 * frame.candidates.size();
  if (carries_payload(frame.kind)) n += 4 + frame.payload.size();
  return n;
}

Bytes encode(const Frame& frame) {
  if (frame.candidates.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw FrameError("too many candidates");
  }
  if (!carries_payload(frame.kind) && !frame.payload.empty()) {
    throw FrameError(std::string(to_string(frame.kind)) + " frames carry no payload");
  }
  const std::size_t total = encoded_size(frame);
  if (total - 4 > std::numeric_limits<std::uint32_t>::max()) throw FrameError("frame too large");
  Bytes out;
  out.reserve(total);
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(total - 4));
  w.u8(static_cast<std::uint8_t>(frame.kind));
  w.u64(frame.request_id);
  w.u64(frame.key);
  w.u16(frame.origin);
  w.u16(static_cast<std::uint16_t>(frame.candidates.size()));
  for (NodeId c : frame.candidates) w.u16(c);
  if (carries_payload(frame.kind)) {
    w.u32(crc32_of(frame.payload));
    w.raw(frame.payload);
  }
  return out;
}

Frame decode(ByteView bytes) {
  ByteReader r(bytes);
  const std::uint32_t length = r.u32();
  if (length != r.remaining()) {
    throw FrameError("frame length " + std::to_string(length) + " does not match " +
                     std::to_string(r.remaining()) + " bytes");
  }
  Frame f;
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > static_cast<std::uint8_t>(FrameKind::NodeStats)) {
    throw FrameError("unknown frame kind " + std::to_string(kind));
  }
  f.kind = static_cast<FrameKind>(kind);
  f.request_id = r.u64();
  f.key = r.u64();
  f.origin = r.u16();
  const std::uint16_t count = r.u16();
  f.candidates.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) f.candidates.push_back(r.u16());
  if (carries_payload(f.kind)) {
    const std::uint32_t checksum = r.u32();
    auto body = r.take(r.remaining());
    f.payload.assign(body.begin(), body.end());
    if (crc32_of(f.payload) != checksum) throw FrameError("payload checksum mismatch");
  } else if (r.remaining() != 0) {
    throw FrameError("trailing bytes in " + std::string(to_string(f.kind)) + " frame");
  }
  return f;
}

}  // namespace allpairs
