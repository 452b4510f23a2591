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

#ifndef ALLPAIRS_CACHE_HPP
#define ALLPAIRS_CACHE_HPP

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "allpairs/types.hpp"

namespace allpairs {

enum class TierKind : std::uint8_t { Device, Host };

struct TierLevel {
  TierKind kind = TierKind::Host;
  std::uint16_t device = 0;

  static TierLevel host() { return {TierKind::Host, 0}; }
  static TierLevel on_device(std::uint16_t id) { return {TierKind::Device, id}; }

  std::string to_string() const;
};

enum class SlotState : std::uint8_t { Empty, Write, Read };

const char* to_string(SlotState s);

class CacheTier;

/// Shared read access to a published slot. While held the slot stays in
/// READ state and cannot be evicted. Releases on destruction.
class ReadLease {
 public:
  ReadLease() = default;
  ReadLease(ReadLease&& other) noexcept { *this = std::move(other); }
  ReadLease& operator=(ReadLease&& other) noexcept;
  ReadLease(const ReadLease&) = delete;
  ReadLease& operator=(const ReadLease&) = delete;
  ~ReadLease() { release(); }

  bool valid() const { return tier_ != nullptr; }
  ItemKey key() const { return key_; }
  std::size_t slot() const { return slot_; }
  const CacheTier* tier() const { return tier_; }

  /// Contents of the slot; valid while the lease is held.
  ByteView data() const;

  void release();

 private:
  friend class CacheTier;
  ReadLease(CacheTier* tier, std::size_t slot, ItemKey key)
      : tier_(tier), slot_(slot), key_(key) {}

  CacheTier* tier_ = nullptr;
  std::size_t slot_ = 0;
  ItemKey key_;
};

/// Exclusive right to fill a slot. Must be resolved by publish or abort;
/// destroying a live ticket aborts it.
class WriteTicket {
 public:
  WriteTicket() = default;
  WriteTicket(WriteTicket&& other) noexcept { *this = std::move(other); }
  WriteTicket& operator=(WriteTicket&& other) noexcept;
  WriteTicket(const WriteTicket&) = delete;
  WriteTicket& operator=(const WriteTicket&) = delete;
  ~WriteTicket();

  bool valid() const { return tier_ != nullptr; }
  ItemKey key() const { return key_; }
  std::size_t slot() const { return slot_; }
  const CacheTier* tier() const { return tier_; }

 private:
  friend class CacheTier;
  WriteTicket(CacheTier* tier, std::size_t slot, ItemKey key)
      : tier_(tier), slot_(slot), key_(key) {}

  CacheTier* tier_ = nullptr;
  std::size_t slot_ = 0;
  ItemKey key_;
};

/// Invoked once when the slot a MustWait caller is waiting on is published
/// or aborted. Runs on the publishing thread, outside the tier lock.
using Waker = std::function<void()>;

struct Hit {
  ReadLease lease;
};
struct MustWait {
  std::uint64_t token = 0;
};
struct Miss {
  WriteTicket ticket;
  std::optional<ItemKey> evicted;
};
/// Every slot is pinned (WRITE or readers > 0). Retry later.
struct NoEvictableSlot {};

using AcquireResult = std::variant<Hit, MustWait, Miss, NoEvictableSlot>;

struct TierStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t waits = 0;
  std::uint64_t evictions = 0;
  std::uint64_t aborts = 0;
  std::uint64_t no_slot = 0;
  std::size_t occupancy = 0;
  std::size_t capacity = 0;
};

struct SlotInfo {
  std::optional<ItemKey> key;
  SlotState state = SlotState::Empty;
  std::uint32_t readers = 0;
  std::uint64_t lru_stamp = 0;
};

/// One level of the software cache: a fixed number of fixed-size slots with
/// an LRU policy over unpinned slots. All operations are atomic with respect
/// to each other.
class CacheTier {
 public:
  CacheTier(TierLevel level, std::size_t capacity, std::size_t slot_bytes);
  CacheTier(const CacheTier&) = delete;
  CacheTier& operator=(const CacheTier&) = delete;

  /// floor(total_bytes / slot_bytes)
  static std::size_t slots_for_bytes(std::uint64_t total_bytes, std::uint64_t slot_bytes);

  AcquireResult acquire(ItemKey key, Waker on_ready = {});

  void publish(WriteTicket&& ticket, ByteView data);
  /// Publishes and keeps one reader on behalf of the writer.
  ReadLease publish_and_pin(WriteTicket&& ticket, ByteView data);
  void abort(WriteTicket&& ticket);
  void release(ReadLease&& lease);

  /// Copy of a READ slot's contents without pinning it. WRITE or absent
  /// slots yield nullopt.
  std::optional<Bytes> peek(ItemKey key) const;

  std::optional<SlotInfo> inspect(ItemKey key) const;
  std::vector<SlotInfo> slots() const;
  TierStats snapshot_stats() const;

  TierLevel level() const { return level_; }
  std::size_t capacity() const { return slots_.size(); }
  std::size_t slot_bytes() const { return slot_bytes_; }

 private:
  friend class ReadLease;
  friend class WriteTicket;

  struct Slot {
    std::optional<ItemKey> key;
    SlotState state = SlotState::Empty;
    std::uint32_t readers = 0;
    std::uint64_t lru_stamp = 0;
    Bytes buffer;
    std::vector<Waker> waiters;
  };

  void touch(std::size_t slot);
  void make_evictable(std::size_t slot);
  void make_pinned(std::size_t slot);
  std::vector<Waker> finish_write(std::size_t slot, ItemKey key, ByteView data,
                                  std::uint32_t readers);
  void release_slot(std::size_t slot, ItemKey key);
  void abort_slot(std::size_t slot, ItemKey key);
  ByteView view(std::size_t slot) const;
  static void wake(std::vector<Waker>& waiters);

  TierLevel level_;
  std::size_t slot_bytes_;
  mutable std::mutex mutex_;
  std::vector<Slot> slots_;
  std::unordered_map<ItemKey, std::size_t> index_;
  std::vector<std::size_t> free_;
  std::set<std::pair<std::uint64_t, std::size_t>> evictable_;
  std::uint64_t clock_ = 0;
  std::uint64_t next_token_ = 1;
  TierStats stats_;
};

}  // namespace allpairs

#endif  // ALLPAIRS_CACHE_HPP
