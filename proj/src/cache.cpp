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

#include "allpairs/cache.hpp"

#include <cassert>

#include "allpairs/errors.hpp"

namespace allpairs {

std::string TierLevel::to_string() const {
  return kind == TierKind::Host ? std::string("host") : "device" + std::to_string(device);
}

const char* to_string(SlotState s) {
  switch (s) {
    case SlotState::Empty: return "Empty";
    case SlotState::Write: return "Write";
    case SlotState::Read: return "Read";
  }
  return "?";
}

ReadLease& ReadLease::operator=(ReadLease&& other) noexcept {
  if (this != &other) {
    release();
    tier_ = std::exchange(other.tier_, nullptr);
    slot_ = other.slot_;
    key_ = other.key_;
  }
  return *this;
}

ByteView ReadLease::data() const {
  assert(tier_ != nullptr);
  return tier_->view(slot_);
}

void ReadLease::release() {
  if (tier_ != nullptr) std::exchange(tier_, nullptr)->release_slot(slot_, key_);
}

WriteTicket& WriteTicket::operator=(WriteTicket&& other) noexcept {
  if (this != &other) {
    if (tier_ != nullptr) tier_->abort_slot(slot_, key_);
    tier_ = std::exchange(other.tier_, nullptr);
    slot_ = other.slot_;
    key_ = other.key_;
  }
  return *this;
}

WriteTicket::~WriteTicket() {
  if (tier_ != nullptr) std::exchange(tier_, nullptr)->abort_slot(slot_, key_);
}

CacheTier::CacheTier(TierLevel level, std::size_t capacity, std::size_t slot_bytes)
    : level_(level), slot_bytes_(slot_bytes), slots_(capacity) {
  free_.reserve(capacity);
  for (std::size_t i = capacity; i-- > 0;) free_.push_back(i);
  stats_.capacity = capacity;
}

std::size_t CacheTier::slots_for_bytes(std::uint64_t total_bytes, std::uint64_t slot_bytes) {
  return slot_bytes == 0 ? 0 : static_cast<std::size_t>(total_bytes / slot_bytes);
}

void CacheTier::touch(std::size_t slot) {
  Slot& s = slots_[slot];
  const bool listed = evictable_.erase({s.lru_stamp, slot}) > 0;
  s.lru_stamp = ++clock_;
  if (listed) evictable_.emplace(s.lru_stamp, slot);
}

void CacheTier::make_evictable(std::size_t slot) {
  evictable_.emplace(slots_[slot].lru_stamp, slot);
}

void CacheTier::make_pinned(std::size_t slot) {
  evictable_.erase({slots_[slot].lru_stamp, slot});
}

AcquireResult CacheTier::acquire(ItemKey key, Waker on_ready) {
  std::lock_guard lock(mutex_);
  if (auto it = index_.find(key); it != index_.end()) {
    Slot& s = slots_[it->second];
    if (s.state == SlotState::Read) {
      if (s.readers++ == 0) make_pinned(it->second);
      touch(it->second);
      ++stats_.hits;
      return Hit{ReadLease(this, it->second, key)};
    }
    assert(s.state == SlotState::Write);
    if (on_ready) s.waiters.push_back(std::move(on_ready));
    ++stats_.waits;
    return MustWait{next_token_++};
  }

  std::size_t slot;
  std::optional<ItemKey> evicted;
  if (!free_.empty()) {
    slot = free_.back();
    free_.pop_back();
  } else if (!evictable_.empty()) {
    slot = evictable_.begin()->second;
    evictable_.erase(evictable_.begin());
    Slot& victim = slots_[slot];
    assert(victim.state == SlotState::Read && victim.readers == 0);
    evicted = victim.key;
    index_.erase(*victim.key);
    victim.buffer.clear();
    ++stats_.evictions;
    --stats_.occupancy;
  } else {
    ++stats_.no_slot;
    return NoEvictableSlot{};
  }

  Slot& s = slots_[slot];
  s.key = key;
  s.state = SlotState::Write;
  s.readers = 0;
  s.lru_stamp = ++clock_;
  index_.emplace(key, slot);
  ++stats_.misses;
  ++stats_.occupancy;
  return Miss{WriteTicket(this, slot, key), evicted};
}

std::vector<Waker> CacheTier::finish_write(std::size_t slot, ItemKey key, ByteView data,
                                           std::uint32_t readers) {
  if (data.size() > slot_bytes_) {
    throw SlotOverflow(level_.to_string() + " cache: item " + std::to_string(key.index()) +
                       " is " + std::to_string(data.size()) + " bytes, slot holds " +
                       std::to_string(slot_bytes_));
  }
  Slot& s = slots_[slot];
  assert(s.state == SlotState::Write && s.key == key);
  s.buffer.assign(data.begin(), data.end());
  s.state = SlotState::Read;
  s.readers = readers;
  s.lru_stamp = ++clock_;
  if (readers == 0) make_evictable(slot);
  return std::exchange(s.waiters, {});
}

void CacheTier::wake(std::vector<Waker>& waiters) {
  for (auto& w : waiters) w();
}

void CacheTier::publish(WriteTicket&& ticket, ByteView data) {
  assert(ticket.tier_ == this);
  std::vector<Waker> waiters;
  {
    std::lock_guard lock(mutex_);
    waiters = finish_write(ticket.slot_, ticket.key_, data, 0);
  }
  ticket.tier_ = nullptr;
  wake(waiters);
}

ReadLease CacheTier::publish_and_pin(WriteTicket&& ticket, ByteView data) {
  assert(ticket.tier_ == this);
  std::vector<Waker> waiters;
  {
    std::lock_guard lock(mutex_);
    waiters = finish_write(ticket.slot_, ticket.key_, data, 1);
  }
  ReadLease lease(this, ticket.slot_, ticket.key_);
  ticket.tier_ = nullptr;
  wake(waiters);
  return lease;
}

void CacheTier::abort_slot(std::size_t slot, ItemKey key) {
  std::vector<Waker> waiters;
  {
    std::lock_guard lock(mutex_);
    Slot& s = slots_[slot];
    assert(s.state == SlotState::Write && s.key == key);
    index_.erase(key);
    s.key.reset();
    s.state = SlotState::Empty;
    s.buffer.clear();
    waiters = std::exchange(s.waiters, {});
    free_.push_back(slot);
    ++stats_.aborts;
    --stats_.occupancy;
  }
  wake(waiters);
}

void CacheTier::abort(WriteTicket&& ticket) {
  assert(ticket.tier_ == this);
  ticket.tier_ = nullptr;
  abort_slot(ticket.slot_, ticket.key_);
}

void CacheTier::release_slot(std::size_t slot, ItemKey key) {
  std::lock_guard lock(mutex_);
  Slot& s = slots_[slot];
  assert(s.state == SlotState::Read && s.key == key && s.readers > 0 && "double release");
  (void)key;
  s.lru_stamp = ++clock_;
  if (--s.readers == 0) make_evictable(slot);
}

void CacheTier::release(ReadLease&& lease) {
  assert(lease.tier_ == this);
  lease.release();
}

ByteView CacheTier::view(std::size_t slot) const {
  // The buffer is only rewritten in WRITE state, which a held lease excludes.
  return slots_[slot].buffer;
}

std::optional<Bytes> CacheTier::peek(ItemKey key) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end() || slots_[it->second].state != SlotState::Read) return std::nullopt;
  return slots_[it->second].buffer;
}

std::optional<SlotInfo> CacheTier::inspect(ItemKey key) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  const Slot& s = slots_[it->second];
  return SlotInfo{s.key, s.state, s.readers, s.lru_stamp};
}

std::vector<SlotInfo> CacheTier::slots() const {
  std::lock_guard lock(mutex_);
  std::vector<SlotInfo> out;
  out.reserve(slots_.size());
  for (const Slot& s : slots_) out.push_back(SlotInfo{s.key, s.state, s.readers, s.lru_stamp});
  return out;
}

TierStats CacheTier::snapshot_stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

}  // namespace allpairs
