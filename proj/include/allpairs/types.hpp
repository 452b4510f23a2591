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

#ifndef ALLPAIRS_TYPES_HPP
#define ALLPAIRS_TYPES_HPP

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace allpairs {

using Bytes = std::vector<std::byte>;
using ByteView = std::span<const std::byte>;

/// Virtual or wall-clock time, always nanoseconds since run start.
using Nanos = std::chrono::nanoseconds;

inline constexpr double to_seconds(Nanos t) { return static_cast<double>(t.count()) * 1e-9; }
inline Nanos from_seconds(double s) { return Nanos{static_cast<std::int64_t>(s * 1e9 + 0.5)}; }

/// Dense index of an input item, 0 <= index < n.
class ItemKey {
 public:
  constexpr ItemKey() = default;
  constexpr explicit ItemKey(std::uint64_t index) : index_(index) {}

  constexpr std::uint64_t index() const { return index_; }

  friend constexpr auto operator<=>(ItemKey, ItemKey) = default;

 private:
  std::uint64_t index_ = 0;
};

using NodeId = std::uint16_t;

/// Number of unordered pairs over n items.
constexpr std::uint64_t pair_count(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

}  // namespace allpairs

template <>
struct std::hash<allpairs::ItemKey> {
  std::size_t operator()(allpairs::ItemKey k) const noexcept {
    return std::hash<std::uint64_t>{}(k.index());
  }
};

#endif  // ALLPAIRS_TYPES_HPP
