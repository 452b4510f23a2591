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

#ifndef ALLPAIRS_SYNTHETIC_APP_HPP
#define ALLPAIRS_SYNTHETIC_APP_HPP

#include <optional>
#include <string>

#include "allpairs/app.hpp"

namespace allpairs {

/// Stage costs and sizes of a real workload, used to shape synthetic runs.
struct WorkloadShape {
  std::string name;
  CostModel costs;
  std::uint64_t slot_size = 0;
  std::uint64_t raw_size = 0;
};

/// "forensics", "bioinformatics" or "microscopy"; nullopt otherwise.
std::optional<WorkloadShape> workload_shape(const std::string& name);

/// Pseudo-random payloads with configurable stage costs. Parse and
/// preprocess are identity transforms; compare yields a symmetric scalar
/// in [0, 1).
class SyntheticApp final : public Application {
 public:
  struct Params {
    std::uint64_t n = 64;
    std::uint64_t slot_size = 4096;   // modeled
    std::uint64_t raw_size = 4096;    // modeled
    std::size_t payload_bytes = 64;   // stored
    std::uint64_t seed = 1;
    double threshold = 0.5;
  };

  explicit SyntheticApp(Params params);

  std::string name() const override { return "synthetic"; }
  std::uint64_t item_count() const override { return params_.n; }
  std::size_t slot_size() const override { return params_.slot_size; }
  std::string path_for_key(ItemKey key) const override;
  ItemData parse(ItemKey key, const ItemData& raw) const override;
  ItemData preprocess(ItemKey key, const ItemData& parsed) const override;
  Bytes compare(ItemKey left, ByteView left_data, ItemKey right,
                ByteView right_data) const override;
  PairResult postprocess(ItemKey left, ItemKey right, ByteView raw) const override;
  void populate(StorageServer& storage) const override;

  /// Deterministic raw content of an item.
  Bytes raw_content(ItemKey key) const;

  const Params& params() const { return params_; }

 private:
  Params params_;
};

}  // namespace allpairs

#endif  // ALLPAIRS_SYNTHETIC_APP_HPP
