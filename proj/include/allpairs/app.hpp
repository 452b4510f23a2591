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

#ifndef ALLPAIRS_APP_HPP
#define ALLPAIRS_APP_HPP

#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>

#include "allpairs/types.hpp"

namespace allpairs {

class StorageServer;

/// Progress of an item through the load pipeline. Only moves forward.
enum class Stage : std::uint8_t { RawFile = 0, Parsed = 1, Preprocessed = 2 };

const char* to_string(Stage s);

struct ItemData {
  Stage stage = Stage::RawFile;
  Bytes payload;

  std::size_t byte_length() const { return payload.size(); }

  friend bool operator==(const ItemData&, const ItemData&) = default;
};

struct PairResult {
  ItemKey left;
  ItemKey right;
  double value = 0.0;
  bool match = false;
};

enum class CostStage : std::uint8_t { Parse, Preprocess, Compare, Postprocess };

/// Mean and standard deviation of a stage duration, in seconds.
struct StageCost {
  double mean_s = 0.0;
  double stddev_s = 0.0;
};

/// Per-stage duration distributions. Durations are lognormal with the given
/// arithmetic mean and standard deviation (constant when stddev is zero) and
/// are a pure function of (seed, stage, key or pair), so an item costs the
/// same every time it is reloaded.
struct CostModel {
  StageCost parse;
  StageCost preprocess;
  StageCost compare;
  StageCost postprocess;
  std::uint64_t seed = 0;

  const StageCost& of(CostStage stage) const;
  Nanos sample(CostStage stage, std::uint64_t a, std::uint64_t b = 0) const;
};

/// The five user callbacks plus the static description of the problem.
///
/// All callbacks must be safe to invoke concurrently on distinct keys and
/// pairs; implementations keep only read-only configuration.
class Application {
 public:
  virtual ~Application() = default;

  virtual std::string name() const = 0;
  virtual std::uint64_t item_count() const = 0;

  /// Bytes reserved per cache slot. Also the modeled size of a
  /// preprocessed item for transfer timing.
  virtual std::size_t slot_size() const = 0;

  virtual std::string path_for_key(ItemKey key) const = 0;
  virtual ItemData parse(ItemKey key, const ItemData& raw) const = 0;
  virtual ItemData preprocess(ItemKey key, const ItemData& parsed) const = 0;
  virtual Bytes compare(ItemKey left, ByteView left_data, ItemKey right,
                        ByteView right_data) const = 0;
  virtual PairResult postprocess(ItemKey left, ItemKey right, ByteView raw) const = 0;

  /// Places every input file into storage.
  virtual void populate(StorageServer& storage) const = 0;

  const CostModel& costs() const { return costs_; }
  void set_costs(const CostModel& costs) { costs_ = costs; }

 protected:
  void require_stage(const ItemData& data, Stage expected) const;
  void require_fits(ItemKey key, std::size_t bytes) const;

 private:
  CostModel costs_;
};

/// Builds an application from its JSON description ({"name": ..., ...}).
std::unique_ptr<Application> make_application(const nlohmann::json& desc);

CostModel cost_model_from_json(const nlohmann::json& costs, std::uint64_t seed);
nlohmann::json cost_model_to_json(const CostModel& model);

}  // namespace allpairs

#endif  // ALLPAIRS_APP_HPP
