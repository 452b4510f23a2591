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

#include "allpairs/app.hpp"

#include <cmath>
#include <random>

#include "allpairs/cv_app.hpp"
#include "allpairs/errors.hpp"
#include "allpairs/random.hpp"
#include "allpairs/synthetic_app.hpp"

namespace allpairs {

const char* to_string(Stage s) {
  switch (s) {
    case Stage::RawFile: return "RawFile";
    case Stage::Parsed: return "Parsed";
    case Stage::Preprocessed: return "Preprocessed";
  }
  return "?";
}

const StageCost& CostModel::of(CostStage stage) const {
  switch (stage) {
    case CostStage::Parse: return parse;
    case CostStage::Preprocess: return preprocess;
    case CostStage::Compare: return compare;
    case CostStage::Postprocess: return postprocess;
  }
  return parse;
}

Nanos CostModel::sample(CostStage stage, std::uint64_t a, std::uint64_t b) const {
  const StageCost& c = of(stage);
  if (c.mean_s <= 0.0) return Nanos{0};
  if (c.stddev_s <= 0.0) return from_seconds(c.mean_s);
  // Lognormal parameters matching the arithmetic mean and deviation.
  const double cv2 = (c.stddev_s / c.mean_s) * (c.stddev_s / c.mean_s);
  const double sigma = std::sqrt(std::log1p(cv2));
  const double mu = std::log(c.mean_s) - 0.5 * sigma * sigma;
  SplitMix64 gen(mix_hash(mix_hash(seed, static_cast<std::uint64_t>(stage) + 1), mix_hash(a, b)));
  std::lognormal_distribution<double> dist(mu, sigma);
  return from_seconds(dist(gen));
}

void Application::require_stage(const ItemData& data, Stage expected) const {
  if (data.stage != expected) {
    throw AppError(name() + ": expected " + to_string(expected) + " data, got " +
                   to_string(data.stage));
  }
}

void Application::require_fits(ItemKey key, std::size_t bytes) const {
  if (bytes > slot_size()) {
    throw SlotOverflow(name() + ": item " + std::to_string(key.index()) + " needs " +
                       std::to_string(bytes) + " bytes, slot holds " +
                       std::to_string(slot_size()));
  }
}

namespace {

StageCost stage_cost_from_json(const nlohmann::json& j) {
  StageCost c;
  if (j.is_number()) {
    c.mean_s = j.get<double>() * 1e-3;
    return c;
  }
  c.mean_s = j.value("mean_ms", 0.0) * 1e-3;
  c.stddev_s = j.value("stddev_ms", 0.0) * 1e-3;
  if (c.mean_s < 0 || c.stddev_s < 0) throw ConfigError("stage costs must be non-negative");
  return c;
}

nlohmann::json stage_cost_to_json(const StageCost& c) {
  return {{"mean_ms", c.mean_s * 1e3}, {"stddev_ms", c.stddev_s * 1e3}};
}

}  // namespace

CostModel cost_model_from_json(const nlohmann::json& costs, std::uint64_t seed) {
  CostModel m;
  m.seed = seed;
  if (costs.is_null()) return m;
  if (costs.contains("parse")) m.parse = stage_cost_from_json(costs["parse"]);
  if (costs.contains("preprocess")) m.preprocess = stage_cost_from_json(costs["preprocess"]);
  if (costs.contains("compare")) m.compare = stage_cost_from_json(costs["compare"]);
  if (costs.contains("postprocess")) m.postprocess = stage_cost_from_json(costs["postprocess"]);
  return m;
}

nlohmann::json cost_model_to_json(const CostModel& m) {
  return {{"parse", stage_cost_to_json(m.parse)},
          {"preprocess", stage_cost_to_json(m.preprocess)},
          {"compare", stage_cost_to_json(m.compare)},
          {"postprocess", stage_cost_to_json(m.postprocess)}};
}

std::unique_ptr<Application> make_application(const nlohmann::json& desc) {
  const std::string name = desc.value("name", "synthetic");
  const auto seed = desc.value<std::uint64_t>("seed", 1);
  if (name == "synthetic") {
    SyntheticApp::Params p;
    CostModel costs;
    if (desc.contains("workload")) {
      auto shape = workload_shape(desc["workload"].get<std::string>());
      if (!shape) throw ConfigError("unknown workload shape '" + desc["workload"].dump() + "'");
      costs = shape->costs;
      p.slot_size = shape->slot_size;
      p.raw_size = shape->raw_size;
    }
    p.n = desc.value<std::uint64_t>("n", p.n);
    p.slot_size = desc.value<std::uint64_t>("slot_size", p.slot_size);
    p.raw_size = desc.value<std::uint64_t>("raw_size", p.raw_size);
    p.payload_bytes = desc.value<std::size_t>("payload_bytes", p.payload_bytes);
    p.threshold = desc.value("threshold", p.threshold);
    p.seed = seed;
    if (p.n < 1) throw ConfigError("synthetic: n must be >= 1");
    if (p.slot_size == 0) throw ConfigError("synthetic: slot_size must be > 0");
    if (desc.contains("costs")) {
      CostModel over = cost_model_from_json(desc["costs"], seed);
      const auto& c = desc["costs"];
      if (c.contains("parse")) costs.parse = over.parse;
      if (c.contains("preprocess")) costs.preprocess = over.preprocess;
      if (c.contains("compare")) costs.compare = over.compare;
      if (c.contains("postprocess")) costs.postprocess = over.postprocess;
    }
    costs.seed = seed;
    auto app = std::make_unique<SyntheticApp>(p);
    app->set_costs(costs);
    return app;
  }
  if (name == "cv") {
    CompositionVectorApp::Params p;
    if (!desc.contains("corpus")) throw ConfigError("cv: 'corpus' directory is required");
    p.corpus = desc["corpus"].get<std::string>();
    p.k = desc.value("k", p.k);
    p.slot_size = desc.value<std::uint64_t>("slot_size", p.slot_size);
    p.threshold = desc.value("threshold", p.threshold);
    auto app = std::make_unique<CompositionVectorApp>(p);
    app->set_costs(cost_model_from_json(desc.value("costs", nlohmann::json{}), seed));
    return app;
  }
  throw ConfigError("unknown application '" + name + "'");
}

}  // namespace allpairs
