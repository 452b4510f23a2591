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

#include "allpairs/synthetic_app.hpp"

#include <cstdio>
#include <cstring>

#include "allpairs/random.hpp"
#include "allpairs/storage.hpp"

namespace allpairs {

namespace {

constexpr double kMB = 1e6;

StageCost ms(double mean, double stddev) { return StageCost{mean * 1e-3, stddev * 1e-3}; }

std::uint64_t fnv1a(ByteView data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::byte b : data) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::optional<WorkloadShape> workload_shape(const std::string& name) {
  WorkloadShape s;
  s.name = name;
  if (name == "forensics") {
    s.costs.parse = ms(130.8, 14.11);
    s.costs.preprocess = ms(20.5, 0.02);
    s.costs.compare = ms(1.1, 0.01);
    s.slot_size = static_cast<std::uint64_t>(38.1 * kMB);
    s.raw_size = static_cast<std::uint64_t>(19.4e9 / 4980);
  } else if (name == "bioinformatics") {
    s.costs.parse = ms(36.9, 14.79);
    s.costs.preprocess = ms(27.0, 4.90);
    s.costs.compare = ms(2.1, 0.79);
    s.slot_size = static_cast<std::uint64_t>(145.8 * kMB);
    s.raw_size = static_cast<std::uint64_t>(1.8e9 / 2500);
  } else if (name == "microscopy") {
    s.costs.parse = ms(27.4, 1.56);
    s.costs.compare = ms(564.3, 348.0);
    s.slot_size = 6000;
    s.raw_size = static_cast<std::uint64_t>(150e6 / 256);
  } else {
    return std::nullopt;
  }
  return s;
}

SyntheticApp::SyntheticApp(Params params) : params_(params) {}

std::string SyntheticApp::path_for_key(ItemKey key) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "items/%06llu.bin", static_cast<unsigned long long>(key.index()));
  return buf;
}

Bytes SyntheticApp::raw_content(ItemKey key) const {
  SplitMix64 gen(mix_hash(params_.seed, key.index()));
  Bytes out(params_.payload_bytes);
  for (std::size_t i = 0; i < out.size(); i += 8) {
    const std::uint64_t word = gen();
    std::memcpy(out.data() + i, &word, std::min<std::size_t>(8, out.size() - i));
  }
  return out;
}

ItemData SyntheticApp::parse(ItemKey, const ItemData& raw) const {
  require_stage(raw, Stage::RawFile);
  return ItemData{Stage::Parsed, raw.payload};
}

ItemData SyntheticApp::preprocess(ItemKey key, const ItemData& parsed) const {
  require_stage(parsed, Stage::Parsed);
  require_fits(key, parsed.byte_length());
  return ItemData{Stage::Preprocessed, parsed.payload};
}

Bytes SyntheticApp::compare(ItemKey, ByteView left_data, ItemKey, ByteView right_data) const {
  // XOR is commutative, so the value is symmetric in its arguments.
  const std::uint64_t h = fnv1a(left_data) ^ fnv1a(right_data);
  const double value = static_cast<double>(h >> 11) * 0x1.0p-53;
  Bytes out(sizeof(double));
  std::memcpy(out.data(), &value, sizeof value);
  return out;
}

PairResult SyntheticApp::postprocess(ItemKey left, ItemKey right, ByteView raw) const {
  double value = 0.0;
  if (raw.size() >= sizeof value) std::memcpy(&value, raw.data(), sizeof value);
  return PairResult{left, right, value, value >= params_.threshold};
}

void SyntheticApp::populate(StorageServer& storage) const {
  for (std::uint64_t i = 0; i < params_.n; ++i) {
    const ItemKey key{i};
    storage.put(path_for_key(key), raw_content(key), params_.raw_size);
  }
}

}  // namespace allpairs
