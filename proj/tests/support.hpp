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

#ifndef ALLPAIRS_TESTS_SUPPORT_HPP
#define ALLPAIRS_TESTS_SUPPORT_HPP

#include <cstring>
#include <string>
#include <string_view>

#include "allpairs/app.hpp"
#include "allpairs/config.hpp"

namespace testing {

inline std::string fixture(const std::string& rel) { return std::string(ALLPAIRS_FIXTURES) + "/" + rel; }

inline allpairs::Bytes bytes_of(std::string_view s) {
  allpairs::Bytes out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

inline allpairs::ItemData raw_item(std::string_view s) {
  return allpairs::ItemData{allpairs::Stage::RawFile, bytes_of(s)};
}

inline double value_of(const allpairs::Bytes& raw) {
  double v = 0;
  std::memcpy(&v, raw.data(), sizeof v);
  return v;
}

// Small synthetic cluster with fast modeled costs; `nodes` copies of one node.
inline allpairs::RunConfig small_config(std::uint64_t n, std::size_t nodes, std::uint64_t device_slots,
                                        std::uint64_t host_slots) {
  nlohmann::json j = {
      {"mode", "sim"},
      {"app",
       {{"name", "synthetic"},
        {"n", n},
        {"slot_size", 1 << 20},
        {"raw_size", 1 << 20},
        {"costs",
         {{"parse", 2.0}, {"preprocess", 1.0}, {"compare", 0.5}, {"postprocess", 0.0}}}}},
      {"cluster",
       {{"nodes", nodes},
        {"node",
         {{"devices", {{{"speed", 1.0}, {"cache_slots", device_slots}}}},
          {"host_cache_slots", host_slots}}}}},
  };
  return allpairs::config_from_json(j);
}

}  // namespace testing

#endif  // ALLPAIRS_TESTS_SUPPORT_HPP
