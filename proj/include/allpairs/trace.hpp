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

#ifndef ALLPAIRS_TRACE_HPP
#define ALLPAIRS_TRACE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "allpairs/types.hpp"

namespace allpairs {

/// One executed stage on one lane. j is -1 for per-item stages.
struct TraceEvent {
  NodeId node = 0;
  std::string lane;
  std::string label;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  std::int64_t i = -1;
  std::int64_t j = -1;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

inline constexpr const char* kTraceSchema = "allpairs.trace/1";

/// JSON Lines. The first line describes the schema:
///   {"schema":"allpairs.trace/1","fields":["node","lane",...]}
/// and every following line is one event object with exactly those keys.
void write_trace(std::ostream& out, const std::vector<TraceEvent>& events);
void write_trace(const std::string& path, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace(std::istream& in);
std::vector<TraceEvent> read_trace(const std::string& path);

/// First pair of events on the same (node, lane) whose intervals overlap,
/// as indices into `events`; empty when lanes are exclusive.
std::vector<std::pair<std::size_t, std::size_t>> lane_overlaps(
    const std::vector<TraceEvent>& events);

}  // namespace allpairs

#endif  // ALLPAIRS_TRACE_HPP
