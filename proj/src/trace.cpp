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

#include "allpairs/trace.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "allpairs/errors.hpp"

namespace allpairs {

using nlohmann::json;

void write_trace(std::ostream& out, const std::vector<TraceEvent>& events) {
  out << json{{"schema", kTraceSchema},
              {"fields", {"node", "lane", "label", "start_ns", "end_ns", "i", "j"}}}
             .dump()
      << '\n';
  for (const auto& e : events) {
    json row = {{"node", e.node},         {"lane", e.lane},     {"label", e.label},
                {"start_ns", e.start_ns}, {"end_ns", e.end_ns}, {"i", e.i},
                {"j", e.j}};
    out << row.dump() << '\n';
  }
}

void write_trace(const std::string& path, const std::vector<TraceEvent>& events) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace '" + path + "'");
  write_trace(out, events);
}

std::vector<TraceEvent> read_trace(std::istream& in) {
  std::vector<TraceEvent> events;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
      if (!header) {
        if (row.value("schema", "") != kTraceSchema) throw Error("trace: missing schema header");
        header = true;
        continue;
      }
      TraceEvent e;
      e.node = row.at("node").get<NodeId>();
      e.lane = row.at("lane").get<std::string>();
      e.label = row.at("label").get<std::string>();
      e.start_ns = row.at("start_ns").get<std::int64_t>();
      e.end_ns = row.at("end_ns").get<std::int64_t>();
      e.i = row.at("i").get<std::int64_t>();
      e.j = row.at("j").get<std::int64_t>();
      events.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(std::string("trace: bad record: ") + ex.what());
    }
  }
  if (!header) throw Error("trace: empty file");
  return events;
}

std::vector<TraceEvent> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read trace '" + path + "'");
  return read_trace(in);
}

std::vector<std::pair<std::size_t, std::size_t>> lane_overlaps(
    const std::vector<TraceEvent>& events) {
  std::map<std::pair<NodeId, std::string>, std::vector<std::size_t>> by_lane;
  for (std::size_t k = 0; k < events.size(); ++k) {
    by_lane[{events[k].node, events[k].lane}].push_back(k);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto& [lane, idx] : by_lane) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return events[a].start_ns < events[b].start_ns;
    });
    std::size_t latest = idx.empty() ? 0 : idx.front();
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (events[idx[k]].start_ns < events[latest].end_ns) out.emplace_back(latest, idx[k]);
      if (events[idx[k]].end_ns > events[latest].end_ns) latest = idx[k];
    }
  }
  return out;
}

}  // namespace allpairs
