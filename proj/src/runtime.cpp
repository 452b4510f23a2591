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

#include "allpairs/runtime.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include "allpairs/errors.hpp"
#include "allpairs/perf_model.hpp"
#include "allpairs/storage.hpp"
#include "drivers.hpp"

namespace allpairs {

namespace {

// Real-mode lanes stretch compute by time_scale; storage is not scaled.
model::StageCosts model_costs(const Application& app, double mean_file_bytes, double io_bw,
                              double scale) {
  const auto& c = app.costs();
  model::StageCosts s;
  s.t_parse = c.parse.mean_s * scale;
  s.t_preprocess = c.preprocess.mean_s * scale;
  s.t_comparison = c.compare.mean_s * scale;
  s.t_postprocess = c.postprocess.mean_s * scale;
  s.file_bytes = mean_file_bytes;
  s.io_bytes_per_s = io_bw;
  return s;
}

RunMetrics assemble(const RunConfig& config, const Application& app, detail::ClusterRun& run) {
  RunMetrics m;
  m.app = app.name();
  m.mode = config.mode;
  m.n = app.item_count();
  m.pairs = pair_count(m.n);
  m.nodes = config.cluster.size();
  m.comparisons_completed = run.results.size();
  for (const auto& s : run.stats) {
    m.total_loads += s.loads;
    m.io_bytes += s.bytes_loaded;
    m.makespan_ns = std::max(m.makespan_ns, s.finish_ns);
    m.tasks_created += s.tasks_created;
    m.tasks_executed += s.tasks_executed;
  }
  m.reload_factor = m.n ? static_cast<double>(m.total_loads) / static_cast<double>(m.n) : 0.0;
  const double file_bytes =
      m.total_loads ? static_cast<double>(m.io_bytes) / static_cast<double>(m.total_loads) : 0.0;
  const auto costs = model_costs(app, file_bytes, config.cluster.storage.bandwidth_bytes_per_s,
                                 config.mode == Mode::Real ? config.time_scale : 1.0);
  if (m.n >= 1) {
    m.t_min_s = model::t_min(m.n, costs);
    m.t_gpu_s = model::t_gpu(m.n, std::max(m.reload_factor, 1.0), costs);
  }
  if (m.makespan_ns > 0) {
    m.efficiency = model::efficiency(m.t_min_s, m.nodes, m.makespan_s());
    m.efficiency_r_adjusted = model::efficiency(m.t_gpu_s, m.nodes, m.makespan_s());
    m.io_bytes_per_s = static_cast<double>(m.io_bytes) / m.makespan_s();
  }
  if (run.has_protocol) m.protocol = run.protocol;
  m.per_node = run.stats;
  m.config = to_json(config);
  return m;
}

void sort_results(std::vector<PairResult>& r) {
  std::sort(r.begin(), r.end(), [](const PairResult& a, const PairResult& b) {
    return std::tie(a.left, a.right) < std::tie(b.left, b.right);
  });
}

void write_outputs(const RunConfig& config, const RunResult& result) {
  if (config.profiling && !config.trace_path.empty()) write_trace(config.trace_path, result.trace);
  if (!config.metrics_path.empty()) {
    std::ofstream out(config.metrics_path);
    if (!out) throw Error("cannot write metrics '" + config.metrics_path + "'");
    out << to_json(result.metrics).dump(2) << '\n';
  }
}

void check_accounting(const RunMetrics& m) {
  if (m.comparisons_completed != m.pairs) {
    throw Error("run finished with " + std::to_string(m.comparisons_completed) + " of " +
                std::to_string(m.pairs) + " pairs");
  }
  if (m.tasks_created != m.tasks_executed) {
    throw Error("scheduler lost work: " + std::to_string(m.tasks_created) + " tasks created, " +
                std::to_string(m.tasks_executed) + " executed");
  }
}

}  // namespace

RunResult run(const RunConfig& config) {
  auto app = make_application(config.app);
  return run(config, *app);
}

RunResult run(const RunConfig& config, const Application& app) {
  validate(config);
  StorageServer storage(config.cluster.storage);
  app.populate(storage);
  detail::ClusterRun cr = config.mode == Mode::Sim ? detail::run_simulated(config, app, storage)
                                                   : detail::run_threaded(config, app, storage);
  RunResult result;
  sort_results(cr.results);
  result.metrics = assemble(config, app, cr);
  result.results = std::move(cr.results);
  result.trace = std::move(cr.trace);
  check_accounting(result.metrics);
  write_outputs(config, result);
  return result;
}

RunResult run_socket_rank(const RunConfig& config, NodeId rank,
                          const std::vector<PeerAddress>& peers) {
  validate(config);
  auto app = make_application(config.app);
  StorageServer storage(config.cluster.storage);
  app->populate(storage);
  detail::ClusterRun cr = detail::run_threaded_rank(config, *app, storage, rank, peers);
  RunResult result;
  sort_results(cr.results);
  result.metrics = assemble(config, *app, cr);
  result.metrics.mode = Mode::Real;
  result.results = std::move(cr.results);
  result.trace = std::move(cr.trace);
  RunConfig out = config;
  if (rank != 0) {
    if (!out.metrics_path.empty()) out.metrics_path += ".rank" + std::to_string(rank);
    if (!out.trace_path.empty()) out.trace_path += ".rank" + std::to_string(rank);
  } else {
    check_accounting(result.metrics);
  }
  write_outputs(out, result);
  return result;
}

std::vector<PairResult> run_sequential_reference(const Application& app) {
  StorageServer storage(StorageServer::Options{std::numeric_limits<double>::infinity(), Nanos{0}});
  app.populate(storage);
  const std::uint64_t n = app.item_count();
  std::vector<ItemData> items;
  items.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    const ItemKey key{k};
    items.push_back(app.preprocess(key, app.parse(key, storage.fetch(app.path_for_key(key)))));
  }
  std::vector<PairResult> out;
  out.reserve(pair_count(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = i + 1; j < n; ++j) {
      const Bytes raw = app.compare(ItemKey{i}, items[i].payload, ItemKey{j}, items[j].payload);
      out.push_back(app.postprocess(ItemKey{i}, ItemKey{j}, raw));
    }
  }
  return out;
}

}  // namespace allpairs
