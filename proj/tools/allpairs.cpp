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

// allpairs run    [--config F] [--mode sim|real] [--nodes N] [--seed S]
//                 [--trace F] [--metrics F] [--rank R --peers host:port,...]
// allpairs sweep  --sweep cache_size|nodes|h|seed --values V1,V2,... [--out F]
// allpairs model  COSTS.json

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "allpairs/config.hpp"
#include "allpairs/errors.hpp"
#include "allpairs/perf_model.hpp"
#include "allpairs/runtime.hpp"
#include "allpairs/sweep.hpp"

namespace {

using allpairs::RunConfig;

struct Common {
  std::string config_path;
  std::string mode;
  std::size_t nodes = 0;
  std::optional<std::uint64_t> seed;
  std::string trace;
  std::string metrics;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--mode", c.mode, "sim or real")->check(CLI::IsMember({"sim", "real"}));
  cmd->add_option("--nodes", c.nodes, "replicate the first node N times")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "scheduler and workload seed");
  cmd->add_option("--trace", c.trace, "write a trace file (enables profiling)");
  cmd->add_option("--metrics", c.metrics, "write the metrics document here");
}

RunConfig build_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : allpairs::load_config(c.config_path);
  if (c.mode == "sim") cfg.mode = allpairs::Mode::Sim;
  if (c.mode == "real") cfg.mode = allpairs::Mode::Real;
  if (c.nodes > 0) cfg.cluster.resize(c.nodes);
  if (c.seed) allpairs::apply_seed(cfg, *c.seed);
  if (!c.trace.empty()) {
    cfg.profiling = true;
    cfg.trace_path = c.trace;
  }
  if (!c.metrics.empty()) cfg.metrics_path = c.metrics;
  allpairs::validate(cfg);
  return cfg;
}

void print_summary(const allpairs::RunMetrics& m) {
  std::cout << m.app << " n=" << m.n << " nodes=" << m.nodes << " mode=" << allpairs::to_string(m.mode)
            << "\n  pairs " << m.comparisons_completed << "/" << m.pairs << "  loads " << m.total_loads
            << "  R " << m.reload_factor << "\n  makespan " << m.makespan_s() << " s  T_min "
            << m.t_min_s << " s  efficiency " << m.efficiency << " (R-adjusted "
            << m.efficiency_r_adjusted << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"All-pairs compute runtime"};
  app.require_subcommand(1);

  Common run_opts;
  std::optional<std::uint16_t> rank;
  std::string peers;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common(run_cmd, run_opts);
  auto* rank_opt = run_cmd->add_option("--rank", rank, "this process's rank (sockets mode)");
  auto* peers_opt = run_cmd->add_option("--peers", peers, "host:port list in rank order (sockets mode)");
  rank_opt->needs(peers_opt);
  peers_opt->needs(rank_opt);

  Common sweep_opts;
  std::string axis;
  std::string values;
  std::string out_path;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--sweep", axis, "cache_size, nodes, h or seed")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();
  sweep_cmd->add_option("--out", out_path, "CSV output (default stdout)");

  std::string costs_path;
  auto* model_cmd = app.add_subcommand("model", "evaluate the performance model");
  model_cmd->add_option("costs", costs_path, "stage costs document (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      RunConfig cfg = build_config(run_opts);
      if (rank) {
        const auto list = allpairs::parse_peers(peers);
        cfg.mode = allpairs::Mode::Real;
        if (run_opts.nodes == 0 && cfg.cluster.size() != list.size()) cfg.cluster.resize(list.size());
        auto result = allpairs::run_socket_rank(cfg, *rank, list);
        if (*rank == 0) print_summary(result.metrics);
      } else {
        print_summary(allpairs::run(cfg).metrics);
      }
      return 0;
    }
    if (*sweep_cmd) {
      const RunConfig cfg = build_config(sweep_opts);
      const auto parsed_axis = allpairs::parse_axis(axis);
      const auto parsed_values = allpairs::parse_values(values);
      const auto rows = allpairs::run_sweep(cfg, parsed_axis, parsed_values);
      if (out_path.empty()) {
        allpairs::write_sweep_csv(std::cout, rows);
      } else {
        std::ofstream out(out_path);
        if (!out) throw allpairs::Error("cannot write '" + out_path + "'");
        allpairs::write_sweep_csv(out, rows);
      }
      return 0;
    }
    if (*model_cmd) {
      std::ifstream in(costs_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw allpairs::ConfigError(costs_path + ": " + e.what());
      }
      const auto doc = allpairs::model::costs_document_from_json(j);
      const auto report = allpairs::model::report(doc.n, doc.nodes, doc.reload_factor, doc.costs,
                                                  doc.measured_s);
      std::cout << allpairs::model::to_json(report).dump(2) << '\n';
      return 0;
    }
  } catch (const allpairs::ConfigError& e) {
    std::cerr << "allpairs: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "allpairs: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
