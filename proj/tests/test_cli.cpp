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


#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <sys/wait.h>

#include "allpairs/errors.hpp"
#include "allpairs/runtime.hpp"
#include "allpairs/sweep.hpp"
#include "support.hpp"

using namespace allpairs;
using testing::small_config;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("allpairs_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(ALLPAIRS_CLI) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config round trips through json") {
  auto cfg = small_config(20, 3, 4, 6);
  cfg.dist_cache.hops = 2;
  cfg.scheduler.seed = 99;
  cfg.cluster.nodes[1].devices[0].speed = 2.5;
  const auto back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK(back.cluster.nodes[1].devices[0].speed == 2.5);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config_from_json({{"mode", "fast"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"cluster", {{"nodes", 0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"node", nlohmann::json::object()}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"scheduler", {{"leaf_blok", 4}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"dist_cache", {{"hops", 99}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);
  const auto c = config_from_json({{"stall_timeout_s", 3}, {"dist_cache", {{"timeout_ms", 2}}}});
  CHECK(c.stall_timeout == std::chrono::seconds(3));
  CHECK(c.dist_cache.timeout == std::chrono::milliseconds(2));
}

TEST_CASE("sweep axes and values") {
  CHECK(parse_axis("cache_size") == SweepAxis::CacheSize);
  CHECK(parse_axis("h") == SweepAxis::Hops);
  CHECK_THROWS_AS(parse_axis("heat"), ConfigError);
  CHECK(parse_values("1, 2,4") == std::vector<std::string>{"1", "2", "4"});
  CHECK_THROWS_AS(parse_values(""), ConfigError);
  CHECK_THROWS_AS(parse_values(" , "), ConfigError);
  CHECK(cache_slots_for("25%", 200) == 50);
  CHECK(cache_slots_for("0.1", 200) == 20);
  CHECK(cache_slots_for("1%", 10) == 2);
  CHECK(cache_slots_for("64", 200) == 64);
  CHECK_THROWS_AS(cache_slots_for("-3", 200), ConfigError);
  CHECK_THROWS_AS(cache_slots_for("big", 200), ConfigError);
}

TEST_CASE("cache size sweep emits one row per size") {
  const auto cfg = small_config(48, 1, 4, 48);
  const std::vector<std::string> sizes = {"100%", "50%", "25%", "10%"};
  double prev = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto seeded = cfg;
    apply_seed(seeded, seed);
    const auto rows = run_sweep(seeded, SweepAxis::CacheSize, sizes);
    REQUIRE(rows.size() == sizes.size());
    CHECK(rows[0].reload_factor == 1.0);
    CHECK(rows[0].host_cache_slots == 48);
    CHECK(rows[3].host_cache_slots == 5);
    prev = 0;
    for (const auto& r : rows) {
      CHECK(r.reload_factor >= prev);
      prev = r.reload_factor;
    }
  }
}

TEST_CASE("node sweep pairs distributed cache on and off") {
  const auto cfg = small_config(32, 1, 4, 6);
  const auto rows = run_sweep(cfg, SweepAxis::Nodes, {"1", "2", "4"});
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    CHECK(rows[i].value == rows[i + 1].value);
    CHECK(rows[i].dist_cache);
    CHECK_FALSE(rows[i + 1].dist_cache);
    CHECK(rows[i].speedup.has_value());
  }
  CHECK(*rows[0].speedup == doctest::Approx(1.0));
  CHECK(rows[1].remote_requests == 0);
  CHECK(rows[5].remote_requests == 0);
  CHECK(rows[4].remote_requests > 0);
}

TEST_CASE("sweep table has a header and one line per row") {
  const auto rows = run_sweep(small_config(12, 2, 4, 4), SweepAxis::Hops, {"0", "1", "2"});
  std::stringstream out;
  write_sweep_csv(out, rows);
  const auto table = read_csv(out.str());
  REQUIRE(table.size() == 4);
  CHECK(table[0] == sweep_columns());
  for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i].size() == sweep_columns().size());
  CHECK(table[3][0] == "h");
  CHECK(table[3][6] == "2");
}

TEST_CASE("cli run writes metrics and a parseable trace") {
  TempDir tmp;
  const auto cfg_path = tmp.file("cfg.json");
  std::ofstream(cfg_path) << to_json(small_config(64, 1, 64, 64)).dump();
  REQUIRE(cli("run --config " + cfg_path + " --metrics " + tmp.file("m.json") + " --trace " +
                  tmp.file("t.jsonl"),
              tmp.file("log")) == 0);
  const auto m = nlohmann::json::parse(slurp(tmp.file("m.json")));
  CHECK(m.at("R") == 1.0);
  CHECK(m.at("comparisons_completed") == 2016);
  CHECK_FALSE(read_trace(tmp.file("t.jsonl")).empty());
}

TEST_CASE("cli overrides nodes and seed") {
  TempDir tmp;
  const auto cfg_path = tmp.file("cfg.json");
  std::ofstream(cfg_path) << to_json(small_config(20, 1, 4, 4)).dump();
  REQUIRE(cli("run --config " + cfg_path + " --nodes 3 --seed 7 --mode sim --metrics " +
                  tmp.file("m.json"),
              tmp.file("log")) == 0);
  const auto m = nlohmann::json::parse(slurp(tmp.file("m.json")));
  CHECK(m.at("nodes") == 3);
  CHECK(m.at("config").at("scheduler").at("seed") == 7);
}

TEST_CASE("cli rejects bad input with a diagnostic") {
  TempDir tmp;
  const auto bad = tmp.file("bad.json");
  std::ofstream(bad) << R"({"cluster": {"nodes": 0}})";
  CHECK(cli("run --config " + bad, tmp.file("log")) != 0);
  CHECK(slurp(tmp.file("log")).find("node count") != std::string::npos);
  std::ofstream(tmp.file("broken.json")) << "{ not json";
  CHECK(cli("run --config " + tmp.file("broken.json"), tmp.file("log")) != 0);
  CHECK(cli("run --config " + tmp.file("missing.json"), tmp.file("log")) != 0);
  const auto good = tmp.file("good.json");
  std::ofstream(good) << to_json(small_config(8, 1, 4, 4)).dump();
  CHECK(cli("sweep --config " + good + " --sweep nodes --values ''", tmp.file("log")) != 0);
  CHECK(cli("sweep --config " + good + " --sweep colour --values 1", tmp.file("log")) != 0);
  CHECK(cli("frobnicate", tmp.file("log")) != 0);
}

TEST_CASE("cli sweep writes a table") {
  TempDir tmp;
  const auto good = tmp.file("good.json");
  std::ofstream(good) << to_json(small_config(16, 1, 4, 16)).dump();
  REQUIRE(cli("sweep --config " + good + " --sweep cache_size --values 100%,50%,25% --out " +
                  tmp.file("s.csv"),
              tmp.file("log")) == 0);
  const auto table = read_csv(slurp(tmp.file("s.csv")));
  CHECK(table.size() == 4);
  CHECK(table[1][9] == "1");
}

TEST_CASE("cli model prints the report") {
  TempDir tmp;
  std::ofstream(tmp.file("costs.json"))
      << R"({"n": 4980, "t_preprocess_ms": 20.5, "t_comparison_ms": 1.1, "t_parse_ms": 130.8})";
  REQUIRE(cli("model " + tmp.file("costs.json"), tmp.file("out")) == 0);
  const auto j = nlohmann::json::parse(slurp(tmp.file("out")));
  CHECK(j.at("T_min_s").get<double>() == doctest::Approx(13739.571));
  std::ofstream(tmp.file("nocosts.json")) << R"({"p": 2})";
  CHECK(cli("model " + tmp.file("nocosts.json"), tmp.file("out")) != 0);
}

TEST_CASE("cli sockets mode across three processes") {
  TempDir tmp;
  auto cfg = small_config(24, 3, 4, 6);
  cfg.mode = Mode::Real;
  cfg.time_scale = 0.0;
  cfg.cluster.storage.bandwidth_bytes_per_s = std::numeric_limits<double>::infinity();
  cfg.cluster.storage.request_latency = Nanos{0};
  const auto cfg_path = tmp.file("cfg.json");
  std::ofstream(cfg_path) << to_json(cfg).dump();
  const int base = 21000 + (::getpid() * 13) % 20000;
  std::string peers;
  for (int r = 0; r < 3; ++r) peers += (r ? "," : "") + std::string("127.0.0.1:") + std::to_string(base + r);
  std::vector<std::future<int>> ranks;
  for (int r = 0; r < 3; ++r) {
    ranks.push_back(std::async(std::launch::async, [&, r] {
      return cli("run --config " + cfg_path + " --rank " + std::to_string(r) + " --peers " + peers +
                     " --metrics " + tmp.file("m.json"),
                 tmp.file("log" + std::to_string(r)));
    }));
  }
  for (auto& f : ranks) CHECK(f.get() == 0);
  const auto m = nlohmann::json::parse(slurp(tmp.file("m.json")));
  CHECK(m.at("comparisons_completed") == pair_count(24));
  CHECK(m.at("per_node").size() == 3);
  CHECK(fs::exists(tmp.file("m.json.rank1")));
  CHECK(fs::exists(tmp.file("m.json.rank2")));
}
