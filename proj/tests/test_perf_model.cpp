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

#include "allpairs/errors.hpp"
#include "allpairs/perf_model.hpp"

using namespace allpairs;
using namespace allpairs::model;

namespace {

StageCosts forensics() {
  StageCosts c;
  c.t_parse = 0.1308;
  c.t_preprocess = 0.0205;
  c.t_comparison = 0.0011;
  return c;
}

}  // namespace

TEST_CASE("device term for the forensics workload") {
  // 4980 * 0.0205 + 12397710 * 0.0011
  CHECK(t_gpu(4980, 1.0, forensics()) == doctest::Approx(13739.571).epsilon(1e-9));
  CHECK(t_gpu(4980, 1.0, StageCosts{}) == 0.0);
  const double first = 4980 * 0.0205;
  CHECK(t_gpu(4980, 2.0, forensics()) - t_gpu(4980, 1.0, forensics()) ==
        doctest::Approx(first).epsilon(1e-9));
}

TEST_CASE("cpu term") {
  StageCosts c;
  c.t_parse = 0.0369;
  CHECK(t_cpu(2500, 1.0, c) == doctest::Approx(92.25).epsilon(1e-12));
  CHECK(t_cpu(2500, 1.0, StageCosts{}) == 0.0);
  CHECK(t_cpu(100, 1.0, c) == doctest::Approx(100 * 0.0369));
  c.t_postprocess = 0.001;
  CHECK(t_cpu(100, 1.0, c) == doctest::Approx(100 * 0.0369 + 4950 * 0.001));
}

TEST_CASE("io term") {
  StageCosts c;
  c.file_bytes = 19.4e9 / 4980;
  c.io_bytes_per_s = 400e6;
  CHECK(t_io(4980, 1.0, c) == doctest::Approx(48.5).epsilon(1e-12));
  CHECK(t_io(4980, 2.0, c) == doctest::Approx(97.0).epsilon(1e-12));
  c.io_bytes_per_s = std::numeric_limits<double>::infinity();
  CHECK(t_io(4980, 1.0, c) == 0.0);
}

TEST_CASE("lower bound") {
  CHECK(t_min(4980, forensics()) == doctest::Approx(13739.571).epsilon(1e-9));
  CHECK(t_min(4980, forensics()) == t_gpu(4980, 1.0, forensics()));
  StageCosts m;
  m.t_comparison = 0.5643;
  CHECK(t_min(256, m) == doctest::Approx(32640 * 0.5643).epsilon(1e-12));
  // 130,816 pairs is C(512, 2).
  CHECK(t_min(512, m) == doctest::Approx(73819.4688).epsilon(1e-9));
  StageCosts two;
  two.t_preprocess = 0.3;
  two.t_comparison = 0.7;
  CHECK(t_min(2, two) == doctest::Approx(0.3 * 2 + 0.7));
}

TEST_CASE("efficiency") {
  CHECK(efficiency(100.0, 4, 25.0) == 1.0);
  CHECK(efficiency(100.0, 4, 50.0) == 0.5);
  CHECK(efficiency(13739.571, 1, 13739.571) == 1.0);
  CHECK(kReferenceEfficiencyForensics == 0.946);
  CHECK(kReferenceEfficiencyBioinformatics == 0.885);
  CHECK(kReferenceEfficiencyMicroscopy == 0.992);
}

TEST_CASE("report and costs document") {
  const nlohmann::json doc = {{"n", 4980},          {"p", 2},
                              {"R", 1.5},           {"t_parse_ms", 130.8},
                              {"t_preprocess_ms", 20.5}, {"t_comparison_ms", 1.1},
                              {"measured_s", 7000.0}};
  const auto d = costs_document_from_json(doc);
  const auto r = report(d.n, d.nodes, d.reload_factor, d.costs, d.measured_s);
  CHECK(r.t_min == doctest::Approx(13739.571));
  CHECK(r.t_gpu == doctest::Approx(13739.571 + 0.5 * 4980 * 0.0205));
  CHECK(r.t_io == 0.0);
  CHECK(r.t_overlapped == doctest::Approx(r.t_gpu / 2));
  REQUIRE(r.efficiency);
  CHECK(*r.efficiency == doctest::Approx(13739.571 / 2 / 7000.0));
  const auto j = to_json(r);
  CHECK(j.at("T_min_s").get<double>() == doctest::Approx(13739.571));
  CHECK(j.contains("efficiency_r_adjusted"));
  CHECK_FALSE(to_json(report(10, 1, 1.0, StageCosts{})).contains("efficiency"));
}

TEST_CASE("costs document validation") {
  CHECK_THROWS_AS(costs_document_from_json({{"p", 1}}), ConfigError);
  CHECK_THROWS_AS(costs_document_from_json({{"n", 10}, {"R", 0.5}}), ConfigError);
  CHECK_THROWS_AS(costs_document_from_json({{"n", 10}, {"t_parse_ms", -1.0}}), ConfigError);
  CHECK_THROWS_AS(costs_document_from_json({{"n", 10}, {"p", 0}}), ConfigError);
}
