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

#ifndef ALLPAIRS_PERF_MODEL_HPP
#define ALLPAIRS_PERF_MODEL_HPP

#include <cstdint>
#include <limits>
#include <optional>

#include <json.hpp>

namespace allpairs::model {

/// Mean stage durations in seconds, the average raw file size and the
/// storage bandwidth.
struct StageCosts {
  double t_parse = 0.0;
  double t_preprocess = 0.0;
  double t_comparison = 0.0;
  double t_postprocess = 0.0;
  double file_bytes = 0.0;
  double io_bytes_per_s = std::numeric_limits<double>::infinity();
};

/// Time spent on the devices: R*n preprocessing runs and C(n,2)
/// comparisons.
double t_gpu(std::uint64_t n, double reload_factor, const StageCosts& c);

/// Host CPU time: R*n parses and C(n,2) post-processing steps.
double t_cpu(std::uint64_t n, double reload_factor, const StageCosts& c);

/// Storage time: R*n file reads at the given bandwidth.
double t_io(std::uint64_t n, double reload_factor, const StageCosts& c);

/// Lower bound on run time with perfect reuse, free I/O and device-bound
/// work: t_gpu at R = 1.
double t_min(std::uint64_t n, const StageCosts& c);

/// (t_min / p) / measured.
double efficiency(double t_min_s, std::uint64_t nodes, double measured_s);

struct Report {
  std::uint64_t n = 0;
  std::uint64_t nodes = 1;
  double reload_factor = 1.0;
  double t_gpu = 0, t_cpu = 0, t_io = 0, t_min = 0;
  /// max(T_GPU, T_CPU, T_IO) / p: run time if the three overlap perfectly.
  double t_overlapped = 0;
  std::optional<double> measured;
  std::optional<double> efficiency;             // against t_min (R = 1)
  std::optional<double> efficiency_r_adjusted;  // against t_gpu at the given R
};

Report report(std::uint64_t n, std::uint64_t nodes, double reload_factor, const StageCosts& c,
              std::optional<double> measured_s = std::nullopt);

/// Single-node efficiencies reported for the three reference applications.
inline constexpr double kReferenceEfficiencyForensics = 0.946;
inline constexpr double kReferenceEfficiencyBioinformatics = 0.885;
inline constexpr double kReferenceEfficiencyMicroscopy = 0.992;

/// Reads {"n", "R", "p", "t_parse_ms", "t_preprocess_ms",
/// "t_comparison_ms", "t_postprocess_ms", "file_bytes",
/// "io_bandwidth_bytes_per_s", "measured_s"}; all but n optional.
struct CostsDocument {
  std::uint64_t n = 0;
  std::uint64_t nodes = 1;
  double reload_factor = 1.0;
  StageCosts costs;
  std::optional<double> measured_s;
};

CostsDocument costs_document_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Report& r);

}  // namespace allpairs::model

#endif  // ALLPAIRS_PERF_MODEL_HPP
