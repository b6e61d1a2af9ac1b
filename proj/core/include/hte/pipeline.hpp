/*
 * Copyright 2026 The hte Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef HTE_PIPELINE_HPP_
#define HTE_PIPELINE_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hte/calibration.hpp"
#include "hte/diagnostics.hpp"
#include "hte/forest.hpp"
#include "hte/policy.hpp"
#include "hte/synthdata.hpp"

namespace hte {

enum class SchemaChoice { kSynthetic, kProduction };
enum class PredictMode { kOob, kFresh };

// Parsed run configuration (JSON file with nested blocks). The global seed
// feeds both the generator and the forest; `threads` and `out_dir` are
// execution details and excluded from the semantic digest.
struct RunConfig {
  uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";

  DGPConfig dgp;
  ForestConfig forest;
  std::vector<PolicySpec> policies;
  CalibrationOptions calibration;
  double overlap_epsilon = 0.05;
  SurfaceSpec surface;

  SchemaChoice schema_choice = SchemaChoice::kSynthetic;
  PredictMode predict_mode = PredictMode::kOob;
  std::optional<int32_t> train_max_year;
  std::optional<int32_t> predict_year;

  // Input/output path overrides; empty entries resolve to out_dir defaults.
  std::string cohort_path;
  std::string oracle_path;
  std::string model_path;
  std::string predictions_path;

  static RunConfig from_json_file(const std::string& path);  // throws ConfigError
  uint64_t digest() const;

  std::string resolved_cohort_path() const;
  std::string resolved_oracle_path() const;
  std::string resolved_model_path() const;
  std::string resolved_predictions_path() const;
  FeatureSchema resolve_schema() const;
};

// Exit codes: 0 success, 1 runtime estimation failure, 2 invalid
// configuration or missing/invalid input.
int run_command(const std::string& command, const RunConfig& config, std::ostream& log);

// Command list for the CLI front end.
const std::vector<std::string>& known_commands();

}  // namespace hte

#endif  // HTE_PIPELINE_HPP_
