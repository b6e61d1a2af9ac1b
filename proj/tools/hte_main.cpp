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
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hte/error.hpp"
#include "hte/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "hte - honest causal forests, effect calibration, and intervention-targeting "
      "policy evaluation for hospital-readmission-style cohorts"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<uint64_t> seed_override;
  std::optional<int> threads_override;
  std::optional<std::string> out_override;

  for (const std::string& name : hte::known_commands()) {
    CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' step");
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--threads", threads_override, "worker threads (0 = hardware)");
    sub->add_option("--out", out_override, "override the output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  hte::RunConfig config;
  try {
    config = hte::RunConfig::from_json_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (seed_override) {
    config.seed = *seed_override;
    config.dgp.seed = *seed_override;
    config.forest.seed = *seed_override;
  }
  if (threads_override) config.threads = *threads_override;
  if (out_override) config.out_dir = *out_override;

  return hte::run_command(command, config, std::cout);
}
