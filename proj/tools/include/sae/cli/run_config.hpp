// Copyright 2026 The saefh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAE_CLI_RUN_CONFIG_HPP_
#define SAE_CLI_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sae/dataset.hpp"
#include "sae/mse.hpp"
#include "sae/optimizer.hpp"
#include "sae/simulation.hpp"

namespace sae::cli {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string command;
  // Dataset path, or builtin:balanced4 / builtin:surrogate15.
  std::string input;
  bool intercept = false;
  // Built-in design name or path to a design JSON file (simulate).
  std::string design;
  // Empty: every estimator for mse, the design's own list for simulate.
  std::vector<MseEstimator> mse_estimators;
  std::optional<int> boot_reps;
  std::optional<int> n_mc;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = ".";
  bool write_csv = true;
  bool write_json = true;
  FitConfig fit;
};

// "csv", "json" or a comma-separated combination. Throws kInvalidArgument.
void set_formats(RunConfig& cfg, std::string_view formats);

// Comma-separated estimator names. Throws kInvalidArgument naming the
// unknown entry and listing the valid ones.
std::vector<MseEstimator> parse_estimator_list(std::string_view list);

// Throws kInvalidArgument when replicates < 1 with a bootstrap estimator
// selected, or when a stochastic step has no seed.
void validate_run_config(const RunConfig& cfg);

FhDataset load_input(const RunConfig& cfg);
std::vector<std::string> builtin_dataset_names();

struct LoadedDesign {
  SimDesign design;
  bool has_seed = false;
};

// Built-in name or JSON file. Throws kSchemaError for unknown names (listing
// the built-ins) and malformed files, kIoError when a file cannot be read.
LoadedDesign load_design(std::string_view name_or_path);
LoadedDesign parse_design_json(std::string_view text, std::string_view source = "<design>");
std::vector<std::string> builtin_design_names();

// Design text in the same schema parse_design_json accepts.
std::string design_to_json(const SimDesign& design);

// The simulate design after applying the command-line overrides.
SimDesign resolve_sim_design(const RunConfig& cfg);

}  // namespace sae::cli

#endif  // SAE_CLI_RUN_CONFIG_HPP_
