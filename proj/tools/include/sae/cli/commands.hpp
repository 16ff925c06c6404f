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

// Subcommands of sae_fh. Each writes its artifacts into cfg.output_dir and
// returns the paths written; failures surface as sae::Error.
//
//   fit       estimates.json, estimates.csv
//   mse       mse.json, mse.csv
//   simulate  metrics.json, metrics.csv, plot_data.csv
//   validate  nothing; the summary goes to `out`

#ifndef SAE_CLI_COMMANDS_HPP_
#define SAE_CLI_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sae/cli/run_config.hpp"
#include "sae/simulation.hpp"

namespace sae::cli {

using Artifacts = std::vector<std::filesystem::path>;

Artifacts cmd_fit(const RunConfig& cfg);
Artifacts cmd_mse(const RunConfig& cfg);
Artifacts cmd_simulate(const RunConfig& cfg);
void cmd_validate(const RunConfig& cfg, std::ostream& out);

// Renderers behind the commands, exposed for tests.
std::string metrics_json(const MetricTable& table, const SimDesign& design);
std::string metrics_csv(const MetricTable& table);
std::string plot_data_csv(const MetricTable& table);

// {"error": {"code": ..., "message": ..., "index": ...}} on one line.
std::string error_json(const std::string& code, const std::string& message,
                       const std::optional<std::size_t>& index = std::nullopt);

// Full command line: parses args (without the program name), runs the
// subcommand, prints written paths to `out` and error JSON to `err`.
// Returns 0 on success, 2 for usage errors, 1 otherwise.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sae::cli

#endif  // SAE_CLI_COMMANDS_HPP_
