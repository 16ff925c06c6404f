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

#include "sae/cli/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sae/cli/csv_io.hpp"
#include "sae/error.hpp"

namespace sae::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kBuiltinPrefix = "builtin:";

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k > 0) out += ", ";
    out += parts[k];
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    std::string_view part = s.substr(start, end - start);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (!part.empty()) out.push_back(part);
    start = end + 1;
  }
  return out;
}

[[noreturn]] void schema_fail(std::string_view source, const std::string& what) {
  throw Error(ErrorCode::kSchemaError, std::string(source) + ": " + what);
}

const Json& require(const Json& obj, const char* key, std::string_view source) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_fail(source, std::string("missing key '") + key + "'");
  return *it;
}

double as_number(const Json& v, std::string_view source, const std::string& where) {
  if (!v.is_number()) schema_fail(source, where + " must be a number");
  return v.get<double>();
}

Vector as_vector(const Json& v, std::string_view source, const std::string& where) {
  if (!v.is_array()) schema_fail(source, where + " must be an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = as_number(v[k], source, where + "[" + std::to_string(k) + "]");
  }
  return out;
}

int as_count(const Json& v, std::string_view source, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000'000) {
    schema_fail(source, where + " must be a positive integer");
  }
  return v.get<int>();
}

SimDesign builtin_balanced50() {
  SimDesign sd = balanced_design(50, 1.0, 1.0);
  sd.name = "balanced50";
  sd.n_mc = 2000;
  sd.n_boot = 500;
  sd.mse_estimators = {MseEstimator::kNaiveRe, MseEstimator::kTaylorHl, MseEstimator::kPbHl};
  sd.bootstrap_areas = {0};
  return sd;
}

}  // namespace

void set_formats(RunConfig& cfg, std::string_view formats) {
  cfg.write_csv = false;
  cfg.write_json = false;
  for (std::string_view f : split_commas(formats)) {
    if (f == "csv") {
      cfg.write_csv = true;
    } else if (f == "json") {
      cfg.write_json = true;
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown output format '" + std::string(f) + "' (expected csv, json)");
    }
  }
  if (!cfg.write_csv && !cfg.write_json) {
    throw Error(ErrorCode::kInvalidArgument, "no output format selected");
  }
}

std::vector<MseEstimator> parse_estimator_list(std::string_view list) {
  std::vector<MseEstimator> out;
  std::set<MseEstimator> seen;
  for (std::string_view name : split_commas(list)) {
    if (name == "all") {
      for (MseEstimator e : kAllMseEstimators) {
        if (seen.insert(e).second) out.push_back(e);
      }
      continue;
    }
    const auto e = parse_mse_estimator(name);
    if (!e) {
      std::vector<std::string> valid;
      for (MseEstimator k : kAllMseEstimators) valid.emplace_back(mse_estimator_name(k));
      throw Error(ErrorCode::kInvalidArgument, "unknown MSE estimator '" + std::string(name) +
                                                   "'; valid: " + join(valid) + ", all");
    }
    if (seen.insert(*e).second) out.push_back(*e);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty estimator list");
  return out;
}

void validate_run_config(const RunConfig& cfg) {
  if (cfg.boot_reps && *cfg.boot_reps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "--boot-reps must be >= 1");
  }
  if (cfg.n_mc && *cfg.n_mc < 1) throw Error(ErrorCode::kInvalidArgument, "--n-mc must be >= 1");
  if (cfg.command == "mse") {
    const std::vector<MseEstimator> sel =
        cfg.mse_estimators.empty()
            ? std::vector<MseEstimator>(std::begin(kAllMseEstimators), std::end(kAllMseEstimators))
            : cfg.mse_estimators;
    bool stochastic = false;
    for (MseEstimator e : sel) stochastic = stochastic || is_bootstrap(e);
    if (stochastic && !cfg.seed) {
      throw Error(ErrorCode::kInvalidArgument,
                  "--seed is required when a bootstrap MSE estimator is selected");
    }
  }
}

std::vector<std::string> builtin_dataset_names() { return {"balanced4", "surrogate15"}; }

FhDataset load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw Error(ErrorCode::kInvalidArgument, "--input is required");
  const std::string_view in = cfg.input;
  if (in.substr(0, kBuiltinPrefix.size()) == kBuiltinPrefix) {
    const std::string_view name = in.substr(kBuiltinPrefix.size());
    if (name == "balanced4") {
      RawDataset raw;
      raw.y = Vector(4);
      raw.y << 0.0, 2.0, 4.0, 6.0;
      raw.X = Matrix::Ones(4, 1);
      raw.D = Vector::Ones(4);
      return validate_dataset(std::move(raw));
    }
    if (name == "surrogate15") {
      SimDesign sd = surrogate_design();
      sd.seed = 1;
      return make_dataset(sd.design, simulate_fh(sd, 0).y);
    }
    throw Error(ErrorCode::kSchemaError, "unknown built-in dataset '" + std::string(name) +
                                             "'; built-ins: " + join(builtin_dataset_names()));
  }
  return read_dataset_csv(cfg.input, CsvOptions{cfg.intercept});
}

std::vector<std::string> builtin_design_names() { return {"surrogate", "balanced50"}; }

LoadedDesign load_design(std::string_view name_or_path) {
  if (name_or_path == "surrogate") return {surrogate_design(), false};
  if (name_or_path == "balanced50") return {builtin_balanced50(), false};
  const std::filesystem::path path{std::string(name_or_path)};
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kSchemaError, "unknown design '" + std::string(name_or_path) +
                                             "'; built-in designs: " +
                                             join(builtin_design_names()) +
                                             " (or a path to a design JSON file)");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_design_json(text.str(), path.string());
}

LoadedDesign parse_design_json(std::string_view text, std::string_view source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string(source) + ": " + e.what());
  }
  if (!j.is_object()) schema_fail(source, "design must be a JSON object");
  static const std::set<std::string> kKeys = {
      "name", "area_ids", "X", "D", "A_true", "beta_true", "n_mc", "n_boot", "seed",
      "mse_estimators", "bootstrap_areas", "include_true_a"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (kKeys.count(key) == 0) schema_fail(source, "unknown key '" + key + "'");
  }

  LoadedDesign out;
  SimDesign& sd = out.design;
  sd.name = j.value("name", std::string("custom"));
  const Json& xj = require(j, "X", source);
  if (!xj.is_array() || xj.empty()) schema_fail(source, "X must be a non-empty array of rows");
  const std::size_t m = xj.size();
  const std::size_t p = xj[0].is_array() ? xj[0].size() : 0;
  if (p == 0) schema_fail(source, "X rows must be non-empty arrays");
  Matrix X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < m; ++i) {
    const Vector row = as_vector(xj[i], source, "X[" + std::to_string(i) + "]");
    if (static_cast<std::size_t>(row.size()) != p) {
      schema_fail(source, "X[" + std::to_string(i) + "] has " + std::to_string(row.size()) +
                              " entries, expected " + std::to_string(p));
    }
    X.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  Vector D = as_vector(require(j, "D", source), source, "D");
  std::vector<std::string> ids;
  if (const auto it = j.find("area_ids"); it != j.end()) {
    if (!it->is_array()) schema_fail(source, "area_ids must be an array of strings");
    for (const auto& v : *it) {
      if (!v.is_string()) schema_fail(source, "area_ids must be an array of strings");
      ids.push_back(v.get<std::string>());
    }
  }
  sd.design = validate_design(std::move(ids), std::move(X), std::move(D));
  sd.A_true = as_number(require(j, "A_true", source), source, "A_true");
  sd.beta_true = as_vector(require(j, "beta_true", source), source, "beta_true");
  if (const auto it = j.find("n_mc"); it != j.end()) sd.n_mc = as_count(*it, source, "n_mc");
  if (const auto it = j.find("n_boot"); it != j.end()) sd.n_boot = as_count(*it, source, "n_boot");
  if (const auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) schema_fail(source, "seed must be a non-negative integer");
    sd.seed = it->get<std::uint64_t>();
    out.has_seed = true;
  }
  if (const auto it = j.find("mse_estimators"); it != j.end()) {
    if (!it->is_array()) schema_fail(source, "mse_estimators must be an array of names");
    std::string list;
    for (const auto& v : *it) {
      if (!v.is_string()) schema_fail(source, "mse_estimators must be an array of names");
      list += v.get<std::string>() + ",";
    }
    if (!list.empty()) {
      try {
        sd.mse_estimators = parse_estimator_list(list);
      } catch (const Error& e) {
        schema_fail(source, e.what());
      }
    }
  } else {
    sd.mse_estimators.assign(std::begin(kAllMseEstimators), std::end(kAllMseEstimators));
  }
  if (const auto it = j.find("bootstrap_areas"); it != j.end()) {
    if (!it->is_array()) schema_fail(source, "bootstrap_areas must be an array of indices");
    for (const auto& v : *it) {
      if (!v.is_number_unsigned()) schema_fail(source, "bootstrap_areas must hold indices >= 0");
      sd.bootstrap_areas.push_back(v.get<std::size_t>());
    }
  }
  if (const auto it = j.find("include_true_a"); it != j.end()) {
    if (!it->is_boolean()) schema_fail(source, "include_true_a must be a boolean");
    sd.include_true_a = it->get<bool>();
  }
  try {
    validate_sim_design(sd);
  } catch (const Error& e) {
    schema_fail(source, e.what());
  }
  return out;
}

std::string design_to_json(const SimDesign& design) {
  Json j;
  j["name"] = design.name;
  j["area_ids"] = design.design->area_ids;
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < design.design->X.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < design.design->X.cols(); ++k) row.push_back(design.design->X(i, k));
    rows.push_back(std::move(row));
  }
  j["X"] = std::move(rows);
  j["D"] = std::vector<double>(design.design->D.data(),
                               design.design->D.data() + design.design->D.size());
  j["A_true"] = design.A_true;
  j["beta_true"] =
      std::vector<double>(design.beta_true.data(), design.beta_true.data() + design.beta_true.size());
  j["n_mc"] = design.n_mc;
  j["n_boot"] = design.n_boot;
  j["seed"] = design.seed;
  Json names = Json::array();
  for (MseEstimator e : design.mse_estimators) names.push_back(std::string(mse_estimator_name(e)));
  j["mse_estimators"] = std::move(names);
  j["bootstrap_areas"] = design.bootstrap_areas;
  j["include_true_a"] = design.include_true_a;
  return j.dump(2);
}

SimDesign resolve_sim_design(const RunConfig& cfg) {
  if (cfg.design.empty()) throw Error(ErrorCode::kInvalidArgument, "--design is required");
  LoadedDesign loaded = load_design(cfg.design);
  SimDesign& sd = loaded.design;
  if (cfg.seed) {
    sd.seed = *cfg.seed;
  } else if (!loaded.has_seed) {
    throw Error(ErrorCode::kInvalidArgument,
                "--seed is required: the design does not fix one and simulation is stochastic");
  }
  if (cfg.n_mc) sd.n_mc = *cfg.n_mc;
  if (cfg.boot_reps) sd.n_boot = *cfg.boot_reps;
  if (!cfg.mse_estimators.empty()) sd.mse_estimators = cfg.mse_estimators;
  sd.fit = cfg.fit;
  validate_sim_design(sd);
  return sd;
}

}  // namespace sae::cli
