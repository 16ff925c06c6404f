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

#include "sae/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sae/cli/csv_io.hpp"
#include "sae/error.hpp"
#include "sae/variance.hpp"

namespace sae::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json fit_config_json(const RunConfig& cfg, const FhDataset& data) {
  const ResolvedFitConfig rc = resolve(cfg.fit, data);
  Json j;
  j["a_max"] = rc.a_max;
  j["abs_tol"] = rc.search.abs_tol;
  j["grid_points"] = rc.search.grid_points;
  j["max_iter"] = rc.search.max_iter;
  return j;
}

Json dataset_json(const FhDataset& data) {
  Json j;
  j["m"] = data.m();
  j["p"] = data.p();
  j["balanced"] = data.is_balanced();
  j["fingerprint"] = hex64(dataset_fingerprint(data));
  return j;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text, Artifacts& written) {
  std::ofstream out = open_output(path);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path.string() + "'");
  written.push_back(path);
}

void prepare_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create output directory '" + cfg.output_dir.string() + "': " + ec.message());
  }
}

std::string csv_number(double v) { return format_double(v); }

std::vector<MseEstimator> selected_estimators(const RunConfig& cfg) {
  if (!cfg.mse_estimators.empty()) return cfg.mse_estimators;
  return {std::begin(kAllMseEstimators), std::end(kAllMseEstimators)};
}

}  // namespace

std::string error_json(const std::string& code, const std::string& message,
                       const std::optional<std::size_t>& index) {
  Json e;
  e["code"] = code;
  e["message"] = message;
  if (index) e["index"] = *index;
  Json j;
  j["error"] = std::move(e);
  return j.dump();
}

Artifacts cmd_fit(const RunConfig& cfg) {
  validate_run_config(cfg);
  const FhDataset data = load_input(cfg);
  const HyperEstimate reml = fit_reml(data, cfg.fit);
  const bool mg_available = data.m() > data.p() + 2;
  std::vector<HyperEstimate> mg;
  if (mg_available) mg = fit_mg_all(data, cfg.fit);
  const EblupResult re = eblup(data, reml.value, "REML");
  std::optional<AreaSpecificEblup> hl;
  Vector a_mg;
  if (mg_available) {
    a_mg = values_of(mg);
    hl = eblup_area_specific(data, a_mg, "MG");
  }
  prepare_output_dir(cfg);
  Artifacts written;
  const auto m = static_cast<Eigen::Index>(data.m());
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  auto at = [](const std::optional<AreaSpecificEblup>& h, auto pick, Eigen::Index i) {
    return h ? pick(*h)(i) : kNaN;
  };

  if (cfg.write_json) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "fit";
    Json c;
    c["input"] = cfg.input;
    c["intercept"] = cfg.intercept;
    c["fit"] = fit_config_json(cfg, data);
    j["config"] = std::move(c);
    j["dataset"] = dataset_json(data);
    Json r;
    r["A"] = reml.value;
    r["converged"] = reml.converged;
    r["log_objective"] = number_or_null(reml.objective_at_opt);
    r["beta"] = std::vector<double>(re.beta_hat.data(), re.beta_hat.data() + re.beta_hat.size());
    j["reml"] = std::move(r);
    j["mg_available"] = mg_available;
    Json areas = Json::array();
    for (Eigen::Index i = 0; i < m; ++i) {
      Json a;
      a["area_id"] = data.area_ids()[static_cast<std::size_t>(i)];
      a["y"] = data.y()(i);
      a["D"] = data.D()(i);
      a["A_RE"] = reml.value;
      a["A_MG"] = mg_available ? Json(a_mg(i)) : Json(nullptr);
      a["B_RE"] = re.shrinkage.B(i);
      a["B_HL"] = number_or_null(at(hl, [](const AreaSpecificEblup& h) { return h.shrinkage.B; }, i));
      a["EBLUP_RE"] = re.theta_hat(i);
      a["EBLUP_HL"] = number_or_null(at(hl, [](const AreaSpecificEblup& h) { return h.theta_hat; }, i));
      areas.push_back(std::move(a));
    }
    j["areas"] = std::move(areas);
    write_text(cfg.output_dir / "estimates.json", j.dump(2) + "\n", written);
  }
  if (cfg.write_csv) {
    std::ostringstream s;
    s << "area_id,y,D,A_RE,A_MG,B_RE,B_HL,EBLUP_RE,EBLUP_HL\n";
    for (Eigen::Index i = 0; i < m; ++i) {
      s << csv_field(data.area_ids()[static_cast<std::size_t>(i)]) << ',' << csv_number(data.y()(i))
        << ',' << csv_number(data.D()(i)) << ',' << csv_number(reml.value) << ','
        << csv_number(mg_available ? a_mg(i) : kNaN) << ',' << csv_number(re.shrinkage.B(i)) << ','
        << csv_number(at(hl, [](const AreaSpecificEblup& h) { return h.shrinkage.B; }, i)) << ','
        << csv_number(re.theta_hat(i)) << ','
        << csv_number(at(hl, [](const AreaSpecificEblup& h) { return h.theta_hat; }, i)) << '\n';
    }
    write_text(cfg.output_dir / "estimates.csv", s.str(), written);
  }
  return written;
}

Artifacts cmd_mse(const RunConfig& cfg) {
  validate_run_config(cfg);
  const FhDataset data = load_input(cfg);
  const std::vector<MseEstimator> estimators = selected_estimators(cfg);
  MseOptions options;
  options.replicates = cfg.boot_reps.value_or(1000);
  options.seed = cfg.seed;
  options.fit = cfg.fit;
  const MseReport report = compute_mse_report(data, estimators, options);
  prepare_output_dir(cfg);
  Artifacts written;
  const auto m = static_cast<Eigen::Index>(data.m());

  if (cfg.write_json) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "mse";
    Json c;
    c["input"] = cfg.input;
    c["intercept"] = cfg.intercept;
    Json names = Json::array();
    for (MseEstimator e : estimators) names.push_back(std::string(mse_estimator_name(e)));
    c["estimators"] = std::move(names);
    c["boot_reps"] = options.replicates;
    c["seed"] = cfg.seed ? Json(*cfg.seed) : Json(nullptr);
    c["fit"] = fit_config_json(cfg, data);
    j["config"] = std::move(c);
    j["dataset"] = dataset_json(data);
    j["A_RE"] = report.fits.reml.value;
    Json boot = Json::object();
    for (const auto& [e, meta] : report.bootstrap) {
      Json b;
      b["replicates"] = meta.replicates;
      b["seed"] = meta.seed;
      b["fit_method"] = meta.fit_method;
      b["dropped"] = meta.dropped;
      boot[std::string(mse_estimator_name(e))] = std::move(b);
    }
    j["bootstrap"] = std::move(boot);
    Json areas = Json::array();
    for (Eigen::Index i = 0; i < m; ++i) {
      Json a;
      a["area_id"] = data.area_ids()[static_cast<std::size_t>(i)];
      for (MseEstimator e : estimators) {
        a[std::string(mse_estimator_name(e))] = number_or_null(report.values.at(e)(i));
      }
      areas.push_back(std::move(a));
    }
    j["areas"] = std::move(areas);
    write_text(cfg.output_dir / "mse.json", j.dump(2) + "\n", written);
  }
  if (cfg.write_csv) {
    std::ostringstream s;
    s << "area_id";
    for (MseEstimator e : estimators) s << ',' << mse_estimator_name(e);
    s << '\n';
    for (Eigen::Index i = 0; i < m; ++i) {
      s << csv_field(data.area_ids()[static_cast<std::size_t>(i)]);
      for (MseEstimator e : estimators) s << ',' << csv_number(report.values.at(e)(i));
      s << '\n';
    }
    write_text(cfg.output_dir / "mse.csv", s.str(), written);
  }
  return written;
}

std::string metrics_json(const MetricTable& table, const SimDesign& design) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "simulate";
  Json c;
  c["design"] = Json::parse(design_to_json(design));
  Json fit;
  fit["a_max"] = design.fit.a_max ? Json(*design.fit.a_max) : Json("auto");
  fit["abs_tol"] = design.fit.abs_tol ? Json(*design.fit.abs_tol) : Json("auto");
  fit["grid_points"] = design.fit.grid_points;
  fit["max_iter"] = design.fit.max_iter;
  c["fit"] = std::move(fit);
  j["config"] = std::move(c);
  Json s;
  s["design_name"] = table.design_name;
  s["seed"] = table.seed;
  s["n_mc"] = table.n_mc;
  s["n_kept"] = table.n_kept;
  s["n_dropped"] = table.n_dropped;
  s["reml_zero_fraction"] = table.reml_zero_fraction;
  s["mc_standard_error_defined"] = table.n_kept >= 2;
  j["summary"] = std::move(s);
  Json rows = Json::array();
  for (const MetricRow& r : table.rows) {
    Json row;
    row["area"] = r.area;
    row["area_id"] = r.area_id;
    row["target"] = r.target;
    row["estimator"] = r.estimator;
    row["truth"] = number_or_null(r.truth);
    row["value"] = number_or_null(r.value);
    row["rb_percent"] = number_or_null(r.rb_percent);
    row["rrmse_percent"] = number_or_null(r.rrmse_percent);
    row["mc_standard_error"] = number_or_null(r.mc_standard_error);
    row["n"] = r.n;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string metrics_csv(const MetricTable& table) {
  std::ostringstream s;
  s << "area_id,target,estimator,truth,value,rb_percent,rrmse_percent,mc_standard_error,n\n";
  for (const MetricRow& r : table.rows) {
    s << csv_field(r.area_id) << ',' << csv_field(r.target) << ',' << csv_field(r.estimator)
      << ',' << csv_number(r.truth) << ',' << csv_number(r.value) << ','
      << csv_number(r.rb_percent) << ',' << csv_number(r.rrmse_percent) << ','
      << csv_number(r.mc_standard_error) << ',' << r.n << '\n';
  }
  return s.str();
}

std::string plot_data_csv(const MetricTable& table) {
  std::ostringstream s;
  s << "area,metric,estimator,value\n";
  for (const MetricRow& r : table.rows) {
    const std::string id = csv_field(r.area_id);
    const std::string est = csv_field(r.estimator);
    if (r.target == "EBLUP_MSE") {
      s << id << ",EBLUP_MSE," << est << ',' << csv_number(r.value) << '\n';
      continue;
    }
    s << id << ',' << csv_field(r.target + ".RB") << ',' << est << ','
      << csv_number(r.rb_percent) << '\n';
    s << id << ',' << csv_field(r.target + ".RRMSE") << ',' << est << ','
      << csv_number(r.rrmse_percent) << '\n';
  }
  return s.str();
}

Artifacts cmd_simulate(const RunConfig& cfg) {
  validate_run_config(cfg);
  const SimDesign design = resolve_sim_design(cfg);
  const MetricTable table = run_monte_carlo(design);
  prepare_output_dir(cfg);
  Artifacts written;
  if (cfg.write_json) write_text(cfg.output_dir / "metrics.json", metrics_json(table, design), written);
  if (cfg.write_csv) {
    write_text(cfg.output_dir / "metrics.csv", metrics_csv(table), written);
    write_text(cfg.output_dir / "plot_data.csv", plot_data_csv(table), written);
  }
  return written;
}

void cmd_validate(const RunConfig& cfg, std::ostream& out) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "validate";
  if (!cfg.design.empty()) {
    LoadedDesign d = load_design(cfg.design);
    j["design"] = d.design.name;
    j["m"] = d.design.design->X.rows();
    j["p"] = d.design.design->X.cols();
    j["seed_fixed"] = d.has_seed;
  }
  if (!cfg.input.empty()) {
    const FhDataset data = load_input(cfg);
    j["input"] = cfg.input;
    j["dataset"] = dataset_json(data);
    j["mg_available"] = data.m() > data.p() + 2;
  }
  if (cfg.design.empty() && cfg.input.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "validate needs --input or --design");
  }
  j["ok"] = true;
  out << j.dump(2) << '\n';
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fay-Herriot small area estimation with adjusted maximum likelihood", "sae_fh"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string formats = "csv,json";
  std::string estimators;
  std::string output_dir = ".";
  std::optional<double> a_max;
  std::optional<double> abs_tol;

  auto add_io = [&](CLI::App* sub, bool dataset) {
    if (dataset) {
      sub->add_option("--input", cfg.input,
                      "area-level CSV (area_id,y,d,x1..xp) or builtin:balanced4, builtin:surrogate15");
      sub->add_flag("--intercept", cfg.intercept, "prepend a column of ones to the covariates");
    }
    sub->add_option("--output-dir", output_dir, "directory for the written artifacts");
    sub->add_option("--format", formats, "csv, json or csv,json");
    sub->add_option("--a-max", a_max, "upper end of the search interval for A");
    sub->add_option("--abs-tol", abs_tol, "absolute tolerance of the search for A");
    sub->add_option("--grid-points", cfg.fit.grid_points, "grid points of the bracketing scan");
    sub->add_option("--max-iter", cfg.fit.max_iter, "golden-section iteration cap");
  };

  CLI::App* fit = app.add_subcommand("fit", "REML and MG fits, shrinkage factors and EBLUPs");
  add_io(fit, true);
  fit->get_option("--input")->required();

  CLI::App* mse = app.add_subcommand("mse", "MSE estimators for the EBLUPs");
  add_io(mse, true);
  mse->get_option("--input")->required();
  mse->add_option("--estimators", estimators,
                  "comma-separated: naive.RE, DL.RE, PB.RE, BL.RE, Taylor.HL, PB.HL, all");
  mse->add_option("--boot-reps", cfg.boot_reps, "bootstrap replicates (default 1000)");
  mse->add_option("--seed", cfg.seed, "bootstrap seed");

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo study of the estimators");
  add_io(sim, false);
  sim->add_option("--design", cfg.design, "built-in design name or design JSON file")->required();
  sim->add_option("--seed", cfg.seed, "simulation seed");
  sim->add_option("--n-mc", cfg.n_mc, "Monte Carlo replicates");
  sim->add_option("--boot-reps", cfg.boot_reps, "bootstrap replicates per Monte Carlo replicate");
  sim->add_option("--estimators", estimators, "MSE estimators to evaluate");

  CLI::App* val = app.add_subcommand("validate", "check a dataset or design and print a summary");
  val->add_option("--input", cfg.input, "area-level CSV or builtin:NAME");
  val->add_flag("--intercept", cfg.intercept, "prepend a column of ones to the covariates");
  val->add_option("--design", cfg.design, "built-in design name or design JSON file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_json("UsageError", e.what()) << '\n';
    return 2;
  }

  try {
    set_formats(cfg, formats);
    cfg.output_dir = output_dir;
    cfg.fit.a_max = a_max;
    cfg.fit.abs_tol = abs_tol;
    if (!estimators.empty()) cfg.mse_estimators = parse_estimator_list(estimators);
    Artifacts written;
    if (fit->parsed()) {
      cfg.command = "fit";
      written = cmd_fit(cfg);
    } else if (mse->parsed()) {
      cfg.command = "mse";
      written = cmd_mse(cfg);
    } else if (sim->parsed()) {
      cfg.command = "simulate";
      written = cmd_simulate(cfg);
    } else {
      cfg.command = "validate";
      cmd_validate(cfg, out);
    }
    for (const auto& p : written) out << p.string() << '\n';
  } catch (const Error& e) {
    err << error_json(std::string(error_code_name(e.code())), e.what(), e.index()) << '\n';
    return e.code() == ErrorCode::kInvalidArgument ? 2 : 1;
  } catch (const std::exception& e) {
    err << error_json("InternalError", e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sae::cli
