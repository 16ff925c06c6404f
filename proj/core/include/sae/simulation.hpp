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

// Monte Carlo evaluation of the variance, shrinkage and MSE estimators under a
// fixed Fay-Herriot design.

#ifndef SAE_SIMULATION_HPP_
#define SAE_SIMULATION_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sae/dataset.hpp"
#include "sae/mse.hpp"
#include "sae/optimizer.hpp"

namespace sae {

struct SimDesign {
  std::string name;
  std::shared_ptr<const Design> design;
  double A_true = 0.0;
  Vector beta_true;
  int n_mc = 1000;
  int n_boot = 1000;
  std::uint64_t seed = 1;
  std::vector<MseEstimator> mse_estimators;
  // Areas for which bootstrap estimators are computed; empty means all.
  std::vector<std::size_t> bootstrap_areas;
  // Adds the oracle "TRUE" estimator (B at the true A) to the shrinkage rows.
  bool include_true_a = true;
  FitConfig fit;
  double max_drop_fraction = 0.01;
};

// Throws kInvalidArgument / kDimensionMismatch for an inconsistent design.
void validate_sim_design(const SimDesign& design);

// Built-in m = 15 design "surrogate": intercept plus one covariate
// x_i = frac((i + 1) * 0.6180339887498949), D log-spaced on [1.883, 31.694],
// A = 15.94, beta = (10, 2). Covariates and beta are synthetic.
SimDesign surrogate_design();

// Balanced design with an intercept only: m areas, D_i = D, beta = (0).
SimDesign balanced_design(std::size_t m, double A, double D);

struct SimDraw {
  Vector y;
  Vector theta;
};

// theta_i = x_i' beta + v_i, y_i = theta_i + e_i from stream
// (kSimulate, replicate): all v_i are drawn first, then all e_i.
SimDraw simulate_fh(const SimDesign& design, std::uint64_t replicate);

struct RbRrmse {
  double rb_percent = 0.0;
  double rrmse_percent = 0.0;
};

// rb = 100 mean(est - truth) / truth, rrmse = 100 sqrt(mean((est - truth)^2)) / truth.
// Throws kZeroTruth, or kInvalidArgument for fewer than two estimates.
RbRrmse rb_rrmse(std::span<const double> estimates, double truth);

struct MetricRow {
  std::size_t area = 0;
  std::string area_id;
  // "A", "B", "EBLUP_MSE", "MSE[RE]" (against the empirical MSE of EBLUP-RE)
  // or "MSE[HL]" (against EBLUP-HL). EBLUP_MSE rows have estimators RE, HL,
  // BLUP and the paired difference HL-RE.
  std::string target;
  std::string estimator;
  double truth = 0.0;  // true A or B_i, or the empirical MSE being estimated
  double value = 0.0;  // mean of the estimator over replicates
  double rb_percent = 0.0;
  double rrmse_percent = 0.0;
  // Monte Carlo standard error of rb_percent; for EBLUP_MSE rows, of value.
  // NaN when fewer than two replicates were kept.
  double mc_standard_error = 0.0;
  int n = 0;
};

struct MetricTable {
  std::string design_name;
  std::uint64_t seed = 0;
  int n_mc = 0;
  int n_kept = 0;
  int n_dropped = 0;
  double reml_zero_fraction = 0.0;
  std::vector<MetricRow> rows;

  const MetricRow* find(std::size_t area, std::string_view target,
                        std::string_view estimator) const;
};

// Replicates run concurrently; results depend only on the design (including
// its seed), not on the number of worker threads.
MetricTable run_monte_carlo(const SimDesign& design);

}  // namespace sae

#endif  // SAE_SIMULATION_HPP_
