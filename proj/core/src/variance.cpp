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

#include "sae/variance.hpp"

#include <cmath>

#include "sae/error.hpp"
#include "sae/likelihood.hpp"
#include "sae/mse.hpp"
#include "sae/parallel.hpp"

namespace sae {

namespace {

HyperEstimate run_fit(const FhDataset& data, std::optional<std::size_t> area, Adjustment variant,
                      VarianceMethod method, const FitConfig& cfg) {
  const ResolvedFitConfig rc = resolve(cfg, data);
  ObjectiveEvaluator objective(data, area, variant);
  const ScalarFunction df = [&objective](double A) { return objective.derivative(A); };
  const SearchResult r = maximize_on_interval(
      [&objective](double A) { return objective(A); }, 0.0, rc.a_max, rc.search, &df);
  if (!r.converged) {
    throw Error(ErrorCode::kOptimizationDidNotConverge,
                method_name(method) + " search exhausted max_iter before reaching abs_tol", area);
  }
  HyperEstimate out;
  out.method = method;
  out.area = area;
  out.converged = true;
  out.iterations = r.iterations;
  out.value = r.argmax;
  out.objective_at_opt = r.value;
  // The zero boundary is admissible for REML and the h_i0-only adjustment.
  if (variant != Adjustment::kMg && out.value < rc.search.abs_tol) {
    out.value = 0.0;
    out.objective_at_opt = objective(0.0);
  }
  return out;
}

void require_mg_dof(const FhDataset& data) {
  if (data.m() <= data.p() + 2) {
    throw Error(ErrorCode::kInsufficientDegreesOfFreedom, "MG estimator requires m > p + 2");
  }
}

void require_area(const FhDataset& data, std::size_t area) {
  if (area >= data.m()) throw Error(ErrorCode::kInvalidArgument, "area index out of range", area);
}

}  // namespace

HyperEstimate fit_reml(const FhDataset& data, const FitConfig& cfg) {
  return run_fit(data, std::nullopt, Adjustment::kNone, VarianceMethod::kReml, cfg);
}

HyperEstimate fit_mg(const FhDataset& data, std::size_t area, const FitConfig& cfg) {
  require_area(data, area);
  require_mg_dof(data);
  return run_fit(data, area, Adjustment::kMg, VarianceMethod::kMg, cfg);
}

std::vector<HyperEstimate> fit_mg_all(const FhDataset& data, const FitConfig& cfg) {
  require_mg_dof(data);
  std::vector<HyperEstimate> out(data.m());
  parallel_for(data.m(), [&](std::size_t i) { out[i] = fit_mg(data, i, cfg); });
  return out;
}

HyperEstimate fit_adjusted_h0(const FhDataset& data, std::size_t area, const FitConfig& cfg) {
  require_area(data, area);
  return run_fit(data, area, Adjustment::kH0Only, VarianceMethod::kAdjustedH0, cfg);
}

Vector values_of(const std::vector<HyperEstimate>& fits) {
  Vector v(static_cast<Eigen::Index>(fits.size()));
  for (std::size_t i = 0; i < fits.size(); ++i) v(static_cast<Eigen::Index>(i)) = fits[i].value;
  return v;
}

BalancedClosedForms balanced_closed_forms(const FhDataset& data) {
  if (!data.is_balanced()) {
    throw Error(ErrorCode::kNotBalanced, "closed forms require equal sampling variances");
  }
  require_mg_dof(data);
  const double m = static_cast<double>(data.m());
  const double p = static_cast<double>(data.p());
  BalancedClosedForms out;
  out.S = ols_residual_sum_of_squares(data);
  out.D = data.D()(0);
  out.a_unbiased = out.S / (m - p) - out.D;
  out.a_reml = std::max(0.0, out.a_unbiased);
  out.a_morris = out.S / (m - p - 2.0) - out.D;
  out.a_morris_plus =
      (out.S > (m - p - 2.0) * out.D) ? out.a_morris : 2.0 * out.D / (m - p - 2.0);
  out.b_unbiased = (m - p - 2.0) * out.D / out.S;
  out.b_plug = out.D / (out.D + out.a_unbiased);
  return out;
}

HyperEstimate fit_morris_balanced(const FhDataset& data) {
  const BalancedClosedForms cf = balanced_closed_forms(data);
  HyperEstimate out;
  out.method = VarianceMethod::kMorrisPlus;
  out.value = cf.a_morris_plus;
  out.converged = true;
  return out;
}

AsymptoticMoments asymptotic_bias_var(const FhDataset& data, double A_true, std::size_t area) {
  require_area(data, area);
  if (!(A_true > 0.0)) throw Error(ErrorCode::kInvalidArgument, "A_true must be positive");
  const Vector& D = data.D();
  const double tr = (1.0 / (D.array() + A_true).square()).sum();
  const double d_log_h =
      d_log_h_i0(A_true, D(static_cast<Eigen::Index>(area))) + d_log_h_plus(data, A_true);
  AsymptoticMoments out;
  out.variance = 2.0 / tr;
  out.bias = d_log_h * out.variance;
  out.mse = g_decomposition(data, A_true, area).total();
  return out;
}

}  // namespace sae
