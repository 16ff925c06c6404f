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

// Estimators of the model variance A.
//
//   REML        argmax_{A >= 0} L_RE(A)
//   AdjustedH0  argmax_{A >= 0} (A + D_i) L_RE(A)
//   MG          argmax_{A >= 0} h_+(A) (A + D_i) L_RE(A)   (area specific)
//
// The MG objective vanishes at A = 0 and as A -> infinity when m > p + 2, so
// its maximizer is always interior and strictly positive.

#ifndef SAE_VARIANCE_HPP_
#define SAE_VARIANCE_HPP_

#include <cstddef>
#include <vector>

#include "sae/dataset.hpp"
#include "sae/optimizer.hpp"

namespace sae {

// Throws kOptimizationDidNotConverge when a refinement exhausts max_iter.
HyperEstimate fit_reml(const FhDataset& data, const FitConfig& cfg = {});

// Throws kInsufficientDegreesOfFreedom when m <= p + 2.
HyperEstimate fit_mg(const FhDataset& data, std::size_t area, const FitConfig& cfg = {});

// Element i equals fit_mg(data, i, cfg). Areas are fitted concurrently.
std::vector<HyperEstimate> fit_mg_all(const FhDataset& data, const FitConfig& cfg = {});

HyperEstimate fit_adjusted_h0(const FhDataset& data, std::size_t area, const FitConfig& cfg = {});

// Values of a vector of estimates, in order.
Vector values_of(const std::vector<HyperEstimate>& fits);

// Balanced-case (D_i = D) closed forms built on the OLS residual sum of
// squares S ~ (A + D) chi^2_{m-p}.
struct BalancedClosedForms {
  double S = 0.0;
  double D = 0.0;
  double a_unbiased = 0.0;   // S/(m-p) - D, may be negative
  double a_reml = 0.0;       // max(0, a_unbiased)
  double a_morris = 0.0;     // S/(m-p-2) - D, may be negative
  double a_morris_plus = 0.0;
  double b_unbiased = 0.0;   // (m-p-2) D / S
  double b_plug = 0.0;       // D / (D + a_unbiased)
};

// Throws kNotBalanced (relative tolerance 1e-12) or
// kInsufficientDegreesOfFreedom (m <= p + 2).
BalancedClosedForms balanced_closed_forms(const FhDataset& data);

// S/(m-p-2) - D when S > (m-p-2) D, else 2D/(m-p-2).
HyperEstimate fit_morris_balanced(const FhDataset& data);

struct AsymptoticMoments {
  double bias = 0.0;      // (d/dA log h~_i) * 2 / tr[V^-2]
  double variance = 0.0;  // E(A_hat - A)^2 ~ 2 / tr[V^-2]
  double mse = 0.0;       // g1 + g2 + g3 at A
};

// Large-m approximations for the MG estimator of area `area` at A_true > 0.
AsymptoticMoments asymptotic_bias_var(const FhDataset& data, double A_true, std::size_t area);

}  // namespace sae

#endif  // SAE_VARIANCE_HPP_
