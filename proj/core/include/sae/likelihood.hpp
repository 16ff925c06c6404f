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

// Residual log-likelihood of the model variance A and the adjustment factors
// used by the adjusted maximum-likelihood estimators. Everything is in log
// space; zero-valued objectives are represented by -infinity.

#ifndef SAE_LIKELIHOOD_HPP_
#define SAE_LIKELIHOOD_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

#include "sae/dataset.hpp"
#include "sae/gls.hpp"

namespace sae {

inline constexpr double kNegativeInfinity = -std::numeric_limits<double>::infinity();

enum class Adjustment {
  kNone,     // plain residual likelihood (REML)
  kH0Only,   // h_i0(A) = A + D_i
  kMg,       // h_+(A) * h_i0(A)
};

struct ReEvaluation {
  double A = 0.0;
  double log_lre = 0.0;
  double log_h_i0 = 0.0;
  double log_h_plus = 0.0;
  double log_objective = 0.0;
};

// -1/2 log|X'V^-1 X| - 1/2 log|V| - 1/2 y'Py, additive constant dropped.
double log_residual_likelihood(const FhDataset& data, double A);

// log(A + D_i).
inline double log_h_i0(double A, double D_i) { return std::log(A + D_i); }
inline double d_log_h_i0(double A, double D_i) { return 1.0 / (A + D_i); }

// log h_+(A) with h_+(A) = [arctan(sum_j A / (A + D_j))]^(1/m).
// Returns -infinity at A = 0.
double log_h_plus(const FhDataset& data, double A);
// d/dA log h_+(A); +infinity at A = 0.
double d_log_h_plus(const FhDataset& data, double A);

// log h_i(A) + log L_RE(A) for the chosen adjustment. `area` is required for
// kH0Only and kMg.
double adjusted_log_objective(const FhDataset& data, std::size_t area, double A,
                              Adjustment variant);

ReEvaluation evaluate_objective(const FhDataset& data, std::optional<std::size_t> area,
                                double A, Adjustment variant);

// d/dA log L_RE(A).
double d_log_residual_likelihood(const FhDataset& data, double A);

// Ordinary least-squares residual sum of squares y'(I - X(X'X)^-1 X')y.
double ols_residual_sum_of_squares(const FhDataset& data);

// Repeated evaluation of one objective at many A values, reusing a GLS
// workspace. Not thread-safe; create one per thread.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const FhDataset& data, std::optional<std::size_t> area,
                     Adjustment variant);

  double operator()(double A);
  ReEvaluation evaluate(double A);
  // d/dA of log_objective; +infinity at A = 0 for kMg.
  double derivative(double A);

  const FhDataset& data() const { return *data_; }

 private:
  const FhDataset* data_;
  std::optional<std::size_t> area_;
  Adjustment variant_;
  GlsSolver solver_;
};

}  // namespace sae

#endif  // SAE_LIKELIHOOD_HPP_
