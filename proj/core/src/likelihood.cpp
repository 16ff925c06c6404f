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

#include "sae/likelihood.hpp"

#include <cmath>
#include <limits>

#include "sae/error.hpp"

namespace sae {

namespace {

double log_lre_from(const GlsSolver& solver) {
  return -0.5 * (solver.log_det_gram() + solver.log_det_v() + solver.weighted_rss());
}

void require_area(const FhDataset& data, std::optional<std::size_t> area, Adjustment variant) {
  if (variant == Adjustment::kNone) return;
  if (!area || *area >= data.m()) {
    throw Error(ErrorCode::kInvalidArgument, "adjusted objective needs a valid area index");
  }
}

void require_nonnegative(double A) {
  if (!(A >= 0.0) || !std::isfinite(A)) {
    throw Error(ErrorCode::kInvalidArgument, "model variance must be finite and >= 0");
  }
}

}  // namespace

double log_residual_likelihood(const FhDataset& data, double A) {
  require_nonnegative(A);
  GlsSolver solver(data);
  solver.factor(A);
  return log_lre_from(solver);
}

double d_log_residual_likelihood(const FhDataset& data, double A) {
  require_nonnegative(A);
  GlsSolver solver(data);
  solver.factor(A);
  return solver.score();
}

double log_h_plus(const FhDataset& data, double A) {
  require_nonnegative(A);
  if (A == 0.0) return kNegativeInfinity;
  const Vector& D = data.D();
  double s = 0.0;
  for (Eigen::Index j = 0; j < D.size(); ++j) s += A / (A + D(j));
  return std::log(std::atan(s)) / static_cast<double>(data.m());
}

double d_log_h_plus(const FhDataset& data, double A) {
  require_nonnegative(A);
  if (A == 0.0) return std::numeric_limits<double>::infinity();
  const Vector& D = data.D();
  double s = 0.0;
  double ds = 0.0;
  for (Eigen::Index j = 0; j < D.size(); ++j) {
    const double v = A + D(j);
    s += A / v;
    ds += D(j) / (v * v);
  }
  return ds / (static_cast<double>(data.m()) * (1.0 + s * s) * std::atan(s));
}

ReEvaluation evaluate_objective(const FhDataset& data, std::optional<std::size_t> area,
                                double A, Adjustment variant) {
  ObjectiveEvaluator eval(data, area, variant);
  return eval.evaluate(A);
}

double adjusted_log_objective(const FhDataset& data, std::size_t area, double A,
                              Adjustment variant) {
  return evaluate_objective(data, area, A, variant).log_objective;
}

double ols_residual_sum_of_squares(const FhDataset& data) {
  // Unit weights: the last pivot of QR([X | y]) is the residual norm.
  Matrix augmented(static_cast<Eigen::Index>(data.m()), static_cast<Eigen::Index>(data.p() + 1));
  augmented << data.X(), data.y();
  Eigen::HouseholderQR<Matrix> qr(augmented);
  const double t = qr.matrixQR()(augmented.cols() - 1, augmented.cols() - 1);
  return t * t;
}

ObjectiveEvaluator::ObjectiveEvaluator(const FhDataset& data, std::optional<std::size_t> area,
                                       Adjustment variant)
    : data_(&data), area_(area), variant_(variant), solver_(data) {
  require_area(data, area, variant);
}

double ObjectiveEvaluator::operator()(double A) { return evaluate(A).log_objective; }

ReEvaluation ObjectiveEvaluator::evaluate(double A) {
  require_nonnegative(A);
  ReEvaluation out;
  out.A = A;
  if (variant_ == Adjustment::kMg) {
    out.log_h_plus = log_h_plus(*data_, A);
    if (out.log_h_plus == kNegativeInfinity) {
      out.log_objective = kNegativeInfinity;
      return out;
    }
  }
  solver_.factor(A);
  out.log_lre = log_lre_from(solver_);
  if (variant_ != Adjustment::kNone) {
    out.log_h_i0 = log_h_i0(A, data_->D()(static_cast<Eigen::Index>(*area_)));
  }
  out.log_objective = out.log_lre + out.log_h_i0 + out.log_h_plus;
  return out;
}

double ObjectiveEvaluator::derivative(double A) {
  require_nonnegative(A);
  if (variant_ == Adjustment::kMg && A == 0.0) return std::numeric_limits<double>::infinity();
  solver_.factor(A);
  double d = solver_.score();
  if (variant_ != Adjustment::kNone) {
    d += d_log_h_i0(A, data_->D()(static_cast<Eigen::Index>(*area_)));
  }
  if (variant_ == Adjustment::kMg) d += d_log_h_plus(*data_, A);
  return d;
}

}  // namespace sae
