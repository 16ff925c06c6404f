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

#include "sae/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/SVD>

#include "sae/error.hpp"
#include "sae/gls.hpp"

namespace sae {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kNonpositiveSamplingVariance: return "NonpositiveSamplingVariance";
    case ErrorCode::kRankDeficientX: return "RankDeficientX";
    case ErrorCode::kSingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::kInsufficientDegreesOfFreedom: return "InsufficientDegreesOfFreedom";
    case ErrorCode::kDegreesOfFreedomTooSmall: return "DegreesOfFreedomTooSmall";
    case ErrorCode::kNotBalanced: return "NotBalanced";
    case ErrorCode::kOptimizationDidNotConverge: return "OptimizationDidNotConverge";
    case ErrorCode::kNoFiniteValues: return "NoFiniteValues";
    case ErrorCode::kMaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::kNoSignChange: return "NoSignChange";
    case ErrorCode::kMultipleSignChanges: return "MultipleSignChanges";
    case ErrorCode::kTooManyDroppedReplicates: return "TooManyDroppedReplicates";
    case ErrorCode::kZeroTruth: return "ZeroTruth";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

std::string method_name(VarianceMethod method) {
  switch (method) {
    case VarianceMethod::kReml: return "REML";
    case VarianceMethod::kMg: return "MG";
    case VarianceMethod::kAdjustedH0: return "AdjustedH0";
    case VarianceMethod::kMorrisPlus: return "MorrisPlus";
    case VarianceMethod::kUnbiased: return "Unbiased";
    case VarianceMethod::kFixed: return "Fixed";
  }
  return "Unknown";
}

namespace {

void check_finite_vector(const Vector& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) {
      throw Error(ErrorCode::kNonFiniteInput,
                  std::string("non-finite value in ") + what,
                  static_cast<std::size_t>(i));
    }
  }
}

}  // namespace

std::shared_ptr<const Design> validate_design(std::vector<std::string> area_ids,
                                              Matrix X, Vector D) {
  const Eigen::Index m = X.rows();
  const Eigen::Index p = X.cols();
  if (m < 1 || p < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "X must have at least one row and one column");
  }
  if (D.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "D length does not match rows of X");
  }
  if (!area_ids.empty() && static_cast<Eigen::Index>(area_ids.size()) != m) {
    throw Error(ErrorCode::kDimensionMismatch, "area_ids length does not match rows of X");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!std::isfinite(X(i, j))) {
        throw Error(ErrorCode::kNonFiniteInput, "non-finite value in X",
                    static_cast<std::size_t>(i));
      }
    }
  }
  check_finite_vector(D, "D");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(D(i) > 0.0)) {
      throw Error(ErrorCode::kNonpositiveSamplingVariance,
                  "sampling variance must be strictly positive",
                  static_cast<std::size_t>(i));
    }
  }
  if (m <= p) {
    throw Error(ErrorCode::kInsufficientDegreesOfFreedom,
                "residual likelihood needs more areas than covariates (m > p)");
  }
  Eigen::JacobiSVD<Matrix> svd(X);
  const Vector& sv = svd.singularValues();
  if (!(sv(p - 1) > kRankTolerance * sv(0))) {
    throw Error(ErrorCode::kRankDeficientX, "X does not have full column rank");
  }
  if (area_ids.empty()) {
    area_ids.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) area_ids.push_back(std::to_string(i + 1));
  }
  return std::make_shared<const Design>(
      Design{std::move(area_ids), std::move(X), std::move(D)});
}

FhDataset make_dataset(std::shared_ptr<const Design> design, Vector y) {
  if (y.size() != design->X.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "y length does not match rows of X");
  }
  check_finite_vector(y, "y");
  return FhDataset(std::move(design), std::move(y));
}

FhDataset validate_dataset(RawDataset raw) {
  if (raw.y.size() != raw.X.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "y length does not match rows of X");
  }
  check_finite_vector(raw.y, "y");
  auto design = validate_design(std::move(raw.area_ids), std::move(raw.X), std::move(raw.D));
  return FhDataset(std::move(design), std::move(raw.y));
}

FhDataset FhDataset::with_y(Vector y) const { return make_dataset(design_, std::move(y)); }

bool FhDataset::is_balanced(double rel_tol) const {
  const Vector& d = D();
  const double d0 = d(0);
  for (Eigen::Index i = 1; i < d.size(); ++i) {
    if (std::abs(d(i) - d0) > rel_tol * d0) return false;
  }
  return true;
}

Vector broadcast(const FhDataset& data, double A) {
  return Vector::Constant(static_cast<Eigen::Index>(data.m()), A);
}

ShrinkageVector shrinkage(const FhDataset& data, const Vector& A_per_area) {
  ShrinkageVector out;
  out.A_used = A_per_area;
  out.B = data.D().array() / (A_per_area.array() + data.D().array());
  return out;
}

Vector gls_beta(const FhDataset& data, const Vector& A_per_area) {
  GlsSolver solver(data);
  solver.factor(A_per_area);
  return solver.beta();
}

Vector gls_beta(const FhDataset& data, double A) {
  GlsSolver solver(data);
  solver.factor(A);
  return solver.beta();
}

EblupResult eblup(const FhDataset& data, const Vector& A_per_area, std::string variance_source) {
  if (A_per_area.size() != static_cast<Eigen::Index>(data.m())) {
    throw Error(ErrorCode::kDimensionMismatch, "A vector length does not match m");
  }
  EblupResult out;
  out.beta_hat = gls_beta(data, A_per_area);
  out.shrinkage = shrinkage(data, A_per_area);
  const Vector synthetic = data.X() * out.beta_hat;
  const Vector& B = out.shrinkage.B;
  out.theta_hat = (1.0 - B.array()) * data.y().array() + B.array() * synthetic.array();
  out.variance_source = std::move(variance_source);
  return out;
}

EblupResult eblup(const FhDataset& data, double A, std::string variance_source) {
  return eblup(data, broadcast(data, A), std::move(variance_source));
}

AreaSpecificEblup eblup_area_specific(const FhDataset& data, const Vector& A_per_area,
                                      std::string variance_source) {
  const auto m = static_cast<Eigen::Index>(data.m());
  if (A_per_area.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "A vector length does not match m");
  }
  AreaSpecificEblup out;
  out.theta_hat.resize(m);
  out.synthetic.resize(m);
  out.shrinkage = shrinkage(data, A_per_area);
  GlsSolver solver(data);
  for (Eigen::Index i = 0; i < m; ++i) {
    solver.factor(A_per_area(i));
    const Vector beta = solver.beta();
    out.synthetic(i) = data.X().row(i).dot(beta);
    const double b = out.shrinkage.B(i);
    out.theta_hat(i) = (1.0 - b) * data.y()(i) + b * out.synthetic(i);
  }
  out.variance_source = std::move(variance_source);
  return out;
}

// ---------------------------------------------------------------------------
// GlsSolver

GlsSolver::GlsSolver(const FhDataset& data)
    : data_(&data),
      total_var_(static_cast<Eigen::Index>(data.m())),
      augmented_(static_cast<Eigen::Index>(data.m()), static_cast<Eigen::Index>(data.p() + 1)),
      qr_(static_cast<Eigen::Index>(data.m()), static_cast<Eigen::Index>(data.p() + 1)) {}

void GlsSolver::factor(double A) {
  total_var_ = data_->D().array() + A;
  factor_weights();
}

void GlsSolver::factor(const Vector& A_per_area) {
  if (A_per_area.size() != total_var_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "A vector length does not match m");
  }
  total_var_ = data_->D() + A_per_area;
  factor_weights();
}

void GlsSolver::factor_weights() {
  const Eigen::Index m = total_var_.size();
  const Eigen::Index p = data_->X().cols();
  const Matrix& X = data_->X();
  const Vector& y = data_->y();
  log_det_v_ = 0.0;
  trace_v_inv_sq_ = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = total_var_(i);
    const double s = 1.0 / std::sqrt(v);
    augmented_.row(i).head(p) = X.row(i) * s;
    augmented_(i, p) = y(i) * s;
    log_det_v_ += std::log(v);
    trace_v_inv_sq_ += 1.0 / (v * v);
  }
  qr_.compute(augmented_);
  const Matrix& r = qr_.matrixQR();
  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < p; ++k) {
    const double a = std::abs(r(k, k));
    max_pivot = std::max(max_pivot, a);
    min_pivot = std::min(min_pivot, a);
  }
  if (!(min_pivot > kRankTolerance * max_pivot)) {
    throw Error(ErrorCode::kSingularNormalEquations,
                "weighted normal equations are numerically singular");
  }
}

double GlsSolver::log_det_gram() const {
  const Matrix& r = qr_.matrixQR();
  double s = 0.0;
  for (Eigen::Index k = 0; k < r.cols() - 1; ++k) s += std::log(std::abs(r(k, k)));
  return 2.0 * s;
}

double GlsSolver::log_det_v() const { return log_det_v_; }

double GlsSolver::weighted_rss() const {
  const Matrix& r = qr_.matrixQR();
  const Eigen::Index p = r.cols() - 1;
  const double t = r(p, p);
  return t * t;
}

double GlsSolver::trace_v_inv_sq() const { return trace_v_inv_sq_; }

Vector GlsSolver::beta() const {
  const Matrix& r = qr_.matrixQR();
  const Eigen::Index p = r.cols() - 1;
  return r.topLeftCorner(p, p).triangularView<Eigen::Upper>().solve(r.col(p).head(p));
}

double GlsSolver::leverage(std::size_t i) const {
  const Matrix& r = qr_.matrixQR();
  const Eigen::Index p = r.cols() - 1;
  // x'(R'R)^-1 x = |R^-T x|^2
  const Vector z = r.topLeftCorner(p, p)
                       .triangularView<Eigen::Upper>()
                       .transpose()
                       .solve(data_->X().row(static_cast<Eigen::Index>(i)).transpose());
  return z.squaredNorm();
}

double GlsSolver::score() const {
  const Matrix& r = qr_.matrixQR();
  const Eigen::Index p = r.cols() - 1;
  const Matrix& X = data_->X();
  const Matrix z = r.topLeftCorner(p, p)
                       .triangularView<Eigen::Upper>()
                       .transpose()
                       .solve(X.transpose());
  const Vector resid = data_->y() - X * beta();
  double trace_p = 0.0;
  double py_sq = 0.0;
  for (Eigen::Index i = 0; i < total_var_.size(); ++i) {
    const double w = 1.0 / total_var_(i);
    trace_p += w - w * w * z.col(i).squaredNorm();
    const double py = w * resid(i);
    py_sq += py * py;
  }
  return 0.5 * (py_sq - trace_p);
}

}  // namespace sae
