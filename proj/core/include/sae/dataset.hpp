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

// Fay-Herriot area-level model: y_i = x_i'beta + v_i + e_i with
// v_i ~ N(0, A) and e_i ~ N(0, D_i), D_i known.

#ifndef SAE_DATASET_HPP_
#define SAE_DATASET_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sae {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Relative tolerance on the smallest singular value (or triangular pivot)
// versus the largest, for both X and the weighted normal equations.
inline constexpr double kRankTolerance = 1e-10;

// Unvalidated input. Empty `area_ids` are replaced by "1".."m".
struct RawDataset {
  std::vector<std::string> area_ids;
  Vector y;
  Matrix X;
  Vector D;
};

// The covariates and sampling variances; shared between datasets that differ
// only in y (bootstrap and simulation replicates).
struct Design {
  std::vector<std::string> area_ids;
  Matrix X;
  Vector D;
};

class FhDataset {
 public:
  std::size_t m() const { return static_cast<std::size_t>(y_.size()); }
  std::size_t p() const { return static_cast<std::size_t>(design_->X.cols()); }

  const Vector& y() const { return y_; }
  const Matrix& X() const { return design_->X; }
  const Vector& D() const { return design_->D; }
  const std::vector<std::string>& area_ids() const {
    return design_->area_ids;
  }
  const std::shared_ptr<const Design>& design() const { return design_; }

  // Same design, new response. Only checks length and finiteness of `y`.
  FhDataset with_y(Vector y) const;

  // True when every D_i equals D_0 within `rel_tol`.
  bool is_balanced(double rel_tol = 1e-12) const;

 private:
  friend FhDataset validate_dataset(RawDataset raw);
  friend FhDataset make_dataset(std::shared_ptr<const Design> design,
                                Vector y);
  FhDataset(std::shared_ptr<const Design> design, Vector y)
      : design_(std::move(design)), y_(std::move(y)) {}

  std::shared_ptr<const Design> design_;
  Vector y_;
};

// Checks dimensions, finiteness, D_i > 0, m > p and rank(X) = p (via SVD).
// Throws sae::Error with code kDimensionMismatch, kNonFiniteInput,
// kNonpositiveSamplingVariance, kRankDeficientX or
// kInsufficientDegreesOfFreedom. Area-local failures carry the area index.
FhDataset validate_dataset(RawDataset raw);

// Validates X and D once; `y` must match the design's length.
std::shared_ptr<const Design> validate_design(std::vector<std::string> area_ids,
                                              Matrix X, Vector D);
FhDataset make_dataset(std::shared_ptr<const Design> design, Vector y);

enum class VarianceMethod { kReml, kMg, kAdjustedH0, kMorrisPlus, kUnbiased, kFixed };

std::string method_name(VarianceMethod method);

// A fitted model variance A with its provenance.
struct HyperEstimate {
  double value = 0.0;
  VarianceMethod method = VarianceMethod::kReml;
  std::optional<std::size_t> area;  // set for kMg and kAdjustedH0
  bool converged = false;
  double objective_at_opt = 0.0;
  int iterations = 0;
};

struct ShrinkageVector {
  Vector B;
  Vector A_used;
};

struct EblupResult {
  Vector theta_hat;
  Vector beta_hat;
  ShrinkageVector shrinkage;
  std::string variance_source;
};

// EBLUP where area i uses its own common-A fit theta_i^BLUP(A_i): both the
// shrinkage weight and the GLS regression use A_i. `synthetic_i` is
// x_i' beta_hat(A_i).
struct AreaSpecificEblup {
  Vector theta_hat;
  Vector synthetic;
  ShrinkageVector shrinkage;
  std::string variance_source;
};

// D / (A + D).
inline double shrinkage(double A, double D) { return D / (A + D); }
ShrinkageVector shrinkage(const FhDataset& data, const Vector& A_per_area);

// Weighted least squares with weights 1 / (A_i + D_i), computed through a
// Householder QR of the row-scaled design. Throws kSingularNormalEquations.
Vector gls_beta(const FhDataset& data, const Vector& A_per_area);
Vector gls_beta(const FhDataset& data, double A);

// theta_i = (1 - B_i) y_i + B_i x_i' beta_hat, with beta_hat from gls_beta on
// the same A vector.
EblupResult eblup(const FhDataset& data, const Vector& A_per_area,
                  std::string variance_source = {});
EblupResult eblup(const FhDataset& data, double A,
                  std::string variance_source = {});

AreaSpecificEblup eblup_area_specific(const FhDataset& data,
                                      const Vector& A_per_area,
                                      std::string variance_source = {});

// Broadcasts a scalar A to every area.
Vector broadcast(const FhDataset& data, double A);

}  // namespace sae

#endif  // SAE_DATASET_HPP_
