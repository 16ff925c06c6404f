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

#ifndef SAE_GLS_HPP_
#define SAE_GLS_HPP_

#include <Eigen/Householder>
#include <Eigen/QR>

#include "sae/dataset.hpp"

namespace sae {

// Reusable weighted least-squares workspace over a fixed dataset.
//
// Factors the augmented, row-scaled matrix [W^1/2 X | W^1/2 y] with
// W = diag(1 / (A_i + D_i)). The leading p x p block of R is the Cholesky
// factor of X'V^-1 X and |R(p, p)| is the weighted residual norm, so
// y'Py = R(p, p)^2 without ever forming P.
//
// Not thread-safe: one instance per thread of work.
class GlsSolver {
 public:
  explicit GlsSolver(const FhDataset& data);

  // Factor at a common A or at a per-area vector. Throws
  // kSingularNormalEquations when the pivots of R fall below kRankTolerance
  // relative to the largest.
  void factor(double A);
  void factor(const Vector& A_per_area);

  // Valid after factor().
  double log_det_gram() const;    // log |X'V^-1 X|
  double log_det_v() const;       // log |V|
  double weighted_rss() const;    // y'Py
  double trace_v_inv_sq() const;  // tr[V^-2]
  Vector beta() const;
  // x_i'(X'V^-1 X)^-1 x_i.
  double leverage(std::size_t i) const;
  // d/dA log L_RE at a common A: -tr(P)/2 + y'P^2 y/2.
  double score() const;

 private:
  void factor_weights();

  const FhDataset* data_;
  Vector total_var_;
  Matrix augmented_;
  Eigen::HouseholderQR<Matrix> qr_;
  double log_det_v_ = 0.0;
  double trace_v_inv_sq_ = 0.0;
};

}  // namespace sae

#endif  // SAE_GLS_HPP_
