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

// Mean squared error of EBLUPs: the g1/g2/g3 second-order approximation and
// the six estimators
//
//   naive.RE   g1 + g2 at A_RE
//   DL.RE      g1 + g2 + 2 g3 at A_RE
//   PB.RE      single parametric bootstrap around A_RE
//   BL.RE      bias-corrected parametric bootstrap around A_RE (may be < 0)
//   Taylor.HL  g1 + g2 + g3 at A_i;MG
//   PB.HL      single parametric bootstrap around the A_j;MG vector

#ifndef SAE_MSE_HPP_
#define SAE_MSE_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sae/dataset.hpp"
#include "sae/optimizer.hpp"

namespace sae {

struct GDecomposition {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
  double A_used = 0.0;
  std::size_t area = 0;

  double total() const { return g1 + g2 + g3; }
};

// g1 = A D_i/(A + D_i)
// g2 = D_i^2 x_i'(X'V^-1 X)^-1 x_i / (A + D_i)^2
// g3 = 2 D_i^2 / ((A + D_i)^3 tr[V^-2])
GDecomposition g_decomposition(const FhDataset& data, double A, std::size_t area);
// All areas at one common A, sharing one factorization.
std::vector<GDecomposition> g_decomposition_all(const FhDataset& data, double A);

// The REML fit and the per-area MG fits of one dataset.
struct VarianceFits {
  HyperEstimate reml;
  std::vector<HyperEstimate> mg;
};

// fit_mg_all requires m > p + 2; with `with_mg = false` only REML is fitted.
VarianceFits fit_variances(const FhDataset& data, const FitConfig& cfg = {}, bool with_mg = true);

enum class TaylorVariant { kNaiveRe, kDlRe, kTaylorHl };

// Taylor-series estimators from precomputed fits (REML for the RE variants,
// fits.mg[area] for kTaylorHl).
double mse_taylor(const FhDataset& data, std::size_t area, TaylorVariant variant,
                  const VarianceFits& fits);

enum class BootstrapVariant { kPbRe, kBlRe, kPbHl };

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 0;
  // Mixed into every stream id; lets nested callers (simulation replicates)
  // draw independent bootstrap worlds from one seed.
  std::uint64_t context = 0;
  FitConfig fit;
  // Areas to report; empty means every area.
  std::vector<std::size_t> areas;
  // Dropping more than this fraction of replicates fails the estimate.
  double max_drop_fraction = 0.01;
};

struct BootstrapEstimate {
  BootstrapVariant variant = BootstrapVariant::kPbRe;
  std::vector<std::size_t> areas;
  Vector value;           // per reported area
  Vector standard_error;  // Monte Carlo standard error of `value`
  int replicates = 0;
  int dropped = 0;        // replicates whose re-fit failed after one retry
  std::uint64_t seed = 0;
};

// Parametric bootstrap. Replicate b draws, for every area j,
//   theta*_j = x_j' beta_fit + v*_j,  v*_j ~ N(0, A_fit,j)
//   y*_j     = theta*_j + e*_j,        e*_j ~ N(0, D_j)
// from stream (kBootstrap, context, b), re-fits the same estimator family on
// y*, and accumulates the squared error of the re-fitted EBLUP.
//
// A re-fit that fails is retried once with a 4x denser grid; a replicate that
// still fails is dropped and counted. Throws kTooManyDroppedReplicates when
// the drop fraction exceeds max_drop_fraction, kInsufficientDegreesOfFreedom
// for kPbHl with m <= p + 2, kInvalidArgument for replicates < 1.
BootstrapEstimate bootstrap_mse(const FhDataset& data, BootstrapVariant variant,
                                const BootstrapOptions& options,
                                const VarianceFits* fits = nullptr);

double mse_bootstrap(const FhDataset& data, std::size_t area, BootstrapVariant variant,
                     int replicates, std::uint64_t seed, const FitConfig& cfg = {});

// Balanced-case higher-order variances of the DL.RE (a_m) and Taylor.HL
// (b_m) estimators. Throws kDegreesOfFreedomTooSmall when m <= p + 4.
struct BalancedMseVariances {
  double a_m = 0.0;
  double b_m = 0.0;
  bool mg_not_worse() const { return b_m <= a_m; }
};
BalancedMseVariances balanced_mse_variances(int m, int p, double D, double B, double q);

enum class MseEstimator { kNaiveRe, kDlRe, kPbRe, kBlRe, kTaylorHl, kPbHl };

inline constexpr MseEstimator kAllMseEstimators[] = {
    MseEstimator::kNaiveRe, MseEstimator::kDlRe,     MseEstimator::kPbRe,
    MseEstimator::kBlRe,    MseEstimator::kTaylorHl, MseEstimator::kPbHl};

std::string_view mse_estimator_name(MseEstimator e);
std::optional<MseEstimator> parse_mse_estimator(std::string_view name);
bool is_bootstrap(MseEstimator e);

struct BootstrapMeta {
  int replicates = 0;
  std::uint64_t seed = 0;
  std::string fit_method;
  int dropped = 0;
};

struct MseOptions {
  int replicates = 1000;
  std::optional<std::uint64_t> seed;  // mandatory when a bootstrap estimator is selected
  FitConfig fit;
};

struct MseReport {
  std::vector<MseEstimator> estimators;
  std::map<MseEstimator, Vector> values;  // estimator -> per-area values
  std::map<MseEstimator, BootstrapMeta> bootstrap;
  VarianceFits fits;
  std::uint64_t fingerprint = 0;
};

MseReport compute_mse_report(const FhDataset& data, const std::vector<MseEstimator>& estimators,
                             const MseOptions& options);

// FNV-1a over the bit patterns of y, X and D.
std::uint64_t dataset_fingerprint(const FhDataset& data);

}  // namespace sae

#endif  // SAE_MSE_HPP_
