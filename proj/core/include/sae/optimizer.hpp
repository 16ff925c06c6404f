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

// Bounded scalar search. All numerical-search policy (grid density, golden
// section tolerance, search caps) lives here.

#ifndef SAE_OPTIMIZER_HPP_
#define SAE_OPTIMIZER_HPP_

#include <functional>
#include <optional>

#include "sae/dataset.hpp"

namespace sae {

// User-facing search settings. Unset fields are resolved from the data:
//   a_max   = max(1e3 * max_i D_i, 1e3 * sample variance of y)
//   abs_tol = max(1e-8 * (1 + mean_i D_i), 1e-14 * a_max)
struct FitConfig {
  std::optional<double> a_max;
  std::optional<double> abs_tol;
  int max_iter = 500;
  int grid_points = 200;
};

struct SearchConfig {
  double abs_tol = 1e-8;
  int max_iter = 500;
  int grid_points = 200;
  // Smallest grid offset from `lo`, relative to (hi - lo). Grid points are
  // lo, then log-spaced offsets from min_offset * (hi - lo) up to hi.
  double min_offset = 1e-12;
};

struct ResolvedFitConfig {
  double a_max = 0.0;
  SearchConfig search;
};

ResolvedFitConfig resolve(const FitConfig& cfg, const FhDataset& data);

struct SearchResult {
  double argmax = 0.0;
  double value = 0.0;
  int iterations = 0;  // golden-section iterations summed over candidates
  int evaluations = 0;
  bool converged = false;
  double lo = 0.0;  // final bracket of the returned candidate
  double hi = 0.0;
};

using ScalarFunction = std::function<double(double)>;

// Maximizes f on [lo, hi]: grid scan, then golden-section refinement of every
// grid-local maximum; the global best wins, ties toward the smaller argument.
// f may return -infinity (treated as excluded); NaN is treated the same way.
// f is never evaluated outside [lo, hi].
//
// With `df` (the derivative of f) an interior winner is polished by bisection
// on df over a small bracket around it, kept only if f does not drop. Golden
// section alone resolves the argmax to roughly sqrt(machine epsilon).
//
// Throws kInvalidArgument unless lo < hi, kNoFiniteValues when the grid has no
// finite value. A refinement that exhausts max_iter yields converged = false.
SearchResult maximize_on_interval(const ScalarFunction& f, double lo, double hi,
                                  const SearchConfig& cfg, const ScalarFunction* df = nullptr);

enum class HPlus { kEnabled, kDisabled };

// Stationarity function of the MG objective on balanced data:
//   K(A) = -(m - p - 2)(A + D) + 2 (A + D)^2 d/dA log h_+(A) + S,
// S the OLS residual sum of squares. With HPlus::kDisabled the h_+ term is 0.
double balanced_stationarity(const FhDataset& data, double A, HPlus h_plus);

// Root of K on (1e-8 * mean(D), a_max]: 512-point log-spaced sign-change
// scan, then bisection to abs_tol. Throws kNotBalanced,
// kInsufficientDegreesOfFreedom (m <= p + 2), kNoSignChange or
// kMultipleSignChanges.
double find_root_balanced_K(const FhDataset& data, const FitConfig& cfg,
                            HPlus h_plus = HPlus::kEnabled);

}  // namespace sae

#endif  // SAE_OPTIMIZER_HPP_
