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


#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sae/error.hpp"
#include "sae/likelihood.hpp"
#include "sae/optimizer.hpp"
#include "sae/variance.hpp"
#include "test_util.hpp"

namespace sae {
namespace {

SearchConfig search(double tol = 1e-9) {
  SearchConfig c;
  c.abs_tol = tol;
  return c;
}

TEST(Maximize, Quadratic) {
  const SearchResult r =
      maximize_on_interval([](double x) { return -(x - 2.0) * (x - 2.0); }, 0.0, 10.0, search());
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.argmax, 2.0, 1e-4);
  EXPECT_LE(r.lo, r.argmax);
  EXPECT_GE(r.hi, r.argmax);
}

TEST(Maximize, DecreasingGivesLowerBoundary) {
  const SearchResult r = maximize_on_interval([](double x) { return -x; }, 0.0, 10.0, search());
  EXPECT_EQ(r.argmax, 0.0);
}

TEST(Maximize, IncreasingGivesUpperBoundary) {
  const SearchResult r = maximize_on_interval([](double x) { return x; }, 0.0, 10.0, search());
  EXPECT_NEAR(r.argmax, 10.0, 1e-8);
}

TEST(Maximize, GlobalBestOfSeveralLocalMaxima) {
  auto f = [](double x) { return std::exp(-(x - 1) * (x - 1)) + 2.0 * std::exp(-(x - 7) * (x - 7)); };
  const SearchResult r = maximize_on_interval(f, 0.0, 10.0, search());
  EXPECT_NEAR(r.argmax, 7.0, 1e-4);
}

TEST(Maximize, TiesGoToTheSmallerArgument) {
  const SearchResult r = maximize_on_interval([](double) { return 1.0; }, 0.0, 5.0, search());
  EXPECT_EQ(r.argmax, 0.0);
}

TEST(Maximize, NanAndMinusInfinityAreExcluded) {
  auto f = [](double x) {
    if (x < 1.0) return std::numeric_limits<double>::quiet_NaN();
    if (x > 9.0) return -std::numeric_limits<double>::infinity();
    return -(x - 3.0) * (x - 3.0);
  };
  EXPECT_NEAR(maximize_on_interval(f, 0.0, 10.0, search()).argmax, 3.0, 1e-4);
}

TEST(Maximize, NoFiniteValues) {
  try {
    maximize_on_interval([](double) { return -std::numeric_limits<double>::infinity(); }, 0.0, 1.0,
                         search());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoFiniteValues);
  }
}

TEST(Maximize, InvalidInterval) {
  EXPECT_THROW(maximize_on_interval([](double x) { return x; }, 1.0, 1.0, search()), Error);
  EXPECT_THROW(maximize_on_interval([](double x) { return x; }, 2.0, 1.0, search()), Error);
}

TEST(Maximize, NeverLeavesTheInterval) {
  double seen_lo = 1e300;
  double seen_hi = -1e300;
  auto f = [&](double x) {
    seen_lo = std::min(seen_lo, x);
    seen_hi = std::max(seen_hi, x);
    return std::sin(x);
  };
  auto df = [&](double x) {
    seen_lo = std::min(seen_lo, x);
    seen_hi = std::max(seen_hi, x);
    return std::cos(x);
  };
  const ScalarFunction dff = df;
  maximize_on_interval(f, 0.5, 20.0, search(), &dff);
  EXPECT_GE(seen_lo, 0.5);
  EXPECT_LE(seen_hi, 20.0);
}

TEST(Maximize, IterationCapReportsNonConvergence) {
  SearchConfig c = search(1e-15);
  c.max_iter = 3;
  const SearchResult r = maximize_on_interval([](double x) { return -(x - 2) * (x - 2); }, 0.0, 10.0, c);
  EXPECT_FALSE(r.converged);
}

TEST(Maximize, DerivativePolishReachesMachinePrecision) {
  auto f = [](double x) { return -1e-3 * (x - 19.0) * (x - 19.0) + 50.0; };
  const ScalarFunction df = [](double x) { return -2e-3 * (x - 19.0); };
  const SearchResult plain = maximize_on_interval(f, 0.0, 100.0, search(1e-8));
  const SearchResult polished = maximize_on_interval(f, 0.0, 100.0, search(1e-8), &df);
  EXPECT_NEAR(polished.argmax, 19.0, 1e-12);
  EXPECT_GE(std::abs(plain.argmax - 19.0), std::abs(polished.argmax - 19.0));
}

TEST(Maximize, Deterministic) {
  auto f = [](double x) { return std::log(x + 1) - 0.1 * x; };
  const SearchResult a = maximize_on_interval(f, 0.0, 50.0, search());
  const SearchResult b = maximize_on_interval(f, 0.0, 50.0, search());
  EXPECT_EQ(a.argmax, b.argmax);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Maximize, MgObjectiveMatchesDenseGrid) {
  std::mt19937_64 gen(31);
  const FhDataset d = testing::random_dataset(gen);
  const double found = fit_mg(d, 0).value;
  ObjectiveEvaluator eval(d, 0, Adjustment::kMg);
  // 10^6 points across a window that contains the maximizer.
  const double hi = 4.0 * found + 1.0;
  const int n = 1'000'000;
  double best_x = 0.0;
  double best_f = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= n; ++k) {
    const double x = hi * k / n;
    const double fx = eval(x);
    if (fx > best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  EXPECT_NEAR(found, best_x, 1e-4);
}

TEST(Resolve, Defaults) {
  const FhDataset d = testing::balanced4();
  const ResolvedFitConfig rc = resolve({}, d);
  // sample variance of (0, 2, 4, 6) is 20/3.
  EXPECT_NEAR(rc.a_max, 1e3 * 20.0 / 3.0, 1e-9);
  EXPECT_NEAR(rc.search.abs_tol, 2e-8, 1e-20);
  FitConfig bad;
  bad.grid_points = 2;
  EXPECT_THROW(resolve(bad, d), Error);
}

TEST(BalancedRoot, HPlusDisabledIsLinear) {
  const FhDataset d = testing::balanced4();
  EXPECT_NEAR(find_root_balanced_K(d, {}, HPlus::kDisabled), 19.0, 1e-6);
  EXPECT_NEAR(balanced_stationarity(d, 19.0, HPlus::kDisabled), 0.0, 1e-12);
  std::mt19937_64 gen(32);
  testing::RandomSpec spec;
  spec.balanced = true;
  spec.d_max = 5.0;
  spec.a_min = 2.0;
  spec.a_max = 10.0;
  int checked = 0;
  while (checked < 30) {
    const FhDataset r = testing::random_dataset(gen, spec);
    const double s = ols_residual_sum_of_squares(r);
    const double k = static_cast<double>(r.m() - r.p() - 2);
    const double D = r.D()(0);
    if (!(s > k * D)) continue;
    ++checked;
    EXPECT_NEAR(find_root_balanced_K(r, {}, HPlus::kDisabled), s / k - D, 1e-6 * (1 + s / k));
  }
}

TEST(BalancedRoot, HPlusEnabledHasPositiveRootAtTheMgMaximizer) {
  std::mt19937_64 gen(33);
  testing::RandomSpec spec;
  spec.balanced = true;
  for (int rep = 0; rep < 20; ++rep) {
    const FhDataset r = testing::random_dataset(gen, spec);
    const double root = find_root_balanced_K(r, {});
    EXPECT_GT(root, 0.0);
    const double tol = resolve({}, r).search.abs_tol;
    EXPECT_NEAR(root, fit_mg(r, 0).value, 10.0 * tol);
  }
}

TEST(BalancedRoot, Errors) {
  std::mt19937_64 gen(34);
  const FhDataset unbalanced = testing::random_dataset(gen);
  try {
    find_root_balanced_K(unbalanced, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotBalanced);
  }
  RawDataset raw;
  raw.y = Vector(3);
  raw.y << 0, 1, 5;
  raw.X = Matrix::Ones(3, 1);
  raw.D = Vector::Ones(3);
  try {
    find_root_balanced_K(validate_dataset(raw), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientDegreesOfFreedom);
  }
  // S < (m - p - 2) D: the linear root is negative, so no sign change on (0, a_max].
  RawDataset flat;
  flat.y = Vector(6);
  flat.y << 0, 0.1, 0, 0.1, 0, 0.1;
  flat.X = Matrix::Ones(6, 1);
  flat.D = Vector::Ones(6);
  try {
    find_root_balanced_K(validate_dataset(flat), {}, HPlus::kDisabled);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoSignChange);
  }
}

}  // namespace
}  // namespace sae
