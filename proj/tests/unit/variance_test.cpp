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
#include "sae/variance.hpp"
#include "test_util.hpp"

namespace sae {
namespace {

FhDataset flat6() {
  RawDataset raw;
  raw.y = Vector(6);
  raw.y << 0, 0.1, 0, 0.1, 0, 0.1;
  raw.X = Matrix::Ones(6, 1);
  raw.D = Vector::Ones(6);
  return validate_dataset(raw);
}

double grid_argmax(ObjectiveEvaluator& f, double hi) {
  auto scan = [&](double a, double b, int n) {
    double bx = a;
    double bf = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) {
      const double x = a + (b - a) * k / n;
      const double fx = f(x);
      if (fx > bf) {
        bf = fx;
        bx = x;
      }
    }
    return bx;
  };
  const int n = 20000;
  const double x0 = scan(0.0, hi, n);
  const double h = hi / n;
  return scan(std::max(0.0, x0 - 2 * h), x0 + 2 * h, n);
}

TEST(Reml, BalancedExample) {
  const HyperEstimate r = fit_reml(testing::balanced4());
  EXPECT_NEAR(r.value, 17.0 / 3.0, 1e-6);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.method, VarianceMethod::kReml);
  EXPECT_FALSE(r.area.has_value());
}

TEST(Reml, BalancedClosedFormOnRandomData) {
  std::mt19937_64 gen(41);
  testing::RandomSpec spec;
  spec.balanced = true;
  spec.d_max = 5.0;
  spec.a_max = 5.0;
  for (int rep = 0; rep < 40; ++rep) {
    const FhDataset d = testing::random_dataset(gen, spec);
    const double s = ols_residual_sum_of_squares(d);
    const double want = std::max(0.0, s / static_cast<double>(d.m() - d.p()) - d.D()(0));
    EXPECT_NEAR(fit_reml(d).value, want, 1e-6);
  }
}

TEST(Reml, ReturnsExactZeroOnTheBoundary) {
  EXPECT_EQ(fit_reml(flat6()).value, 0.0);
}

TEST(Reml, MatchesGridOracle) {
  std::mt19937_64 gen(42);
  for (int rep = 0; rep < 5; ++rep) {
    const FhDataset d = testing::random_dataset(gen);
    const HyperEstimate r = fit_reml(d);
    ObjectiveEvaluator f(d, std::nullopt, Adjustment::kNone);
    EXPECT_NEAR(r.value, grid_argmax(f, 10.0 * r.value + 10.0), 1e-4);
  }
}

TEST(AdjustedH0, BalancedExampleIsNineteen) {
  EXPECT_NEAR(fit_adjusted_h0(testing::balanced4(), 0).value, 19.0, 1e-6);
}

TEST(Mg, StrictlyPositiveEvenWhenRemlIsZero) {
  const FhDataset d = flat6();
  for (std::size_t i = 0; i < d.m(); ++i) {
    const HyperEstimate r = fit_mg(d, i);
    EXPECT_GT(r.value, 0.0);
    EXPECT_EQ(r.area, i);
    EXPECT_EQ(r.method, VarianceMethod::kMg);
  }
}

TEST(Mg, RequiresEnoughAreas) {
  RawDataset raw;
  raw.y = Vector(3);
  raw.y << 0, 1, 5;
  raw.X = Matrix::Ones(3, 1);
  raw.D = Vector::Ones(3);
  try {
    fit_mg(validate_dataset(raw), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientDegreesOfFreedom);
  }
}

TEST(Mg, AllMatchesSingle) {
  std::mt19937_64 gen(43);
  const FhDataset d = testing::random_dataset(gen);
  const std::vector<HyperEstimate> all = fit_mg_all(d);
  ASSERT_EQ(all.size(), d.m());
  for (std::size_t i = 0; i < d.m(); ++i) EXPECT_EQ(all[i].value, fit_mg(d, i).value);
  const Vector v = values_of(all);
  EXPECT_EQ(v(0), all[0].value);
}

TEST(Mg, MatchesGridOracle) {
  std::mt19937_64 gen(44);
  for (int rep = 0; rep < 5; ++rep) {
    const FhDataset d = testing::random_dataset(gen);
    const std::size_t area = static_cast<std::size_t>(rep) % d.m();
    const HyperEstimate r = fit_mg(d, area);
    ObjectiveEvaluator f(d, area, Adjustment::kMg);
    EXPECT_NEAR(r.value, grid_argmax(f, 10.0 * r.value + 10.0), 1e-4);
  }
}

TEST(Mg, ShrinkageStaysInsideTheUnitInterval) {
  std::mt19937_64 gen(45);
  for (int rep = 0; rep < 50; ++rep) {
    const FhDataset d = testing::random_dataset(gen);
    const Vector a = values_of(fit_mg_all(d));
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      ASSERT_GT(a(i), 0.0);
      const double b = shrinkage(a(i), d.D()(i));
      EXPECT_GT(b, 0.0);
      EXPECT_LT(b, 1.0);
    }
  }
}

TEST(ClosedForms, BalancedExample) {
  const BalancedClosedForms c = balanced_closed_forms(testing::balanced4());
  EXPECT_NEAR(c.S, 20.0, 1e-12);
  EXPECT_NEAR(c.a_unbiased, 17.0 / 3.0, 1e-12);
  EXPECT_NEAR(c.a_reml, 17.0 / 3.0, 1e-12);
  EXPECT_NEAR(c.a_morris, 19.0, 1e-12);
  EXPECT_NEAR(c.a_morris_plus, 19.0, 1e-12);
  EXPECT_NEAR(c.b_unbiased, 0.05, 1e-12);
  EXPECT_NEAR(c.b_plug, 0.15, 1e-12);
  EXPECT_NEAR(fit_morris_balanced(testing::balanced4()).value, 19.0, 1e-12);
}

TEST(ClosedForms, MorrisPlusFloor) {
  const FhDataset d = flat6();
  const BalancedClosedForms c = balanced_closed_forms(d);
  EXPECT_LT(c.a_morris, 0.0);
  EXPECT_EQ(c.a_reml, 0.0);
  EXPECT_NEAR(c.a_morris_plus, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(fit_morris_balanced(d).value, 2.0 / 3.0, 1e-12);
}

TEST(ClosedForms, Errors) {
  std::mt19937_64 gen(46);
  EXPECT_THROW(balanced_closed_forms(testing::random_dataset(gen)), Error);
}

TEST(AsymptoticMoments, BalancedValues) {
  RawDataset raw;
  raw.y = Vector::Zero(50);
  raw.X = Matrix::Ones(50, 1);
  raw.D = Vector::Ones(50);
  const FhDataset d = validate_dataset(raw);
  const AsymptoticMoments l = asymptotic_bias_var(d, 1.0, 0);
  const double tr = 50.0 / 4.0;
  EXPECT_NEAR(l.variance, 2.0 / tr, 1e-14);
  EXPECT_NEAR(l.bias, (d_log_h_plus(d, 1.0) + 0.5) * 2.0 / tr, 1e-14);
  // g1 + g2 + g3 at A = D = 1: 1/2 + 1/(2 m) + 1/m.
  EXPECT_NEAR(l.mse, 0.5 + 0.01 + 0.02, 1e-14);
}

}  // namespace
}  // namespace sae
