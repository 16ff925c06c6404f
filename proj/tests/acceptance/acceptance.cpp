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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sae/cli/commands.hpp"
#include "sae/error.hpp"
#include "sae/likelihood.hpp"
#include "sae/mse.hpp"
#include "sae/optimizer.hpp"
#include "sae/simulation.hpp"
#include "sae/variance.hpp"

namespace {

using namespace sae;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

FhDataset random_dataset(std::mt19937_64& gen, bool balanced, double d_lo, double d_hi,
                         double a_hi) {
  std::uniform_int_distribution<int> pick_p(1, 3);
  const int p = pick_p(gen);
  std::uniform_int_distribution<int> pick_m(std::max(6, p + 3), 30);
  const int m = pick_m(gen);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  RawDataset raw;
  raw.X.resize(m, p);
  raw.D.resize(m);
  raw.y.resize(m);
  const double a = a_hi * u(gen);
  const double d_common = d_lo + (d_hi - d_lo) * u(gen);
  Vector beta(p);
  for (int k = 0; k < p; ++k) beta(k) = 2.0 * z(gen);
  for (int i = 0; i < m; ++i) {
    raw.X(i, 0) = 1.0;
    for (int k = 1; k < p; ++k) raw.X(i, k) = u(gen);
    raw.D(i) = balanced ? d_common : d_lo + (d_hi - d_lo) * u(gen);
    raw.y(i) = raw.X.row(i).dot(beta) + std::sqrt(a) * z(gen) + std::sqrt(raw.D(i)) * z(gen);
  }
  return validate_dataset(std::move(raw));
}

Outcome ac1() {
  double worst = 0.0;
  const FhDataset ex = [] {
    RawDataset raw;
    raw.y = Vector(4);
    raw.y << 0, 2, 4, 6;
    raw.X = Matrix::Ones(4, 1);
    raw.D = Vector::Ones(4);
    return validate_dataset(raw);
  }();
  const double example = fit_adjusted_h0(ex, 0).value;
  const double example_err = std::abs(example - 19.0);
  std::mt19937_64 gen(1);
  int checked = 0;
  while (checked < 200) {
    const FhDataset d = random_dataset(gen, true, 0.5, 5.0, 5.0);
    const double s = ols_residual_sum_of_squares(d);
    const double k = static_cast<double>(d.m() - d.p() - 2);
    if (!(d.m() > d.p() + 2) || !(s > k * d.D()(0))) continue;
    ++checked;
    const std::size_t area = static_cast<std::size_t>(checked) % d.m();
    worst = std::max(worst, std::abs(fit_adjusted_h0(d, area).value - (s / k - d.D()(0))));
  }
  return {worst <= 1e-6 && example_err <= 1e-6,
          "example " + fmt("%.10g", example) + ", max |error| over 200 datasets " +
              fmt("%.3g", worst)};
}

Outcome ac2() {
  std::mt19937_64 gen(2);
  long fits = 0;
  long bad = 0;
  double min_a = 1e300;
  for (int rep = 0; rep < 1000; ++rep) {
    const FhDataset d = random_dataset(gen, false, 0.5, 40.0, 40.0);
    const Vector a = values_of(fit_mg_all(d));
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      ++fits;
      const double b = shrinkage(a(i), d.D()(i));
      if (!(a(i) > 0.0) || !(b > 0.0) || !(b < 1.0)) ++bad;
      min_a = std::min(min_a, a(i));
    }
  }
  return {bad == 0, std::to_string(fits) + " area fits, " + std::to_string(bad) +
                        " violations, smallest A " + fmt("%.4g", min_a)};
}

double grid_oracle(ObjectiveEvaluator& f, double hi) {
  const int n = 100000;
  auto scan = [&](double a, double b) {
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
  const double h = hi / n;
  const double x0 = scan(0.0, hi);
  return scan(std::max(0.0, x0 - 2.0 * h), std::min(hi, x0 + 2.0 * h));
}

Outcome ac3() {
  std::mt19937_64 gen(3);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const FhDataset d = random_dataset(gen, false, 0.5, 40.0, 40.0);
    const double a_max = resolve({}, d).a_max;
    ObjectiveEvaluator reml(d, std::nullopt, Adjustment::kNone);
    worst = std::max(worst, std::abs(fit_reml(d).value - grid_oracle(reml, a_max)));
    std::uniform_int_distribution<std::size_t> pick(0, d.m() - 1);
    const std::size_t area = pick(gen);
    ObjectiveEvaluator mg(d, area, Adjustment::kMg);
    worst = std::max(worst, std::abs(fit_mg(d, area).value - grid_oracle(mg, a_max)));
  }
  return {worst <= 1e-4, "max |fit - grid| over 50 datasets (REML + one MG area) " + fmt("%.3g", worst)};
}

struct SurrogateRun {
  MetricTable table;
  SimDesign design;
};

const SurrogateRun& surrogate_run() {
  static const SurrogateRun run = [] {
    SurrogateRun r;
    r.design = surrogate_design();
    r.design.n_mc = 1000;
    r.design.seed = 20260101;
    r.design.mse_estimators = {};
    r.table = run_monte_carlo(r.design);
    return r;
  }();
  return run;
}

Outcome ac4() {
  const SurrogateRun& r = surrogate_run();
  const std::size_t areas[] = {0, 7, 14};  // min, median, max D
  bool pass = true;
  std::string detail;
  for (std::size_t i : areas) {
    const double re = r.table.find(i, "B", "RE")->rb_percent;
    const double hl = r.table.find(i, "B", "HL")->rb_percent;
    pass = pass && re > 0.0 && hl < 0.0;
    detail += "D=" + fmt("%.3f", r.design.design->D(static_cast<Eigen::Index>(i))) + ": RB(RE) " +
              fmt("%.2f", re) + " RB(HL) " + fmt("%.2f", hl) + "; ";
  }
  const double re0 = r.table.find(0, "B", "RE")->rb_percent;
  const double hl0 = r.table.find(0, "B", "HL")->rb_percent;
  pass = pass && std::abs(hl0) < std::abs(re0);
  return {pass, detail + "n_kept " + std::to_string(r.table.n_kept)};
}

Outcome ac5() {
  const SurrogateRun& r = surrogate_run();
  double max_rel = 0.0;
  double max_lower = -1e300;
  for (std::size_t i = 0; i < 15; ++i) {
    const double re = r.table.find(i, "EBLUP_MSE", "RE")->value;
    const MetricRow* diff = r.table.find(i, "EBLUP_MSE", "HL-RE");
    const double rel = std::abs(diff->value) / re;
    const double se = diff->mc_standard_error / re;
    max_rel = std::max(max_rel, rel);
    max_lower = std::max(max_lower, rel - 2.0 * se);
  }
  return {max_lower < 0.02, "max |HL-RE|/RE " + fmt("%.4f", max_rel) +
                                ", max of (|rel| - 2 MC SE) " + fmt("%.4f", max_lower)};
}

Outcome ac6() {
  SimDesign sd = balanced_design(50, 1.0, 1.0);
  sd.n_mc = 2000;
  sd.n_boot = 500;
  sd.seed = 20260103;
  sd.mse_estimators = {MseEstimator::kNaiveRe, MseEstimator::kTaylorHl, MseEstimator::kPbHl};
  sd.bootstrap_areas = {0};
  const MetricTable t = run_monte_carlo(sd);
  // Areas are exchangeable, so empirical MSE and the Taylor means pool over areas.
  double emp = 0.0;
  double taylor = 0.0;
  double naive = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    emp += t.find(i, "EBLUP_MSE", "HL")->value / 50.0;
    taylor += t.find(i, "MSE[HL]", "Taylor.HL")->value / 50.0;
    naive += t.find(i, "MSE[HL]", "naive.RE")->value / 50.0;
  }
  const double pb = t.find(0, "MSE[HL]", "PB.HL")->value;
  const double rt = taylor / emp - 1.0;
  const double rp = pb / emp - 1.0;
  return {std::abs(rt) <= 0.10 && std::abs(rp) <= 0.10 && naive < emp,
          "empirical " + fmt("%.5f", emp) + ", Taylor.HL " + fmt("%.5f", taylor) + " (" +
              fmt("%+.2f%%", 100 * rt) + "), PB.HL " + fmt("%.5f", pb) + " (" +
              fmt("%+.2f%%", 100 * rp) + "), naive.RE " + fmt("%.5f", naive)};
}

Outcome ac7() {
  int total = 0;
  int violations = 0;
  std::string first;
  for (int p = 3; p <= 6; ++p) {
    for (int m = p + 5; m <= 200; ++m) {
      for (double q : {static_cast<double>(p) / m, 2.0 * p / m}) {
        for (double b : {0.25, 0.5, 0.75}) {
          ++total;
          const BalancedMseVariances v = balanced_mse_variances(m, p, 1.0, b, q);
          if (!v.mg_not_worse()) {
            if (violations == 0) {
              first = "first at m=" + std::to_string(m) + " p=" + std::to_string(p) + " q=" +
                      fmt("%.4f", q) + " B=" + fmt("%.2f", b) + ": b_m " + fmt("%.6g", v.b_m) +
                      " > a_m " + fmt("%.6g", v.a_m);
            }
            ++violations;
          }
        }
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " of " + std::to_string(total) +
                               " grid points with b_m > a_m" + (first.empty() ? "" : "; " + first)};
}

Outcome ac8() {
  std::mt19937_64 gen(8);
  double worst = 0.0;
  int failures = 0;
  std::string why;
  for (int rep = 0; rep < 100; ++rep) {
    const FhDataset d = random_dataset(gen, true, 0.5, 40.0, 40.0);
    try {
      const double root = find_root_balanced_K(d, {});
      worst = std::max(worst, std::abs(root - fit_mg(d, 0).value));
    } catch (const Error& e) {
      ++failures;
      why = e.what();
    }
  }
  return {failures == 0 && worst <= 1e-5,
          "max |root - MG maximizer| " + fmt("%.3g", worst) + ", scan failures " +
              std::to_string(failures) + (why.empty() ? "" : " (" + why + ")")};
}

Outcome ac9() {
  SimDesign sd = balanced_design(50, 1.0, 1.0);
  sd.n_mc = 2000;
  sd.seed = 20260102;
  const MetricTable t = run_monte_carlo(sd);
  // (rrmse / 100)^2 * A^2 is the mean of (A_hat - A)^2, A = 1; pooled over areas.
  double mse = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    mse += std::pow(t.find(i, "A", "HL")->rrmse_percent / 100.0, 2) / 50.0;
  }
  const double target = 2.0 * 4.0 / 50.0;
  const double ratio = mse / target;
  return {std::abs(ratio - 1.0) <= 0.15,
          "mean (A_MG - A)^2 " + fmt("%.5f", mse) + " vs " + fmt("%.5f", target) + " (ratio " +
              fmt("%.4f", ratio) + ")"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome ac10() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("sae_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);
  const char* settings[] = {"1", "4", "1"};
  std::vector<std::string> outputs[3];
  bool ok = true;
  for (int k = 0; k < 3; ++k) {
    setenv("SAE_FH_THREADS", settings[k], 1);
    const fs::path dir = root / std::to_string(k);
    std::ostringstream out;
    std::ostringstream err;
    ok = ok && cli::run_cli({"mse", "--input", "builtin:surrogate15", "--boot-reps", "40", "--seed",
                             "11", "--output-dir", dir.string()},
                            out, err) == 0;
    ok = ok && cli::run_cli({"simulate", "--design", "surrogate", "--seed", "11", "--n-mc",
                             "10", "--boot-reps", "5", "--output-dir", dir.string()},
                            out, err) == 0;
    outputs[k] = {slurp(dir / "mse.json"), slurp(dir / "metrics.json")};
  }
  unsetenv("SAE_FH_THREADS");
  fs::remove_all(root);
  const bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
  return {ok && same, std::string("mse and simulate JSON with SAE_FH_THREADS=1,4,1: ") +
                          (same ? "byte-identical" : "differ") + (ok ? "" : "; a command failed")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "balanced closed-form H0 fit", ac1},
      {"AC2", "strict positivity of MG fits", ac2},
      {"AC3", "fits match a dense grid search", ac3},
      {"AC4", "shrinkage bias ordering, surrogate design", ac4},
      {"AC5", "EBLUP-RE and EBLUP-HL MSEs agree within 2%", ac5},
      {"AC6", "second-order unbiasedness, balanced m=50", ac6},
      {"AC7", "b_m <= a_m over the balanced grid", ac7},
      {"AC8", "unique K root equals the MG maximizer", ac8},
      {"AC9", "mean squared error of the MG fit", ac9},
      {"AC10", "determinism across thread counts", ac10},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%-4s %s  %s: %s [%.1fs]\n", c.name, o.pass ? "PASS" : "FAIL", c.title,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
