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

#include "sae/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sae/error.hpp"
#include "sae/likelihood.hpp"

namespace sae {

namespace {

constexpr double kInvPhi = 0.6180339887498948482;  // (sqrt(5) - 1) / 2
constexpr int kRootScanPoints = 512;
constexpr double kRootScanMinRelative = 1e-8;

double sanitize(double v) { return std::isnan(v) ? kNegativeInfinity : v; }

double sample_variance(const Vector& y) {
  const auto n = static_cast<double>(y.size());
  if (y.size() < 2) return 0.0;
  const double mean = y.mean();
  return (y.array() - mean).square().sum() / (n - 1.0);
}

// Better candidate: larger value, ties toward the smaller argument.
bool better(double value, double x, double best_value, double best_x) {
  if (value > best_value) return true;
  return value == best_value && x < best_x;
}

struct Candidate {
  double x;
  double value;
};

// Golden section on [a, b] (a < b). `a_is_edge` / `b_is_edge` mark endpoints
// that coincide with the search interval's boundaries; those are evaluated
// too so a maximum sitting on the boundary is recovered exactly.
SearchResult golden_section(const ScalarFunction& f, double a, double b, double f_a, double f_b,
                            const SearchConfig& cfg) {
  SearchResult r;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = sanitize(f(x1));
  double f2 = sanitize(f(x2));
  r.evaluations = 2;
  int it = 0;
  while (b - a > cfg.abs_tol && it < cfg.max_iter) {
    ++it;
    if (f1 >= f2) {
      b = x2;
      f_b = f2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = sanitize(f(x1));
    } else {
      a = x1;
      f_a = f1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = sanitize(f(x2));
    }
    ++r.evaluations;
  }
  r.iterations = it;
  r.converged = (b - a <= cfg.abs_tol);
  r.lo = a;
  r.hi = b;
  // Best of the bracket points seen at termination; ties toward smaller x.
  Candidate best{a, f_a};
  for (const Candidate c : {Candidate{x1, f1}, Candidate{x2, f2}, Candidate{b, f_b}}) {
    if (better(c.value, c.x, best.value, best.x)) best = c;
  }
  r.argmax = best.x;
  r.value = best.value;
  return r;
}

// Bisection on df around x. The bracket starts at [x - w, x + w] and widens
// (clipped to [lo, hi]) until df > 0 on the left and df < 0 on the right.
void polish_with_derivative(const ScalarFunction& f, const ScalarFunction& df, double lo,
                            double hi, const SearchConfig& cfg, SearchResult& best) {
  constexpr int kMaxBisections = 200;
  constexpr int kMaxWidenings = 30;
  const double x = best.argmax;
  double w = std::max({4.0 * cfg.abs_tol, 4.0 * (best.hi - best.lo), 1e-7 * std::abs(x)});
  double a = x;
  double b = x;
  double da = 0.0;
  double db = 0.0;
  bool bracketed = false;
  for (int k = 0; k < kMaxWidenings && !bracketed; ++k, w *= 2.0) {
    a = std::max(lo, x - w);
    b = std::min(hi, x + w);
    da = df(a);
    db = df(b);
    best.evaluations += 2;
    if (std::isnan(da) || std::isnan(db)) return;
    bracketed = da > 0.0 && db < 0.0;
    if ((a == lo && !(da > 0.0)) || (b == hi && !(db < 0.0))) break;
  }
  if (!bracketed) return;
  for (int it = 0; it < kMaxBisections; ++it) {
    const double mid = 0.5 * (a + b);
    if (!(mid > a) || !(mid < b)) break;
    const double dm = df(mid);
    ++best.evaluations;
    if (std::isnan(dm)) return;
    if (dm > 0.0) {
      a = mid;
    } else if (dm < 0.0) {
      b = mid;
    } else {
      a = b = mid;
      break;
    }
  }
  const double c = 0.5 * (a + b);
  const double fc = sanitize(f(c));
  ++best.evaluations;
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(best.value));
  if (fc >= best.value - slack) {
    best.argmax = c;
    best.value = fc;
    best.lo = a;
    best.hi = b;
  }
}

}  // namespace

ResolvedFitConfig resolve(const FitConfig& cfg, const FhDataset& data) {
  ResolvedFitConfig out;
  const double max_d = data.D().maxCoeff();
  const double mean_d = data.D().mean();
  out.a_max = cfg.a_max.value_or(std::max(1e3 * max_d, 1e3 * sample_variance(data.y())));
  if (!(out.a_max > 0.0) || !std::isfinite(out.a_max)) {
    throw Error(ErrorCode::kInvalidArgument, "a_max must be positive and finite");
  }
  out.search.abs_tol = cfg.abs_tol.value_or(std::max(1e-8 * (1.0 + mean_d), 1e-14 * out.a_max));
  if (!(out.search.abs_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "abs_tol must be positive");
  }
  if (cfg.max_iter < 1 || cfg.grid_points < 3) {
    throw Error(ErrorCode::kInvalidArgument, "max_iter >= 1 and grid_points >= 3 required");
  }
  out.search.max_iter = cfg.max_iter;
  out.search.grid_points = cfg.grid_points;
  return out;
}

SearchResult maximize_on_interval(const ScalarFunction& f, double lo, double hi,
                                  const SearchConfig& cfg, const ScalarFunction* df) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kInvalidArgument, "maximize_on_interval needs finite lo < hi");
  }
  if (cfg.grid_points < 3 || !(cfg.abs_tol > 0.0) || !(cfg.min_offset > 0.0) ||
      !(cfg.min_offset < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid search configuration");
  }
  const int n = cfg.grid_points;
  const double width = hi - lo;
  std::vector<double> xs(static_cast<std::size_t>(n));
  std::vector<double> fs(static_cast<std::size_t>(n));
  xs[0] = lo;
  const double log_min = std::log(cfg.min_offset);
  for (int k = 1; k < n; ++k) {
    const double t = static_cast<double>(k - 1) / static_cast<double>(n - 2);
    xs[static_cast<std::size_t>(k)] = lo + width * std::exp(log_min * (1.0 - t));
  }
  xs[static_cast<std::size_t>(n - 1)] = hi;
  bool any_finite = false;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    fs[k] = sanitize(f(xs[k]));
    any_finite = any_finite || std::isfinite(fs[k]);
  }
  if (!any_finite) {
    throw Error(ErrorCode::kNoFiniteValues, "objective has no finite value on the search grid");
  }

  SearchResult best;
  best.value = kNegativeInfinity;
  best.argmax = hi;
  int total_iter = 0;
  int total_eval = n;
  bool all_converged = true;
  const auto last = static_cast<std::size_t>(n - 1);
  for (std::size_t k = 0; k <= last; ++k) {
    if (!std::isfinite(fs[k])) continue;
    const bool left_ok = (k == 0) || fs[k] > fs[k - 1];
    const bool right_ok = (k == last) || fs[k] >= fs[k + 1];
    if (!left_ok || !right_ok) continue;
    const std::size_t ia = (k == 0) ? 0 : k - 1;
    const std::size_t ib = (k == last) ? last : k + 1;
    SearchResult r = golden_section(f, xs[ia], xs[ib], fs[ia], fs[ib], cfg);
    total_iter += r.iterations;
    total_eval += r.evaluations;
    all_converged = all_converged && r.converged;
    if (better(fs[k], xs[k], r.value, r.argmax)) {
      r.argmax = xs[k];
      r.value = fs[k];
    }
    if (better(r.value, r.argmax, best.value, best.argmax)) best = r;
  }
  best.iterations = total_iter;
  best.evaluations = total_eval;
  best.converged = all_converged;
  if (df != nullptr && best.converged && best.argmax > lo && best.argmax < hi) {
    polish_with_derivative(f, *df, lo, hi, cfg, best);
  }
  return best;
}

double balanced_stationarity(const FhDataset& data, double A, HPlus h_plus) {
  const double m = static_cast<double>(data.m());
  const double p = static_cast<double>(data.p());
  const double d = data.D()(0);
  const double s = ols_residual_sum_of_squares(data);
  const double v = A + d;
  double adj = 0.0;
  if (h_plus == HPlus::kEnabled) adj = 2.0 * v * v * d_log_h_plus(data, A);
  return -(m - p - 2.0) * v + adj + s;
}

double find_root_balanced_K(const FhDataset& data, const FitConfig& cfg, HPlus h_plus) {
  if (!data.is_balanced()) {
    throw Error(ErrorCode::kNotBalanced, "K(A) root requires equal sampling variances");
  }
  if (data.m() <= data.p() + 2) {
    throw Error(ErrorCode::kInsufficientDegreesOfFreedom, "K(A) root requires m > p + 2");
  }
  const ResolvedFitConfig rc = resolve(cfg, data);
  const double lo = kRootScanMinRelative * data.D().mean();
  const double hi = rc.a_max;
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidArgument, "a_max below the scan start");

  // The OLS residual sum of squares does not depend on A; hoist it.
  const double m = static_cast<double>(data.m());
  const double p = static_cast<double>(data.p());
  const double d = data.D()(0);
  const double s = ols_residual_sum_of_squares(data);
  auto K = [&](double A) {
    const double v = A + d;
    const double adj = (h_plus == HPlus::kEnabled) ? 2.0 * v * v * d_log_h_plus(data, A) : 0.0;
    return -(m - p - 2.0) * v + adj + s;
  };

  std::vector<double> xs(kRootScanPoints);
  std::vector<double> ks(kRootScanPoints);
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (int k = 0; k < kRootScanPoints; ++k) {
    const double t = static_cast<double>(k) / (kRootScanPoints - 1);
    xs[static_cast<std::size_t>(k)] =
        (k == kRootScanPoints - 1) ? hi : std::exp(log_lo + t * (log_hi - log_lo));
    ks[static_cast<std::size_t>(k)] = K(xs[static_cast<std::size_t>(k)]);
  }
  int changes = 0;
  std::size_t at = 0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const bool change = (ks[k] > 0.0 && ks[k + 1] <= 0.0) || (ks[k] < 0.0 && ks[k + 1] >= 0.0);
    if (change) {
      ++changes;
      at = k;
    }
  }
  if (changes == 0) throw Error(ErrorCode::kNoSignChange, "K(A) has no sign change on the scan grid");
  if (changes > 1) {
    throw Error(ErrorCode::kMultipleSignChanges, "K(A) changes sign more than once on the scan grid");
  }
  double a = xs[at];
  double b = xs[at + 1];
  double ka = ks[at];
  if (ks[at + 1] == 0.0) return b;
  int it = 0;
  while (b - a > rc.search.abs_tol && it < rc.search.max_iter) {
    ++it;
    const double mid = 0.5 * (a + b);
    const double km = K(mid);
    if (km == 0.0) return mid;
    if ((km > 0.0) == (ka > 0.0)) {
      a = mid;
      ka = km;
    } else {
      b = mid;
    }
  }
  if (b - a > rc.search.abs_tol) {
    throw Error(ErrorCode::kMaxIterExceeded, "bisection did not reach abs_tol");
  }
  return 0.5 * (a + b);
}

}  // namespace sae
