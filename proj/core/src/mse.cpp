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

#include "sae/mse.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <utility>

#include "sae/error.hpp"
#include "sae/gls.hpp"
#include "sae/parallel.hpp"
#include "sae/rng.hpp"
#include "sae/variance.hpp"

namespace sae {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
constexpr int kRetryGridFactor = 4;

GDecomposition g_from(const FhDataset& data, const GlsSolver& solver, double A, std::size_t i) {
  const double d = data.D()(static_cast<Eigen::Index>(i));
  const double v = A + d;
  GDecomposition g;
  g.area = i;
  g.A_used = A;
  g.g1 = A * d / v;
  g.g2 = d * d * solver.leverage(i) / (v * v);
  g.g3 = 2.0 * d * d / (v * v * v * solver.trace_v_inv_sq());
  return g;
}

template <typename Fit>
std::optional<HyperEstimate> fit_with_retry(const FitConfig& cfg, Fit&& fit) {
  try {
    return fit(cfg);
  } catch (const Error&) {
  }
  FitConfig denser = cfg;
  denser.grid_points = cfg.grid_points * kRetryGridFactor;
  try {
    return fit(denser);
  } catch (const Error&) {
  }
  return std::nullopt;
}

// theta_i^BLUP at a common A for a single area.
double blup_at(const FhDataset& data, GlsSolver& solver, double A, std::size_t i) {
  solver.factor(A);
  const auto row = static_cast<Eigen::Index>(i);
  const double synthetic = data.X().row(row).dot(solver.beta());
  const double b = shrinkage(A, data.D()(row));
  return (1.0 - b) * data.y()(row) + b * synthetic;
}

std::vector<std::size_t> resolve_areas(const FhDataset& data, const std::vector<std::size_t>& in) {
  if (in.empty()) {
    std::vector<std::size_t> all(data.m());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  for (std::size_t a : in) {
    if (a >= data.m()) throw Error(ErrorCode::kInvalidArgument, "area index out of range", a);
  }
  return in;
}

}  // namespace

GDecomposition g_decomposition(const FhDataset& data, double A, std::size_t area) {
  if (area >= data.m()) throw Error(ErrorCode::kInvalidArgument, "area index out of range", area);
  GlsSolver solver(data);
  solver.factor(A);
  return g_from(data, solver, A, area);
}

std::vector<GDecomposition> g_decomposition_all(const FhDataset& data, double A) {
  GlsSolver solver(data);
  solver.factor(A);
  std::vector<GDecomposition> out;
  out.reserve(data.m());
  for (std::size_t i = 0; i < data.m(); ++i) out.push_back(g_from(data, solver, A, i));
  return out;
}

VarianceFits fit_variances(const FhDataset& data, const FitConfig& cfg, bool with_mg) {
  VarianceFits fits;
  fits.reml = fit_reml(data, cfg);
  if (with_mg) fits.mg = fit_mg_all(data, cfg);
  return fits;
}

double mse_taylor(const FhDataset& data, std::size_t area, TaylorVariant variant,
                  const VarianceFits& fits) {
  switch (variant) {
    case TaylorVariant::kNaiveRe: {
      const GDecomposition g = g_decomposition(data, fits.reml.value, area);
      return g.g1 + g.g2;
    }
    case TaylorVariant::kDlRe: {
      const GDecomposition g = g_decomposition(data, fits.reml.value, area);
      return g.g1 + g.g2 + 2.0 * g.g3;
    }
    case TaylorVariant::kTaylorHl: {
      if (area >= fits.mg.size()) {
        throw Error(ErrorCode::kInvalidArgument, "Taylor.HL needs the MG fit of the area", area);
      }
      return g_decomposition(data, fits.mg[area].value, area).total();
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown Taylor variant");
}

BootstrapEstimate bootstrap_mse(const FhDataset& data, BootstrapVariant variant,
                                const BootstrapOptions& options, const VarianceFits* fits_in) {
  if (options.replicates < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bootstrap needs at least one replicate");
  }
  const bool hl = (variant == BootstrapVariant::kPbHl);
  if (hl && data.m() <= data.p() + 2) {
    throw Error(ErrorCode::kInsufficientDegreesOfFreedom, "PB.HL requires m > p + 2");
  }
  const std::vector<std::size_t> areas = resolve_areas(data, options.areas);
  VarianceFits owned;
  if (fits_in == nullptr) owned = fit_variances(data, options.fit, hl);
  const VarianceFits& fits = fits_in ? *fits_in : owned;
  if (hl && fits.mg.size() != data.m()) {
    throw Error(ErrorCode::kInvalidArgument, "PB.HL needs the MG fit of every area");
  }

  const double a_re = fits.reml.value;
  const Vector a_fit = hl ? values_of(fits.mg) : broadcast(data, a_re);
  const Vector world_mean = data.X() * gls_beta(data, a_fit);
  const Vector v_sd = a_fit.array().sqrt();
  const Vector e_sd = data.D().array().sqrt();
  const auto m = static_cast<Eigen::Index>(data.m());
  const auto n_areas = static_cast<Eigen::Index>(areas.size());
  const int B = options.replicates;

  // BL.RE pieces evaluated on the original data at A_RE.
  Vector theta_at_fit;
  Vector g12_at_fit;
  if (variant == BootstrapVariant::kBlRe) {
    theta_at_fit = eblup(data, a_re).theta_hat;
    const auto g = g_decomposition_all(data, a_re);
    g12_at_fit.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) g12_at_fit(i) = g[static_cast<std::size_t>(i)].g1 + g[static_cast<std::size_t>(i)].g2;
  }

  Matrix contrib = Matrix::Constant(B, n_areas, kMissing);
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
    RandomStream rs(options.seed,
                    stream_id({static_cast<std::uint64_t>(StreamPurpose::kBootstrap),
                               options.context, static_cast<std::uint64_t>(b)}));
    Vector theta_star(m);
    Vector y_star(m);
    for (Eigen::Index j = 0; j < m; ++j) theta_star(j) = world_mean(j) + v_sd(j) * rs.normal();
    for (Eigen::Index j = 0; j < m; ++j) y_star(j) = theta_star(j) + e_sd(j) * rs.normal();
    const FhDataset boot = data.with_y(std::move(y_star));
    const auto row = static_cast<Eigen::Index>(b);

    switch (variant) {
      case BootstrapVariant::kPbRe: {
        auto a_star = fit_with_retry(options.fit, [&](const FitConfig& c) { return fit_reml(boot, c); });
        if (!a_star) return;
        const Vector theta_hat = eblup(boot, a_star->value).theta_hat;
        for (Eigen::Index k = 0; k < n_areas; ++k) {
          const auto i = static_cast<Eigen::Index>(areas[static_cast<std::size_t>(k)]);
          const double err = theta_hat(i) - theta_star(i);
          contrib(row, k) = err * err;
        }
        break;
      }
      case BootstrapVariant::kBlRe: {
        auto a_star = fit_with_retry(options.fit, [&](const FitConfig& c) { return fit_reml(boot, c); });
        if (!a_star) return;
        const auto g_star = g_decomposition_all(data, a_star->value);
        const Vector theta_orig_star = eblup(data, a_star->value).theta_hat;
        for (Eigen::Index k = 0; k < n_areas; ++k) {
          const std::size_t ai = areas[static_cast<std::size_t>(k)];
          const auto i = static_cast<Eigen::Index>(ai);
          const double diff = theta_orig_star(i) - theta_at_fit(i);
          contrib(row, k) = -(g_star[ai].g1 + g_star[ai].g2) + diff * diff;
        }
        break;
      }
      case BootstrapVariant::kPbHl: {
        GlsSolver solver(boot);
        for (Eigen::Index k = 0; k < n_areas; ++k) {
          const std::size_t ai = areas[static_cast<std::size_t>(k)];
          auto a_star =
              fit_with_retry(options.fit, [&](const FitConfig& c) { return fit_mg(boot, ai, c); });
          if (!a_star) continue;
          const double err = blup_at(boot, solver, a_star->value, ai) -
                             theta_star(static_cast<Eigen::Index>(ai));
          contrib(row, k) = err * err;
        }
        break;
      }
    }
  });

  BootstrapEstimate out;
  out.variant = variant;
  out.areas = areas;
  out.replicates = B;
  out.seed = options.seed;
  out.value.resize(n_areas);
  out.standard_error.resize(n_areas);
  std::vector<double> kept;
  kept.reserve(static_cast<std::size_t>(B));
  for (Eigen::Index k = 0; k < n_areas; ++k) {
    kept.clear();
    for (Eigen::Index b = 0; b < B; ++b) {
      if (!std::isnan(contrib(b, k))) kept.push_back(contrib(b, k));
    }
    const int dropped = B - static_cast<int>(kept.size());
    out.dropped = std::max(out.dropped, dropped);
    if (kept.empty()) {
      throw Error(ErrorCode::kTooManyDroppedReplicates, "every bootstrap replicate failed",
                  areas[static_cast<std::size_t>(k)]);
    }
    const double mean = pairwise_mean(kept);
    double se = std::numeric_limits<double>::quiet_NaN();
    if (kept.size() > 1) {
      std::vector<double> sq(kept.size());
      for (std::size_t t = 0; t < kept.size(); ++t) sq[t] = (kept[t] - mean) * (kept[t] - mean);
      const double var = pairwise_sum(sq) / static_cast<double>(kept.size() - 1);
      se = std::sqrt(var / static_cast<double>(kept.size()));
    }
    double value = mean;
    if (variant == BootstrapVariant::kBlRe) {
      value += 2.0 * g12_at_fit(static_cast<Eigen::Index>(areas[static_cast<std::size_t>(k)]));
    }
    out.value(k) = value;
    out.standard_error(k) = se;
  }
  if (static_cast<double>(out.dropped) > options.max_drop_fraction * B) {
    throw Error(ErrorCode::kTooManyDroppedReplicates,
                std::to_string(out.dropped) + " of " + std::to_string(B) +
                    " bootstrap replicates failed to re-fit");
  }
  return out;
}

double mse_bootstrap(const FhDataset& data, std::size_t area, BootstrapVariant variant,
                     int replicates, std::uint64_t seed, const FitConfig& cfg) {
  BootstrapOptions options;
  options.replicates = replicates;
  options.seed = seed;
  options.fit = cfg;
  options.areas = {area};
  return bootstrap_mse(data, variant, options).value(0);
}

BalancedMseVariances balanced_mse_variances(int m, int p, double D, double B, double q) {
  if (m <= p + 4) {
    throw Error(ErrorCode::kDegreesOfFreedomTooSmall, "balanced MSE variances need m > p + 4");
  }
  const double md = m;
  const double pd = p;
  const double common = 2.0 * D * D * B * B / (md - pd - 4.0);
  const double a_factor = (md - 4.0 - md * q) * (md - pd) / (md * (md - pd - 2.0));
  const double b_factor = (md - 2.0 - md * q) / md;
  return {a_factor * a_factor * common, b_factor * b_factor * common};
}

std::string_view mse_estimator_name(MseEstimator e) {
  switch (e) {
    case MseEstimator::kNaiveRe: return "naive.RE";
    case MseEstimator::kDlRe: return "DL.RE";
    case MseEstimator::kPbRe: return "PB.RE";
    case MseEstimator::kBlRe: return "BL.RE";
    case MseEstimator::kTaylorHl: return "Taylor.HL";
    case MseEstimator::kPbHl: return "PB.HL";
  }
  return "unknown";
}

std::optional<MseEstimator> parse_mse_estimator(std::string_view name) {
  for (MseEstimator e : kAllMseEstimators) {
    if (mse_estimator_name(e) == name) return e;
  }
  // The Butar-Lahiri estimator is also commonly labelled PB.BL.
  if (name == "PB.BL") return MseEstimator::kBlRe;
  return std::nullopt;
}

bool is_bootstrap(MseEstimator e) {
  return e == MseEstimator::kPbRe || e == MseEstimator::kBlRe || e == MseEstimator::kPbHl;
}

MseReport compute_mse_report(const FhDataset& data, const std::vector<MseEstimator>& estimators,
                             const MseOptions& options) {
  if (estimators.empty()) throw Error(ErrorCode::kInvalidArgument, "no MSE estimator selected");
  bool need_mg = false;
  bool need_seed = false;
  for (MseEstimator e : estimators) {
    need_mg = need_mg || e == MseEstimator::kTaylorHl || e == MseEstimator::kPbHl;
    need_seed = need_seed || is_bootstrap(e);
  }
  if (need_seed && !options.seed) {
    throw Error(ErrorCode::kInvalidArgument, "a seed is required for bootstrap MSE estimators");
  }
  MseReport report;
  report.estimators = estimators;
  report.fingerprint = dataset_fingerprint(data);
  report.fits = fit_variances(data, options.fit, need_mg);
  const auto m = static_cast<Eigen::Index>(data.m());
  const auto g_re = g_decomposition_all(data, report.fits.reml.value);

  for (MseEstimator e : estimators) {
    if (report.values.count(e) != 0) continue;
    Vector v(m);
    switch (e) {
      case MseEstimator::kNaiveRe:
        for (Eigen::Index i = 0; i < m; ++i) v(i) = g_re[static_cast<std::size_t>(i)].g1 + g_re[static_cast<std::size_t>(i)].g2;
        break;
      case MseEstimator::kDlRe:
        for (Eigen::Index i = 0; i < m; ++i) {
          const auto& g = g_re[static_cast<std::size_t>(i)];
          v(i) = g.g1 + g.g2 + 2.0 * g.g3;
        }
        break;
      case MseEstimator::kTaylorHl:
        for (Eigen::Index i = 0; i < m; ++i) {
          v(i) = mse_taylor(data, static_cast<std::size_t>(i), TaylorVariant::kTaylorHl, report.fits);
        }
        break;
      case MseEstimator::kPbRe:
      case MseEstimator::kBlRe:
      case MseEstimator::kPbHl: {
        const BootstrapVariant variant = (e == MseEstimator::kPbRe)   ? BootstrapVariant::kPbRe
                                         : (e == MseEstimator::kBlRe) ? BootstrapVariant::kBlRe
                                                                      : BootstrapVariant::kPbHl;
        BootstrapOptions bo;
        bo.replicates = options.replicates;
        bo.seed = *options.seed;
        bo.fit = options.fit;
        const BootstrapEstimate est = bootstrap_mse(data, variant, bo, &report.fits);
        v = est.value;
        report.bootstrap[e] = BootstrapMeta{est.replicates, est.seed,
                                            variant == BootstrapVariant::kPbHl ? "MG" : "REML",
                                            est.dropped};
        break;
      }
    }
    report.values[e] = std::move(v);
  }
  return report;
}

std::uint64_t dataset_fingerprint(const FhDataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t word) {
    for (int k = 0; k < 8; ++k) {
      h ^= (word >> (8 * k)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  mix(data.m());
  mix(data.p());
  for (Eigen::Index i = 0; i < data.y().size(); ++i) mix(std::bit_cast<std::uint64_t>(data.y()(i)));
  for (Eigen::Index j = 0; j < data.X().cols(); ++j) {
    for (Eigen::Index i = 0; i < data.X().rows(); ++i) {
      mix(std::bit_cast<std::uint64_t>(data.X()(i, j)));
    }
  }
  for (Eigen::Index i = 0; i < data.D().size(); ++i) mix(std::bit_cast<std::uint64_t>(data.D()(i)));
  return h;
}

}  // namespace sae
