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

#include "sae/simulation.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "sae/error.hpp"
#include "sae/parallel.hpp"
#include "sae/rng.hpp"
#include "sae/variance.hpp"

namespace sae {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Moments {
  double mean = 0.0;
  double rb = 0.0;
  double rrmse = 0.0;
  double se_rb = kNaN;
};

// Accepts a single estimate; the standard error is NaN below two.
Moments moments_against(std::span<const double> est, double truth) {
  std::vector<double> diff(est.size());
  std::vector<double> sq(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    diff[k] = est[k] - truth;
    sq[k] = diff[k] * diff[k];
  }
  Moments out;
  out.mean = pairwise_mean(est);
  const double bias = pairwise_mean(diff);
  out.rb = 100.0 * bias / truth;
  out.rrmse = 100.0 * std::sqrt(pairwise_mean(sq)) / truth;
  if (est.size() > 1) {
    std::vector<double> dev(est.size());
    for (std::size_t k = 0; k < est.size(); ++k) dev[k] = (diff[k] - bias) * (diff[k] - bias);
    const double var = pairwise_sum(dev) / static_cast<double>(est.size() - 1);
    out.se_rb = 100.0 * std::sqrt(var / static_cast<double>(est.size())) / std::abs(truth);
  }
  return out;
}

double mean_se(std::span<const double> values, double mean) {
  if (values.size() < 2) return kNaN;
  std::vector<double> dev(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) dev[k] = (values[k] - mean) * (values[k] - mean);
  const double var = pairwise_sum(dev) / static_cast<double>(values.size() - 1);
  return std::sqrt(var / static_cast<double>(values.size()));
}

template <typename Fit>
std::optional<HyperEstimate> fit_or_retry(const FitConfig& cfg, Fit&& fit) {
  try {
    return fit(cfg);
  } catch (const Error&) {
  }
  FitConfig denser = cfg;
  denser.grid_points = cfg.grid_points * 4;
  try {
    return fit(denser);
  } catch (const Error&) {
  }
  return std::nullopt;
}

struct ReplicateOutcome {
  bool ok = false;
  double a_re = 0.0;
  Vector a_mg;
  Vector b_re;
  Vector b_hl;
  Vector sq_re;
  Vector sq_hl;
  Vector sq_blup;
  std::map<MseEstimator, Vector> mse;  // NaN where not computed
};

BootstrapVariant to_variant(MseEstimator e) {
  switch (e) {
    case MseEstimator::kPbRe: return BootstrapVariant::kPbRe;
    case MseEstimator::kBlRe: return BootstrapVariant::kBlRe;
    default: return BootstrapVariant::kPbHl;
  }
}

ReplicateOutcome run_replicate(const SimDesign& design, std::size_t r) {
  ReplicateOutcome out;
  const SimDraw draw = simulate_fh(design, r);
  const FhDataset data = make_dataset(design.design, draw.y);
  const auto m = static_cast<Eigen::Index>(data.m());

  auto reml = fit_or_retry(design.fit, [&](const FitConfig& c) { return fit_reml(data, c); });
  if (!reml) return out;
  VarianceFits fits;
  fits.reml = *reml;
  fits.mg.resize(data.m());
  for (std::size_t i = 0; i < data.m(); ++i) {
    auto mg = fit_or_retry(design.fit, [&](const FitConfig& c) { return fit_mg(data, i, c); });
    if (!mg) return out;
    fits.mg[i] = *mg;
  }

  out.a_re = fits.reml.value;
  out.a_mg = values_of(fits.mg);
  const Vector& D = data.D();
  out.b_re = D.array() / (D.array() + out.a_re);
  out.b_hl = D.array() / (D.array() + out.a_mg.array());
  const Vector theta_re = eblup(data, out.a_re).theta_hat;
  const Vector theta_hl = eblup_area_specific(data, out.a_mg).theta_hat;
  const Vector theta_blup = eblup(data, design.A_true).theta_hat;
  out.sq_re = (theta_re - draw.theta).array().square();
  out.sq_hl = (theta_hl - draw.theta).array().square();
  out.sq_blup = (theta_blup - draw.theta).array().square();

  std::vector<GDecomposition> g_re;
  for (MseEstimator e : design.mse_estimators) {
    if (out.mse.count(e) != 0) continue;
    Vector v = Vector::Constant(m, kNaN);
    if (!is_bootstrap(e)) {
      if (e != MseEstimator::kTaylorHl && g_re.empty()) g_re = g_decomposition_all(data, out.a_re);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        switch (e) {
          case MseEstimator::kNaiveRe: v(i) = g_re[ui].g1 + g_re[ui].g2; break;
          case MseEstimator::kDlRe: v(i) = g_re[ui].g1 + g_re[ui].g2 + 2.0 * g_re[ui].g3; break;
          default: v(i) = g_decomposition(data, out.a_mg(i), ui).total(); break;
        }
      }
    } else {
      BootstrapOptions bo;
      bo.replicates = design.n_boot;
      bo.seed = design.seed;
      bo.context = static_cast<std::uint64_t>(r) + 1;
      bo.fit = design.fit;
      bo.areas = design.bootstrap_areas;
      bo.max_drop_fraction = design.max_drop_fraction;
      BootstrapEstimate est;
      try {
        est = bootstrap_mse(data, to_variant(e), bo, &fits);
      } catch (const Error&) {
        return out;
      }
      for (std::size_t k = 0; k < est.areas.size(); ++k) {
        v(static_cast<Eigen::Index>(est.areas[k])) = est.value(static_cast<Eigen::Index>(k));
      }
    }
    out.mse[e] = std::move(v);
  }
  out.ok = true;
  return out;
}

}  // namespace

void validate_sim_design(const SimDesign& design) {
  if (!design.design) throw Error(ErrorCode::kInvalidArgument, "simulation design has no covariates");
  if (design.n_mc < 1) throw Error(ErrorCode::kInvalidArgument, "n_mc must be >= 1");
  if (!(design.A_true >= 0.0) || !std::isfinite(design.A_true)) {
    throw Error(ErrorCode::kInvalidArgument, "A_true must be finite and >= 0");
  }
  if (design.beta_true.size() != design.design->X.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "beta_true length does not match columns of X");
  }
  if (!design.beta_true.allFinite()) throw Error(ErrorCode::kNonFiniteInput, "non-finite beta_true");
  bool any_boot = false;
  for (MseEstimator e : design.mse_estimators) any_boot = any_boot || is_bootstrap(e);
  if (any_boot && design.n_boot < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_boot must be >= 1 with bootstrap estimators");
  }
  const auto m = static_cast<std::size_t>(design.design->X.rows());
  const auto p = static_cast<std::size_t>(design.design->X.cols());
  if (m <= p + 2) {
    throw Error(ErrorCode::kInsufficientDegreesOfFreedom, "simulation needs m > p + 2 for MG fits");
  }
  for (std::size_t a : design.bootstrap_areas) {
    if (a >= m) throw Error(ErrorCode::kInvalidArgument, "bootstrap area out of range", a);
  }
}

SimDesign surrogate_design() {
  constexpr std::size_t m = 15;
  constexpr double d_min = 1.883;
  constexpr double d_max = 31.694;
  Matrix X(m, 2);
  Vector D(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double golden = static_cast<double>(i + 1) * 0.6180339887498949;
    X(row, 0) = 1.0;
    X(row, 1) = golden - std::floor(golden);
    D(row) = d_min * std::pow(d_max / d_min, static_cast<double>(i) / static_cast<double>(m - 1));
  }
  SimDesign sd;
  sd.name = "surrogate";
  sd.design = validate_design({}, std::move(X), std::move(D));
  sd.A_true = 15.94;
  sd.beta_true = Vector(2);
  sd.beta_true << 10.0, 2.0;
  sd.mse_estimators.assign(std::begin(kAllMseEstimators), std::end(kAllMseEstimators));
  return sd;
}

SimDesign balanced_design(std::size_t m, double A, double D) {
  SimDesign sd;
  sd.name = "balanced";
  sd.design = validate_design({}, Matrix::Ones(static_cast<Eigen::Index>(m), 1),
                              Vector::Constant(static_cast<Eigen::Index>(m), D));
  sd.A_true = A;
  sd.beta_true = Vector::Zero(1);
  return sd;
}

SimDraw simulate_fh(const SimDesign& design, std::uint64_t replicate) {
  const Matrix& X = design.design->X;
  const Vector& D = design.design->D;
  const Eigen::Index m = X.rows();
  RandomStream rs(design.seed,
                  stream_id({static_cast<std::uint64_t>(StreamPurpose::kSimulate), replicate}));
  SimDraw out;
  out.theta = X * design.beta_true;
  const double v_sd = std::sqrt(design.A_true);
  for (Eigen::Index i = 0; i < m; ++i) out.theta(i) += v_sd * rs.normal();
  out.y.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out.y(i) = out.theta(i) + std::sqrt(D(i)) * rs.normal();
  return out;
}

RbRrmse rb_rrmse(std::span<const double> estimates, double truth) {
  if (truth == 0.0) throw Error(ErrorCode::kZeroTruth, "relative bias needs a nonzero truth");
  if (estimates.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "relative bias needs at least two replicates");
  }
  const Moments mo = moments_against(estimates, truth);
  return {mo.rb, mo.rrmse};
}

const MetricRow* MetricTable::find(std::size_t area, std::string_view target,
                                   std::string_view estimator) const {
  for (const MetricRow& row : rows) {
    if (row.area == area && row.target == target && row.estimator == estimator) return &row;
  }
  return nullptr;
}

MetricTable run_monte_carlo(const SimDesign& design) {
  validate_sim_design(design);
  const auto n_mc = static_cast<std::size_t>(design.n_mc);
  std::vector<ReplicateOutcome> outcomes(n_mc);
  parallel_for(n_mc, [&](std::size_t r) { outcomes[r] = run_replicate(design, r); });

  std::vector<const ReplicateOutcome*> kept;
  kept.reserve(n_mc);
  for (const auto& o : outcomes) {
    if (o.ok) kept.push_back(&o);
  }
  MetricTable table;
  table.design_name = design.name;
  table.seed = design.seed;
  table.n_mc = design.n_mc;
  table.n_kept = static_cast<int>(kept.size());
  table.n_dropped = design.n_mc - table.n_kept;
  if (kept.empty() ||
      static_cast<double>(table.n_dropped) > design.max_drop_fraction * design.n_mc) {
    throw Error(ErrorCode::kTooManyDroppedReplicates,
                std::to_string(table.n_dropped) + " of " + std::to_string(design.n_mc) +
                    " Monte Carlo replicates failed");
  }
  int zeros = 0;
  for (const auto* o : kept) zeros += (o->a_re == 0.0) ? 1 : 0;
  table.reml_zero_fraction = static_cast<double>(zeros) / static_cast<double>(kept.size());

  const Design& dz = *design.design;
  const std::size_t m = static_cast<std::size_t>(dz.X.rows());
  const int n = table.n_kept;
  std::vector<double> buf(kept.size());

  auto add_rb_row = [&](std::size_t area, std::string target, std::string estimator,
                        double truth) {
    const Moments mo = moments_against(buf, truth);
    table.rows.push_back(MetricRow{area, area == SIZE_MAX ? "" : dz.area_ids[area],
                                   std::move(target), std::move(estimator), truth, mo.mean,
                                   mo.rb, mo.rrmse, mo.se_rb, n});
  };
  auto gather = [&](auto&& get) {
    for (std::size_t k = 0; k < kept.size(); ++k) buf[k] = get(*kept[k]);
  };

  for (std::size_t i = 0; i < m; ++i) {
    const auto ei = static_cast<Eigen::Index>(i);
    const double d = dz.D(ei);
    const double b_true = d / (d + design.A_true);

    if (design.A_true > 0.0) {
      gather([](const ReplicateOutcome& o) { return o.a_re; });
      add_rb_row(i, "A", "RE", design.A_true);
      gather([ei](const ReplicateOutcome& o) { return o.a_mg(ei); });
      add_rb_row(i, "A", "HL", design.A_true);
    }
    gather([ei](const ReplicateOutcome& o) { return o.b_re(ei); });
    add_rb_row(i, "B", "RE", b_true);
    gather([ei](const ReplicateOutcome& o) { return o.b_hl(ei); });
    add_rb_row(i, "B", "HL", b_true);
    if (design.include_true_a) {
      gather([b_true](const ReplicateOutcome&) { return b_true; });
      add_rb_row(i, "B", "TRUE", b_true);
    }

    double emp_re = 0.0;
    double emp_hl = 0.0;
    const std::pair<const char*, Vector ReplicateOutcome::*> eblups[] = {
        {"RE", &ReplicateOutcome::sq_re},
        {"HL", &ReplicateOutcome::sq_hl},
        {"BLUP", &ReplicateOutcome::sq_blup}};
    for (const auto& [label, member] : eblups) {
      gather([ei, member](const ReplicateOutcome& o) { return (o.*member)(ei); });
      const double mean = pairwise_mean(buf);
      table.rows.push_back(MetricRow{i, dz.area_ids[i], "EBLUP_MSE", label, kNaN, mean, kNaN,
                                     kNaN, mean_se(buf, mean), n});
      if (std::string_view(label) == "RE") emp_re = mean;
      if (std::string_view(label) == "HL") emp_hl = mean;
    }
    gather([ei](const ReplicateOutcome& o) { return o.sq_hl(ei) - o.sq_re(ei); });
    const double diff = pairwise_mean(buf);
    table.rows.push_back(MetricRow{i, dz.area_ids[i], "EBLUP_MSE", "HL-RE", kNaN, diff, kNaN,
                                   kNaN, mean_se(buf, diff), n});

    for (MseEstimator e : design.mse_estimators) {
      if (std::isnan(kept.front()->mse.at(e)(ei))) continue;  // not computed for this area
      gather([e, ei](const ReplicateOutcome& o) { return o.mse.at(e)(ei); });
      const std::string name(mse_estimator_name(e));
      if (table.find(i, "MSE[RE]", name) != nullptr) continue;
      add_rb_row(i, "MSE[RE]", name, emp_re);
      add_rb_row(i, "MSE[HL]", name, emp_hl);
    }
  }
  return table;
}

}  // namespace sae
