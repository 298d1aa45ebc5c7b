#include "cilab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cilab/dynamics.hpp"
#include "cilab/error.hpp"
#include "cilab/normal.hpp"
#include "cilab/rng.hpp"

namespace cilab {

namespace {

double sum_squares(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct McField {
  std::vector<double> rewards;
  std::vector<double> reward_se;
  double mean = 0.0;
};

McField mc_field(const FactorModel& model, const Attention& rho, const RewardSpec& spec, std::size_t samples,
                 std::uint64_t seed, unsigned threads) {
  auto est = mc_expected_rewards(model, rho, spec, samples, seed, threads);
  McField out;
  out.rewards.reserve(est.size());
  out.reward_se.reserve(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    out.rewards.push_back(est[i].value);
    out.reward_se.push_back(est[i].std_error);
    out.mean += rho[i] * est[i].value;
  }
  return out;
}

}  // namespace

Perturbation Perturbation::make(const FactorModel& model, std::vector<double> delta_rel, double k) {
  const std::size_t n = model.size();
  if (delta_rel.size() != n) throw InvalidArgument("perturbation size does not match the model");
  if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidArgument("perturbation scale must be finite and >= 0");
  double total = 0.0;
  for (double d : delta_rel) {
    if (!std::isfinite(d)) throw InvalidArgument("perturbation entries must be finite");
    total += d;
  }
  if (std::abs(total) > 1e-12) throw InvalidArgument("perturbation must sum to zero");
  Perturbation p;
  p.k = k;
  p.delta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.delta[i] = k * delta_rel[i];
    if (model.beta(i) + p.delta[i] < -1e-15) throw InvalidArgument("perturbation leaves the simplex");
  }
  p.delta_rel = std::move(delta_rel);
  p.sigma_delta = std::sqrt(sum_squares(p.delta));
  p.sigma_b = std::sqrt(sum_squares(model.beta()));
  return p;
}

Attention Perturbation::apply(const FactorModel& model) const {
  std::vector<double> rho(model.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::max(0.0, model.beta(i) + delta[i]);
  return Attention::normalized(std::move(rho));
}

StabilityReport StabilityReport::compare(double predicted, double measured, double tolerance) {
  StabilityReport r;
  r.predicted_rate = predicted;
  r.measured_rate = measured;
  r.relative_error = std::abs(measured - predicted) / std::max(std::abs(predicted), 1e-12);
  r.passed = r.relative_error <= tolerance;
  return r;
}

double stationarity_check(const FactorModel& model, const RewardSpec& spec, const Attention& candidate,
                          const RewardOptions& options) {
  auto rewards = expected_rewards(model, candidate, spec, options);
  return raw_field_max(candidate.values(), rewards.values);
}

double predicted_two_factor_rate(const FactorModel& model, std::size_t i, std::size_t j, double delta) {
  const double sigma_b = std::sqrt(sum_squares(model.beta()));
  return -0.5 * normal::pdf(model.beta(i) - model.beta(j), 0.0, sigma_b) * delta;
}

TwoFactorResult two_factor_perturbation(const FactorModel& model, std::size_t i, std::size_t j, double delta,
                                        const McFieldOptions& options) {
  const std::size_t n = model.size();
  if (i >= n || j >= n || i == j) throw InvalidArgument("two distinct factor indices are required");
  if (!(delta >= 0.0) || delta > 0.01) throw InvalidArgument("delta must lie in [0, 0.01]");
  if (delta > 0.0 && !(model.beta(j) > delta)) throw InvalidArgument("delta must be smaller than beta_j");

  std::vector<double> rel(n, 0.0);
  rel[i] = 1.0;
  rel[j] = -1.0;
  const auto p = Perturbation::make(model, std::move(rel), delta);
  const auto rho = p.apply(model);
  const RewardSpec spec{RewardScheme::minority};
  const auto f = mc_field(model, rho, spec, options.samples, options.seed, options.threads);

  const double rate_i = f.rewards[i] - f.mean;
  const double rate_j = f.rewards[j] - f.mean;
  TwoFactorResult out;
  const double measured = 0.5 * (rate_i - rate_j);
  out.measured_std_error = 0.5 * std::hypot(f.reward_se[i], f.reward_se[j]);
  out.report = StabilityReport::compare(predicted_two_factor_rate(model, i, j, delta), measured, options.tolerance);
  out.restoring = delta > 0.0 ? measured < 0.0 : measured == 0.0;

  double worst = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    if (l == i || l == j) continue;
    worst = std::max(worst, std::abs(f.rewards[l] - f.mean));
  }
  out.bystander_ratio = std::abs(rate_i) > 0.0 ? worst / std::abs(rate_i) : (worst > 0.0 ? INFINITY : 0.0);
  return out;
}

std::vector<double> predicted_extensive_field(const FactorModel& model, std::span<const double> delta) {
  const auto beta = model.beta();
  if (delta.size() != beta.size()) throw InvalidArgument("perturbation size does not match the model");
  const double sigma_b = std::sqrt(sum_squares(beta));
  const double common = dot(beta, delta);
  const double scale = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi) * sigma_b);
  std::vector<double> out(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i) out[i] = beta[i] * scale * (common - delta[i]);
  return out;
}

std::vector<ExtensiveReport> extensive_perturbation(const FactorModel& model, std::span<const double> delta_rel,
                                                    std::span<const double> k_values,
                                                    const McFieldOptions& options) {
  if (k_values.empty()) return {};
  const double k0 = k_values.front();
  const RewardSpec spec{RewardScheme::minority};
  std::vector<ExtensiveReport> out;
  out.reserve(k_values.size());
  for (std::size_t step = 0; step < k_values.size(); ++step) {
    const double k = k_values[step];
    if (!(k > 0.0)) throw InvalidArgument("perturbation scales must be positive");
    const auto p = Perturbation::make(model, {delta_rel.begin(), delta_rel.end()}, k);
    const auto rho = p.apply(model);

    ExtensiveReport r;
    r.k = k;
    r.samples = static_cast<std::size_t>(std::ceil(static_cast<double>(options.samples) * k0 / k));
    const auto f = mc_field(model, rho, spec, r.samples, derive_seed(options.seed, {step}), options.threads);
    r.predicted = predicted_extensive_field(model, p.delta);
    r.measured.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) r.measured[i] = rho[i] * (f.rewards[i] - f.mean);

    const double pred_norm2 = sum_squares(r.predicted);
    const double pred_norm = std::sqrt(pred_norm2);
    double diff2 = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
      const double d = r.measured[i] - r.predicted[i];
      diff2 += d * d;
    }
    r.componentwise_error = pred_norm > 0.0 ? std::sqrt(diff2) / pred_norm : std::sqrt(diff2);
    r.ratio = pred_norm2 > 0.0 ? dot(r.measured, r.predicted) / pred_norm2 : 0.0;
    r.report = StabilityReport::compare(pred_norm, r.ratio * pred_norm, options.tolerance);
    r.report.relative_error = r.componentwise_error;
    r.report.passed = r.componentwise_error <= options.tolerance;
    const double total = sum_squares(p.delta);
    for (double d : p.delta) r.max_share = std::max(r.max_share, total > 0.0 ? d * d / total : 0.0);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> random_sign_shape(const FactorModel& model, std::uint64_t seed) {
  auto rng = make_rng(seed, {0x5d});
  CoinStream coins(rng);
  const auto beta = model.beta();
  std::vector<double> out(beta.size());
  double common = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    out[i] = coins.next() ? beta[i] : -beta[i];
    common += out[i];
  }
  double total = 0.0;
  for (double b : beta) total += b;
  for (std::size_t i = 0; i < beta.size(); ++i) out[i] -= beta[i] * common / total;
  return out;
}

std::vector<double> beta_correlated_shape(const FactorModel& model) {
  const auto beta = model.beta();
  const double s2 = sum_squares(beta);
  std::vector<double> out(beta.size());
  double largest = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    out[i] = beta[i] * (beta[i] - s2);
    largest = std::max(largest, std::abs(out[i]));
  }
  if (largest == 0.0) return out;
  const double scale = beta[0] / largest;
  for (double& d : out) d *= scale;
  // Remove the rounding residue so the shape sums to zero.
  double total = 0.0;
  for (double d : out) total += d;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= beta[i] * total;
  return out;
}

CorrelatedStationarity correlated_stationarity_check(const FactorModel& model, const RewardSpec& spec,
                                                     std::size_t samples, std::uint64_t seed, unsigned threads) {
  const auto rho = Attention::normalized({model.beta().begin(), model.beta().end()});
  const auto f = mc_field(model, rho, spec, samples, seed, threads);
  CorrelatedStationarity out;
  out.field.resize(model.size());
  out.std_error.resize(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    out.field[i] = rho[i] * (f.rewards[i] - f.mean);
    out.std_error[i] = rho[i] * f.reward_se[i];
    out.max_abs = std::max(out.max_abs, std::abs(out.field[i]));
    if (std::abs(out.field[i]) > 3.0 * out.std_error[i]) ++out.outliers;
  }
  return out;
}

}  // namespace cilab
