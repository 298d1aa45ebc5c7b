#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cilab/correlated.hpp"
#include "cilab/mc.hpp"
#include "cilab/model.hpp"
#include "cilab/rewards.hpp"

namespace cilab {

// Attention perturbation Delta = k * delta_rel around rho = beta.
struct Perturbation {
  std::vector<double> delta;
  double k = 0.0;
  std::vector<double> delta_rel;
  double sigma_delta = 0.0;  // sqrt(sum Delta^2)
  double sigma_b = 0.0;      // sqrt(sum beta^2)

  // Validates sum(delta_rel) = 0 (to 1e-12) and beta + k delta_rel >= 0.
  static Perturbation make(const FactorModel& model, std::vector<double> delta_rel, double k);

  Attention apply(const FactorModel& model) const;
};

struct StabilityReport {
  double predicted_rate = 0.0;
  double measured_rate = 0.0;
  double relative_error = 0.0;
  bool passed = false;

  static StabilityReport compare(double predicted, double measured, double tolerance);
};

// max_i |rho_i (E_i - sum_j rho_j E_j)| with rewards from the dispatching engine.
double stationarity_check(const FactorModel& model, const RewardSpec& spec, const Attention& candidate,
                          const RewardOptions& options = {});

struct McFieldOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 0;
  double tolerance = 0.25;
  unsigned threads = 1;
};

// -(1/2) phi(beta_i - beta_j; 0, sigma_B) Delta, sigma_B = sqrt(sum beta^2).
double predicted_two_factor_rate(const FactorModel& model, std::size_t i, std::size_t j, double delta);

struct TwoFactorResult {
  StabilityReport report;
  double measured_std_error = 0.0;
  // max_l |E_l - Ebar| / |E_i - Ebar| over bystanders l != i, j.
  double bystander_ratio = 0.0;
  bool restoring = false;  // measured rate has the sign opposite to Delta
};

// Moves Delta of attention from factor j to factor i at rho = beta and
// measures the per-capita replicator rates (E_i - Ebar) with Monte Carlo
// minority rewards, projected on (e_i - e_j) / 2. Requires 0 <= Delta < beta_j
// and Delta <= 0.01.
TwoFactorResult two_factor_perturbation(const FactorModel& model, std::size_t i, std::size_t j, double delta,
                                        const McFieldOptions& options = {});

// beta_i / (2 sqrt(2 pi) sigma_B) * (-Delta_i + sum_j beta_j Delta_j).
std::vector<double> predicted_extensive_field(const FactorModel& model, std::span<const double> delta);

struct ExtensiveReport {
  double k = 0.0;
  std::size_t samples = 0;
  // Scalars are the predicted norm and the projection of the measured field
  // on the predicted direction.
  StabilityReport report;
  // ||measured - predicted|| / ||predicted||
  double componentwise_error = 0.0;
  // <measured, predicted> / ||predicted||^2
  double ratio = 0.0;
  // Largest |Delta_i|^2 share of sum Delta^2; the normal limits need it small.
  double max_share = 0.0;
  std::vector<double> predicted;
  std::vector<double> measured;
};

// Measures the raw minority-reward replicator field at rho = beta + k delta
// for each k. Monte Carlo sample counts scale as options.samples * k_0 / k so
// the relative noise stays level as the signal shrinks.
std::vector<ExtensiveReport> extensive_perturbation(const FactorModel& model, std::span<const double> delta_rel,
                                                    std::span<const double> k_values,
                                                    const McFieldOptions& options = {});

// Shape with random signs: delta_i = s_i beta_i, recentred by a beta
// multiple so it sums to zero.
std::vector<double> random_sign_shape(const FactorModel& model, std::uint64_t seed);

// Beta-correlated shape beta_i (beta_i - sum beta^2), scaled to max |delta| = max beta.
std::vector<double> beta_correlated_shape(const FactorModel& model);

struct CorrelatedStationarity {
  std::vector<double> field;      // rho_i (E_i - Ebar)
  std::vector<double> std_error;  // rho_i * se(E_i)
  double max_abs = 0.0;
  // Components with |field| > 3 standard errors.
  std::size_t outliers = 0;
};

// Monte Carlo replicator field at rho = beta for a block-correlated model.
CorrelatedStationarity correlated_stationarity_check(const FactorModel& model, const RewardSpec& spec,
                                                     std::size_t samples, std::uint64_t seed, unsigned threads = 1);

}  // namespace cilab
