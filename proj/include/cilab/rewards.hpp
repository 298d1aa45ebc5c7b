#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "cilab/model.hpp"
#include "cilab/quadrature.hpp"

namespace cilab {

// Below this many factors the automatic mode enumerates worlds exactly.
inline constexpr std::size_t kApproxThreshold = 10;

// Moments of (psi, z_i) conditioned on x_i = +1.
struct ConditionalMoments {
  double mu_psi = 0.0;     // beta_i
  double mu_z = 0.0;       // (1 + rho_i) / 2
  double k_psi_psi = 0.0;  // sum_{j != i} beta_j^2
  double k_zz = 0.0;       // sum_{j != i} rho_j^2 / 4
  double k_psi_z = 0.0;    // sum_{j != i} beta_j rho_j / 2
  // k_psi_psi - k_psi_z^2 / k_zz, evaluated from regression residuals so it
  // stays accurate as rho approaches beta. Negative means not supplied.
  double k_cond = -1.0;
};

enum class RewardMode { automatic, exact, approx, monte_carlo };

std::string_view to_string(RewardMode m);
RewardMode parse_reward_mode(std::string_view name);

struct ExpectedRewards {
  std::vector<double> values;
  RewardMode mode = RewardMode::exact;
};

struct RewardOptions {
  RewardMode mode = RewardMode::automatic;
  QuadratureConfig quad{};
  std::size_t exact_limit = kExactLimit;
  std::size_t mc_samples = 100000;
  std::uint64_t mc_seed = 0;
};

// 2^-n sum over worlds of f(z_i) [Y = x_i]; z is floored at epsilon so a
// factor nobody attends to still has a finite market reward.
ExpectedRewards expected_rewards_exact(const FactorModel& model, const Attention& attention,
                                       const RewardSpec& spec, std::size_t limit = kExactLimit);

ConditionalMoments conditional_moments(const FactorModel& model, const Attention& attention, std::size_t i);

// Phi(beta_i / sqrt(sum_{j != i} beta_j^2)); independent of attention.
double expected_reward_binary_approx(const FactorModel& model, std::size_t i);

// Integrates f(z) N(z; mu_z, K_zz) P(psi > 0 | x_i = 1, z) over [epsilon, 1]
// (upper limit 1/2 for minority rewards) with the conditional-normal
// probability P(psi > 0 | z) = Phi(m(z) / s). Throws DegenerateAttention when
// K_zz = 0.
double expected_reward_approx(const FactorModel& model, const Attention& attention, const RewardSpec& spec,
                              std::size_t i, const QuadratureConfig& quad = {});

// Dispatch. Automatic mode picks exact for n < 10 and approx otherwise. In
// approx mode binary rewards use the closed form; a degenerate attention
// vector falls back to exact enumeration when n is within the exact limit.
ExpectedRewards expected_rewards(const FactorModel& model, const Attention& attention, const RewardSpec& spec,
                                 const RewardOptions& options = {});

}  // namespace cilab
