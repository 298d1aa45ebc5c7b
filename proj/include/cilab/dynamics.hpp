#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cilab/model.hpp"
#include "cilab/rewards.hpp"
#include "cilab/trajectory.hpp"

namespace cilab {

enum class InitKind { uniform, concentrated };

std::string_view to_string(InitKind k);
InitKind parse_init(std::string_view name);

struct IntegratorConfig {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double t_max = 1e9;
  // Threshold on max_i |rho_i (E_i - sum_j rho_j E_j)|, the replicator field
  // before reward normalisation. A step also counts as stationary when the
  // average velocity over the last equilibrium_window steps is below it.
  double equilibrium_tol = 1e-9;
  std::size_t equilibrium_window = 10;
  double simplex_floor = 0.0;
  double record_start = 1e-2;
  std::size_t points_per_decade = 50;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  std::size_t max_steps = 2'000'000;
  // Skip the per-step reward rescaling (used to compare fixed points).
  bool normalize_rewards = true;
  // Smallest mean reward used as the rescaling divisor.
  double normalization_floor = 1e-6;
  RewardOptions rewards{};

  void validate() const;
};

// Result of one field evaluation.
struct ReplicatorField {
  std::vector<double> rate;  // d rho / dt
  double mean_reward = 0.0;  // sum_i rho_i E_i before normalisation
  double scale = 1.0;        // rate = scale * rho_i (E_i - mean_reward)
};

// Rescales rewards so that sum_i rho_i E_i = 1 and returns rho_i (E_i - 1).
// The divisor is max(mean reward, floor), so the field stays bounded where
// every reward vanishes.
ReplicatorField replicator_field(std::span<const double> rho, std::span<const double> rewards,
                                 bool normalize = true, double floor = 1e-6);

std::vector<double> replicator_rhs(const Attention& attention, const ExpectedRewards& rewards);

// max_i |rho_i (E_i - sum_j rho_j E_j)|.
double raw_field_max(std::span<const double> rho, std::span<const double> rewards);

Attention initial_allocation(std::size_t n, InitKind kind);

// First time at which `window` consecutive derivative magnitudes are all below
// tol; the returned time is that of the last sample in the window.
std::optional<double> detect_equilibrium(std::span<const double> times, std::span<const double> max_derivative,
                                         double tol, std::size_t window = 10);

// Adaptive Bogacki-Shampine 2(3) integration of the normalised replicator
// equation with log-spaced recording. Throws StiffnessError on step underflow.
Trajectory integrate(const FactorModel& model, const RewardSpec& spec, const Attention& init,
                     const IntegratorConfig& cfg = {});

}  // namespace cilab
