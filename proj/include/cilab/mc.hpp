#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cilab/dynamics.hpp"
#include "cilab/model.hpp"
#include "cilab/trajectory.hpp"

namespace cilab {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

// Worlds are drawn in batches of this size; batch b uses the stream
// derive_seed(seed, {tag, b}) and batch partial sums are reduced in batch
// order, so results do not depend on the thread count.
inline constexpr std::size_t kMcBatch = 1 << 14;

// Per-factor mean of f(z_i) [Y = x_i] over sampled worlds. Correlated models
// are sampled through their block structure.
std::vector<McEstimate> mc_expected_rewards(const FactorModel& model, const Attention& attention,
                                            const RewardSpec& spec, std::size_t samples, std::uint64_t seed,
                                            unsigned threads = 1);

McEstimate mc_accuracy(const FactorModel& model, const Attention& attention, std::size_t samples,
                       std::uint64_t seed, unsigned threads = 1);

struct FinitePopulationConfig {
  std::size_t population = 100000;
  std::size_t rounds = 20000;
  double imitation_rate = 0.05;
  std::uint64_t seed = 0;
  std::size_t record_every = 10;
  InitKind init = InitKind::uniform;

  void validate() const;
};

// Agent-based pairwise proportional imitation. Each round one world is
// drawn, every agent is paid f(z) for its camp when correct (z floored at
// 1/N), then each agent with probability imitation_rate looks at a random
// peer and adopts the peer's factor with probability
// max(0, peer payoff - own payoff) / (largest payoff this round).
Trajectory finite_population_run(const FactorModel& model, const RewardSpec& spec,
                                 const FinitePopulationConfig& cfg);

// Componentwise mean of the recorded states with time >= from_time.
std::vector<double> average_state(const Trajectory& traj, double from_time);

}  // namespace cilab
