#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cilab/model.hpp"

namespace cilab {

// Block-equicorrelated factor structure: disjoint blocks share a common
// pairwise covariance c in [0, 1); factors in different blocks are
// independent. Realised by one latent fair bit per block, copied by each
// member with probability p where (2p - 1)^2 = c.
struct BlockStructure {
  std::vector<std::vector<std::size_t>> blocks;
  double c = 0.0;

  double copy_probability() const;
};

// Recognises the supported family; throws UnsupportedCovariance otherwise.
// A model without covariance yields singleton blocks.
BlockStructure block_structure(const FactorModel& model);

// Fills x with one draw from the block model.
void draw_block_signs(const BlockStructure& blocks, Rng& rng, std::span<std::int8_t> x);

WorldSample sample_correlated_world(const FactorModel& model, Rng& rng);

struct CorrelatedSigmas {
  double sigma_b = 0.0;      // sqrt(sum_jl beta_j beta_l q_jl)
  double sigma_delta = 0.0;  // sqrt(sum_jl Delta_j Delta_l q_jl)
};

CorrelatedSigmas correlated_sigmas(const FactorModel& model, std::span<const double> delta);

}  // namespace cilab
