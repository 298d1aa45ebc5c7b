#pragma once

#include <optional>
#include <vector>

#include "cilab/model.hpp"

namespace cilab {

// Time series of attention snapshots with collective accuracy and diversity
// evaluated at each recorded time.
struct Trajectory {
  std::vector<double> times;
  std::vector<Attention> states;
  std::vector<double> accuracy;
  std::vector<double> diversity;
  std::optional<double> converged_at;

  std::size_t size() const { return times.size(); }
  const Attention& final_state() const { return states.back(); }
};

}  // namespace cilab
