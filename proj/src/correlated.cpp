#include "cilab/correlated.hpp"

#include <algorithm>
#include <cmath>

#include "cilab/error.hpp"

namespace cilab {

double BlockStructure::copy_probability() const { return 0.5 * (1.0 + std::sqrt(c)); }

BlockStructure block_structure(const FactorModel& model) {
  const std::size_t n = model.size();
  BlockStructure out;
  if (model.independent()) {
    for (std::size_t i = 0; i < n; ++i) out.blocks.push_back({i});
    return out;
  }
  const auto& q = *model.covariance();
  std::vector<std::size_t> owner(n, n);
  bool have_c = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] != n) continue;
    owner[i] = out.blocks.size();
    std::vector<std::size_t> members{i};
    for (std::size_t j = i + 1; j < n; ++j) {
      if (q(i, j) == 0.0) continue;
      if (owner[j] != n) throw UnsupportedCovariance("covariance blocks overlap");
      owner[j] = owner[i];
      members.push_back(j);
    }
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const double v = q(members[a], members[b]);
        if (!have_c) {
          out.c = v;
          have_c = true;
        }
        if (v != out.c) throw UnsupportedCovariance("within-block covariances are not all equal");
      }
    }
    out.blocks.push_back(std::move(members));
  }
  // Every off-block entry must vanish.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (owner[i] != owner[j] && q(i, j) != 0.0) throw UnsupportedCovariance("covariance is not block structured");
    }
  }
  if (!(out.c >= 0.0 && out.c < 1.0)) throw UnsupportedCovariance("block covariance must lie in [0, 1)");
  return out;
}

void draw_block_signs(const BlockStructure& blocks, Rng& rng, std::span<std::int8_t> x) {
  if (blocks.c == 0.0) {
    // Same bit order as CoinStream: least significant bit first.
    std::size_t i = 0;
    while (i < x.size()) {
      std::uint64_t bits = rng();
      const std::size_t m = std::min<std::size_t>(64, x.size() - i);
      for (std::size_t k = 0; k < m; ++k, bits >>= 1) x[i + k] = static_cast<std::int8_t>(2 * static_cast<int>(bits & 1U) - 1);
      i += m;
    }
    return;
  }
  const double p = blocks.copy_probability();
  CoinStream coins(rng);
  for (const auto& block : blocks.blocks) {
    const std::int8_t latent = coins.next() ? 1 : -1;
    for (auto i : block) x[i] = uniform_open(rng) < p ? latent : static_cast<std::int8_t>(-latent);
  }
}

WorldSample sample_correlated_world(const FactorModel& model, Rng& rng) {
  const auto blocks = block_structure(model);
  std::vector<std::int8_t> x(model.size());
  draw_block_signs(blocks, rng, x);
  return make_world(model, std::move(x));
}

CorrelatedSigmas correlated_sigmas(const FactorModel& model, std::span<const double> delta) {
  const std::size_t n = model.size();
  if (delta.size() != n) throw InvalidArgument("perturbation dimension does not match the model");
  const auto beta = model.beta();
  const Covariance q = model.covariance().value_or(Covariance::identity(n));
  double sb = 0.0, sd = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      sb += beta[j] * beta[l] * q(j, l);
      sd += delta[j] * delta[l] * q(j, l);
    }
  }
  return {std::sqrt(std::max(0.0, sb)), std::sqrt(std::max(0.0, sd))};
}

}  // namespace cilab
