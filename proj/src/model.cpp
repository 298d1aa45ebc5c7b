#include "cilab/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cilab/error.hpp"

namespace cilab {

Covariance Covariance::identity(std::size_t n) {
  Covariance c{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) c.q[i * n + i] = 1.0;
  return c;
}

Covariance Covariance::block_equicorrelated(std::size_t n, std::size_t block_size, double c) {
  if (block_size == 0) throw InvalidArgument("block size must be positive");
  if (!(c >= -1.0 && c <= 1.0)) throw InvalidArgument("block correlation must lie in [-1, 1]");
  Covariance cov = identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && i / block_size == j / block_size) cov.q[i * n + j] = c;
    }
  }
  return cov;
}

FactorModel FactorModel::from_weights(std::vector<double> weights) {
  if (weights.empty()) throw InvalidArgument("a factor model needs at least one factor");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("factor weights must be positive and finite");
  }
  std::sort(weights.begin(), weights.end(), std::greater<>());
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  FactorModel m;
  m.beta_ = std::move(weights);
  return m;
}

FactorModel FactorModel::with_covariance(Covariance q) const {
  const std::size_t n = size();
  if (q.n != n || q.q.size() != n * n) throw InvalidArgument("covariance dimension does not match the model");
  for (std::size_t i = 0; i < n; ++i) {
    if (q(i, i) != 1.0) throw InvalidArgument("covariance must have a unit diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = q(i, j);
      if (!(v >= -1.0 && v <= 1.0)) throw InvalidArgument("covariance entries must lie in [-1, 1]");
      if (v != q(j, i)) throw InvalidArgument("covariance must be symmetric");
    }
  }
  FactorModel m = *this;
  m.cov_ = std::move(q);
  return m;
}

Attention::Attention(std::vector<double> rho) : rho_(std::move(rho)) {
  if (rho_.empty()) throw InvalidArgument("attention vector is empty");
  double total = 0.0;
  for (double r : rho_) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("attention shares must be nonnegative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("attention shares must sum to one");
}

Attention Attention::normalized(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("attention weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("attention weights sum to zero");
  for (double& w : weights) w /= total;
  return Attention(std::move(weights));
}

Attention Attention::uniform(std::size_t n) {
  if (n == 0) throw InvalidArgument("attention vector is empty");
  return Attention(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Attention Attention::vertex(std::size_t n, std::size_t i) {
  if (i >= n) throw InvalidArgument("vertex index out of range");
  std::vector<double> rho(n, 0.0);
  rho[i] = 1.0;
  return Attention(std::move(rho));
}

std::string_view to_string(RewardScheme s) {
  switch (s) {
    case RewardScheme::binary: return "binary";
    case RewardScheme::market: return "market";
    case RewardScheme::minority: return "minority";
  }
  return "unknown";
}

RewardScheme parse_scheme(std::string_view name) {
  if (name == "binary") return RewardScheme::binary;
  if (name == "market") return RewardScheme::market;
  if (name == "minority") return RewardScheme::minority;
  throw InvalidArgument("unknown reward scheme '" + std::string(name) + "'");
}

void RewardSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidArgument("reward epsilon must lie in (0, 0.5)");
}

double weighted_sum(std::span<const double> w, std::span<const std::int8_t> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

int vote_sign(std::span<const double> w, std::span<const std::int8_t> x) {
  double plus = 0.0;
  double minus = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double up = x[i] > 0 ? 1.0 : 0.0;
    plus += w[i] * up;
    minus += w[i] * (1.0 - up);
  }
  return plus >= minus ? 1 : -1;
}

namespace {

bool has_tied_world(std::span<const double> beta) {
  bool tie = false;
  for_each_world(beta, [&](std::span<const std::int8_t>, double psi) {
    if (std::abs(psi) < 1e-12) tie = true;
  });
  return tie;
}

}  // namespace

FactorModel sample_factor_weights(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("number of factors must be positive");
  // Redraw (from a fresh derived stream) whenever an enumerable model would
  // admit a world with psi = 0.
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = make_rng(seed, {0xbe7a, attempt});
    std::vector<double> w(n);
    for (double& v : w) v = uniform_open(rng);
    FactorModel m = FactorModel::from_weights(std::move(w));
    if (n > kExactLimit || !has_tied_world(m.beta())) return m;
  }
}

void for_each_world(std::span<const double> beta, const WorldVisitor& visit, std::size_t limit) {
  const std::size_t n = beta.size();
  if (n > limit) {
    throw SizeLimitError("exhaustive enumeration refused: n = " + std::to_string(n) +
                         " exceeds the exact-mode limit of " + std::to_string(limit));
  }
  std::vector<std::int8_t> x(n);
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1U ? -1 : 1;
    visit(x, weighted_sum(beta, x));
  }
}

std::vector<WorldSample> enumerate_worlds(const FactorModel& model, std::size_t limit) {
  std::vector<WorldSample> worlds;
  for_each_world(
      model.beta(),
      [&](std::span<const std::int8_t> x, double psi) {
        worlds.push_back({{x.begin(), x.end()}, psi, sign_of(psi)});
      },
      limit);
  return worlds;
}

WorldSample make_world(const FactorModel& model, std::vector<std::int8_t> x) {
  if (x.size() != model.size()) throw InvalidArgument("world dimension does not match the model");
  for (auto v : x) {
    if (v != 1 && v != -1) throw InvalidArgument("factor values must be +1 or -1");
  }
  const double psi = weighted_sum(model.beta(), x);
  return {std::move(x), psi, sign_of(psi)};
}

WorldSample sample_world(const FactorModel& model, Rng& rng) {
  if (!model.independent()) {
    throw UnsupportedCovariance("model has factor covariance; use the correlated sampler");
  }
  CoinStream coins(rng);
  std::vector<std::int8_t> x(model.size());
  for (auto& v : x) v = coins.next() ? 1 : -1;
  return make_world(model, std::move(x));
}

VoteSummary collective_vote(const Attention& attention, const WorldSample& world) {
  const std::size_t n = attention.size();
  if (world.x.size() != n) throw InvalidArgument("attention and world dimensions differ");
  VoteSummary out;
  out.v = weighted_sum(attention.values(), world.x);
  double plus = 0.0;
  double minus = 0.0;
  for (std::size_t j = 0; j < n; ++j) (world.x[j] > 0 ? plus : minus) += attention[j];
  out.y_hat = plus >= minus ? 1 : -1;
  out.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.z[i] = world.x[i] > 0 ? plus : minus;
  return out;
}

double reward_function(const RewardSpec& spec, double z) {
  if (!(z > 0.0)) throw InvalidArgument("reward is undefined for z <= 0");
  switch (spec.scheme) {
    case RewardScheme::binary: return 1.0;
    case RewardScheme::market: return 1.0 / z;
    case RewardScheme::minority: return z < 0.5 ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace cilab
