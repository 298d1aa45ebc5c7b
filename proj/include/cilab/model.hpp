#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cilab/rng.hpp"

namespace cilab {

// Largest n for which the library enumerates all 2^n worlds.
inline constexpr std::size_t kExactLimit = 20;

// Ties are broken towards +1 for both the ground truth and the collective vote.
constexpr int sign_of(double v) { return v < 0.0 ? -1 : 1; }

// Dense symmetric matrix of pairwise factor covariances q_ij = <x_i x_j>.
struct Covariance {
  std::size_t n = 0;
  std::vector<double> q;  // row-major n*n

  double operator()(std::size_t i, std::size_t j) const { return q[i * n + j]; }

  static Covariance identity(std::size_t n);
  // Disjoint consecutive blocks of `block_size` factors with common
  // within-block covariance c; the last block may be shorter.
  static Covariance block_equicorrelated(std::size_t n, std::size_t block_size, double c);
};

// A problem instance: coefficients beta, sorted descending and summing to one,
// plus an optional factor covariance (absent means independent factors).
class FactorModel {
 public:
  // Normalises and sorts the weights; every weight must be positive.
  static FactorModel from_weights(std::vector<double> weights);

  FactorModel with_covariance(Covariance q) const;

  std::size_t size() const { return beta_.size(); }
  std::span<const double> beta() const { return beta_; }
  double beta(std::size_t i) const { return beta_[i]; }
  const std::optional<Covariance>& covariance() const { return cov_; }
  bool independent() const { return !cov_.has_value(); }

 private:
  std::vector<double> beta_;
  std::optional<Covariance> cov_;
};

// Simplex vector of attention shares rho_i.
class Attention {
 public:
  // Validates rho_i >= 0 and |sum - 1| <= 1e-12 without touching the values.
  explicit Attention(std::vector<double> rho);

  // Rescales a nonnegative vector to unit sum.
  static Attention normalized(std::vector<double> weights);
  static Attention uniform(std::size_t n);
  static Attention vertex(std::size_t n, std::size_t i);

  std::size_t size() const { return rho_.size(); }
  double operator[](std::size_t i) const { return rho_[i]; }
  std::span<const double> values() const { return rho_; }

 private:
  std::vector<double> rho_;
};

struct WorldSample {
  std::vector<std::int8_t> x;
  double psi = 0.0;
  int y = 1;
};

struct VoteSummary {
  double v = 0.0;
  int y_hat = 1;
  std::vector<double> z;
};

enum class RewardScheme { binary, market, minority };

std::string_view to_string(RewardScheme s);
RewardScheme parse_scheme(std::string_view name);

struct RewardSpec {
  RewardScheme scheme = RewardScheme::binary;
  double epsilon = 1e-6;

  // Throws InvalidArgument unless 0 < epsilon < 0.5.
  void validate() const;
};

double weighted_sum(std::span<const double> w, std::span<const std::int8_t> x);

// Sign of sum_i w_i x_i from separate camp totals, so exact ties such as
// equal weights split evenly resolve to +1 instead of to rounding noise.
int vote_sign(std::span<const double> w, std::span<const std::int8_t> x);

FactorModel sample_factor_weights(std::size_t n, std::uint64_t seed);

using WorldVisitor = std::function<void(std::span<const std::int8_t> x, double psi)>;

// Visits all 2^n sign assignments in lexicographic mask order (bit i set
// means x_i = -1).
void for_each_world(std::span<const double> beta, const WorldVisitor& visit,
                    std::size_t limit = kExactLimit);

std::vector<WorldSample> enumerate_worlds(const FactorModel& model, std::size_t limit = kExactLimit);

WorldSample make_world(const FactorModel& model, std::vector<std::int8_t> x);

// Independent Rademacher draw; throws UnsupportedCovariance for correlated models.
WorldSample sample_world(const FactorModel& model, Rng& rng);

VoteSummary collective_vote(const Attention& attention, const WorldSample& world);

double reward_function(const RewardSpec& spec, double z);

}  // namespace cilab
