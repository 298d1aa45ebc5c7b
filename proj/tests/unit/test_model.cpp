#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cilab/correlated.hpp"
#include "cilab/error.hpp"
#include "cilab/model.hpp"
#include "cilab/rng.hpp"

using namespace cilab;

namespace {

FactorModel hand_model() { return FactorModel::from_weights({0.6, 0.25, 0.15}); }

}  // namespace

TEST_CASE("three factor worlds") {
  const auto worlds = enumerate_worlds(hand_model());
  REQUIRE(worlds.size() == 8);
  const auto w = make_world(hand_model(), {1, -1, -1});
  CHECK(w.psi == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(w.y == 1);
  std::size_t positive = 0;
  for (const auto& s : worlds) positive += s.y == 1;
  CHECK(positive == 4);
}

TEST_CASE("sign of zero is positive") {
  CHECK(sign_of(0.0) == 1);
  CHECK(sign_of(-0.0) == 1);
  CHECK(sign_of(-1e-300) == -1);
}

TEST_CASE("collective vote on uniform attention") {
  const auto world = make_world(hand_model(), {1, 1, -1});
  const auto vote = collective_vote(Attention::uniform(3), world);
  CHECK(vote.v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(vote.y_hat == 1);
  REQUIRE(vote.z.size() == 3);
  CHECK(vote.z[0] == doctest::Approx(2.0 / 3.0));
  CHECK(vote.z[1] == doctest::Approx(2.0 / 3.0));
  CHECK(vote.z[2] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("tied votes resolve to plus one") {
  const std::vector<double> rho(10, 0.1);
  std::vector<std::int8_t> x(10, 1);
  std::fill(x.begin() + 5, x.end(), -1);
  CHECK(vote_sign(rho, x) == 1);
  std::reverse(x.begin(), x.end());
  CHECK(vote_sign(rho, x) == 1);
}

TEST_CASE("sampled weights") {
  const auto a = sample_factor_weights(500, 7);
  const auto b = sample_factor_weights(500, 7);
  const auto c = sample_factor_weights(500, 8);
  CHECK(std::equal(a.beta().begin(), a.beta().end(), b.beta().begin()));
  CHECK_FALSE(std::equal(a.beta().begin(), a.beta().end(), c.beta().begin()));
  CHECK(std::accumulate(a.beta().begin(), a.beta().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::is_sorted(a.beta().begin(), a.beta().end(), std::greater<>()));
}

TEST_CASE("largest weight is small at n = 10000") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto m = sample_factor_weights(10000, seed);
    CHECK(m.beta(0) < 0.001);
  }
}

TEST_CASE("ground truth moments at n = 1000") {
  const auto m = sample_factor_weights(1000, 3);
  auto rng = make_rng(11);
  const std::size_t draws = 100000;
  double sum = 0.0;
  std::size_t positive = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    const auto w = sample_world(m, rng);
    sum += w.psi;
    positive += w.y == 1;
  }
  double sb2 = 0.0;
  for (double b : m.beta()) sb2 += b * b;
  CHECK(std::abs(sum / draws) < 4.0 * std::sqrt(sb2 / draws));
  CHECK(static_cast<double>(positive) / draws == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("reward functions") {
  const RewardSpec binary{RewardScheme::binary}, market{RewardScheme::market}, minority{RewardScheme::minority};
  CHECK(reward_function(binary, 0.3) == 1.0);
  CHECK(reward_function(market, 0.25) == 4.0);
  CHECK(reward_function(minority, 0.49) == 1.0);
  CHECK(reward_function(minority, 0.5) == 0.0);
  CHECK_THROWS_AS(reward_function(market, 0.0), InvalidArgument);
  CHECK(parse_scheme("market") == RewardScheme::market);
  CHECK_THROWS_AS(parse_scheme("lottery"), InvalidArgument);
  CHECK_THROWS_AS((RewardSpec{RewardScheme::binary, 0.0}.validate()), InvalidArgument);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(FactorModel::from_weights({}), InvalidArgument);
  CHECK_THROWS_AS(FactorModel::from_weights({0.5, -0.1}), InvalidArgument);
  CHECK_THROWS_AS(Attention({0.5, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(Attention({-0.1, 1.1}), InvalidArgument);
  CHECK_THROWS_AS(make_world(hand_model(), {1, 0, 1}), InvalidArgument);
  CHECK_THROWS_AS(enumerate_worlds(sample_factor_weights(21, 1)), SizeLimitError);
  CHECK_THROWS_AS(Covariance::block_equicorrelated(10, 0, 0.3), InvalidArgument);
}

TEST_CASE("block copy probability and covariance") {
  const auto m = FactorModel::from_weights(std::vector<double>(20, 0.05))
                     .with_covariance(Covariance::block_equicorrelated(20, 10, 0.81));
  const auto blocks = block_structure(m);
  CHECK(blocks.copy_probability() == doctest::Approx(0.95).epsilon(1e-12));

  auto rng = make_rng(5);
  const std::size_t draws = 1000000;
  double cov = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const auto w = sample_correlated_world(m, rng);
    cov += w.x[1] * w.x[7];
  }
  CHECK(std::abs(cov / draws - 0.81) < 0.01);
}

TEST_CASE("correlated sigma against a double sum") {
  const std::size_t n = 40;
  const auto m = FactorModel::from_weights(std::vector<double>(n, 1.0 / n))
                     .with_covariance(Covariance::block_equicorrelated(n, n / 2, 0.5));
  const auto& q = *m.covariance();
  double direct = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) direct += m.beta(j) * m.beta(l) * q(j, l);
  }
  double sb2 = 0.0, off = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sb2 += m.beta(j) * m.beta(j);
    for (std::size_t l = 0; l < n; ++l) {
      if (j != l && j / (n / 2) == l / (n / 2)) off += m.beta(j) * m.beta(l);
    }
  }
  const std::vector<double> zero(n, 0.0);
  const auto s = correlated_sigmas(m, zero);
  CHECK(s.sigma_b * s.sigma_b == doctest::Approx(direct).epsilon(1e-12));
  CHECK(s.sigma_b * s.sigma_b == doctest::Approx(sb2 + 0.5 * off).epsilon(1e-12));
}
