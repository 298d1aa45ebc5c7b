#include <doctest.h>

#include <cmath>

#include "cilab/error.hpp"
#include "cilab/mc.hpp"
#include "cilab/normal.hpp"
#include "cilab/rewards.hpp"

using namespace cilab;

namespace {

FactorModel hand_model() { return FactorModel::from_weights({0.6, 0.25, 0.15}); }

}  // namespace

TEST_CASE("exact rewards on the three factor fixture") {
  const auto rho = Attention::uniform(3);
  const auto binary = expected_rewards_exact(hand_model(), rho, {RewardScheme::binary}).values;
  const auto market = expected_rewards_exact(hand_model(), rho, {RewardScheme::market}).values;
  const double want_binary[] = {1.0, 0.5, 0.5};
  const double want_market[] = {1.75, 0.625, 0.625};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(binary[i] - want_binary[i]) < 1e-12);
    CHECK(std::abs(market[i] - want_market[i]) < 1e-12);
  }
}

TEST_CASE("minority rewards vanish at the ideal allocation") {
  const auto m = hand_model();
  const Attention rho({0.6, 0.25, 0.15});
  const auto r = expected_rewards_exact(m, rho, {RewardScheme::minority}).values;
  for (double v : r) CHECK(v == 0.0);
}

TEST_CASE("binary approximation on a small model") {
  const double approx = expected_reward_binary_approx(hand_model(), 0);
  CHECK(approx == doctest::Approx(normal::cdf(0.6 / std::sqrt(0.085))).epsilon(1e-12));
  CHECK(approx == doctest::Approx(0.98020).epsilon(1e-4));
  const auto exact = expected_rewards_exact(hand_model(), Attention::uniform(3), {RewardScheme::binary}).values;
  CHECK(exact[0] == 1.0);
}

TEST_CASE("conditional moments") {
  const auto m = hand_model();
  const auto rho = Attention::uniform(3);
  const auto c = conditional_moments(m, rho, 1);
  CHECK(c.mu_psi == doctest::Approx(0.25));
  CHECK(c.mu_z == doctest::Approx(2.0 / 3.0));
  CHECK(c.k_psi_psi == doctest::Approx(0.6 * 0.6 + 0.15 * 0.15));
  CHECK(c.k_zz == doctest::Approx(2.0 / 36.0));
  CHECK(c.k_psi_z == doctest::Approx((0.6 + 0.15) / 6.0));
}

TEST_CASE("binary approximation against Monte Carlo at n = 50") {
  const auto m = sample_factor_weights(50, 4);
  const auto rho = Attention::uniform(50);
  const auto mc = mc_expected_rewards(m, rho, {RewardScheme::binary}, 1000000, 9);
  for (std::size_t i = 0; i < 50; ++i) {
    const double approx = expected_reward_binary_approx(m, i);
    CHECK(std::abs(approx - mc[i].value) < 3.0 * mc[i].std_error);
  }
}

TEST_CASE("market approximation against Monte Carlo at n = 200") {
  const auto m = sample_factor_weights(200, 2);
  const auto rho = Attention::uniform(200);
  RewardOptions opt;
  opt.mode = RewardMode::approx;
  const auto approx = expected_rewards(m, rho, {RewardScheme::market}, opt).values;
  const auto mc = mc_expected_rewards(m, rho, {RewardScheme::market}, 1000000, 3);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < 200; ++i) outside += std::abs(approx[i] - mc[i].value) >= 3.0 * mc[i].std_error;
  CHECK(outside == 0);
}

TEST_CASE("automatic mode picks exact for small n") {
  const auto r = expected_rewards(hand_model(), Attention::uniform(3), {RewardScheme::market});
  CHECK(r.mode == RewardMode::exact);
  const auto big = expected_rewards(sample_factor_weights(30, 1), Attention::uniform(30), {RewardScheme::market});
  CHECK(big.mode == RewardMode::approx);
}

TEST_CASE("dimension mismatch") {
  CHECK_THROWS_AS(expected_rewards(hand_model(), Attention::uniform(4), {RewardScheme::binary}), InvalidArgument);
  CHECK_THROWS_AS(parse_reward_mode("guess"), InvalidArgument);
}
