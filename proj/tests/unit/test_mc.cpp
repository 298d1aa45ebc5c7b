#include <doctest.h>

#include <cmath>

#include "cilab/accuracy.hpp"
#include "cilab/mc.hpp"
#include "cilab/rewards.hpp"

using namespace cilab;

namespace {

FactorModel hand_model() { return FactorModel::from_weights({0.6, 0.25, 0.15}); }

}  // namespace

TEST_CASE("market rewards on the fixture") {
  const auto est = mc_expected_rewards(hand_model(), Attention::uniform(3), {RewardScheme::market}, 1000000, 1);
  const double want[] = {1.75, 0.625, 0.625};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(est[i].samples == 1000000);
    CHECK(std::abs(est[i].value - want[i]) < 3.0 * est[i].std_error);
  }
}

TEST_CASE("accuracy on the fixture") {
  const auto est = mc_accuracy(hand_model(), Attention::uniform(3), 1000000, 2);
  CHECK(std::abs(est.value - 0.75) < 3.0 * est.std_error);
}

TEST_CASE("uniform attention at n = 10000") {
  const auto m = sample_factor_weights(10000, 1);
  const auto est = mc_accuracy(m, Attention::uniform(10000), 100000, 3);
  CHECK(std::abs(est.value - 0.833) < 0.01);
}

TEST_CASE("estimates do not depend on the thread count") {
  const auto m = sample_factor_weights(40, 6);
  const auto rho = Attention::uniform(40);
  const auto a = mc_expected_rewards(m, rho, {RewardScheme::minority}, 100000, 5, 1);
  const auto b = mc_expected_rewards(m, rho, {RewardScheme::minority}, 100000, 5, 3);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].std_error == b[i].std_error);
  }
  CHECK(mc_accuracy(m, rho, 100000, 5, 1).value == mc_accuracy(m, rho, 100000, 5, 4).value);
}

TEST_CASE("different seeds give different streams") {
  const auto m = sample_factor_weights(40, 6);
  const auto rho = Attention::uniform(40);
  CHECK(mc_accuracy(m, rho, 10000, 1).value != mc_accuracy(m, rho, 10000, 2).value);
}

TEST_CASE("small finite population concentrates under binary rewards") {
  const auto m = FactorModel::from_weights({0.4, 0.25, 0.15, 0.12, 0.08});
  FinitePopulationConfig cfg;
  cfg.population = 2000;
  cfg.rounds = 2000;
  cfg.seed = 3;
  const auto tr = finite_population_run(m, {RewardScheme::binary}, cfg);
  REQUIRE(tr.size() > 1);
  CHECK(tr.final_state()[0] > 0.95);
  const auto avg = average_state(tr, tr.times.back() * 0.75);
  CHECK(avg.size() == 5);
}
