#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cilab/dynamics.hpp"
#include "cilab/error.hpp"

using namespace cilab;

TEST_CASE("replicator field on the three factor fixture") {
  const auto m = FactorModel::from_weights({0.6, 0.25, 0.15});
  const auto rho = Attention::uniform(3);
  const auto r = expected_rewards_exact(m, rho, {RewardScheme::binary});
  const auto rate = replicator_rhs(rho, r);
  CHECK(rate[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(rate[1] == doctest::Approx(-1.0 / 12.0).epsilon(1e-12));
  CHECK(rate[2] == doctest::Approx(-1.0 / 12.0).epsilon(1e-12));
  CHECK(rate[0] + rate[1] + rate[2] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("field is zero when every reward vanishes") {
  const std::vector<double> rho{0.5, 0.5}, zero{0.0, 0.0};
  const auto f = replicator_field(rho, zero);
  CHECK(f.rate[0] == 0.0);
  CHECK(f.rate[1] == 0.0);
}

TEST_CASE("initial allocations") {
  const auto u = initial_allocation(4, InitKind::uniform);
  CHECK(u[2] == doctest::Approx(0.25));
  const auto c = initial_allocation(5, InitKind::concentrated);
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[4] == doctest::Approx(0.125));
  CHECK(parse_init("concentrated") == InitKind::concentrated);
  CHECK_THROWS_AS(parse_init("random"), InvalidArgument);
}

TEST_CASE("equilibrium detection needs a full window") {
  const std::vector<double> t{1, 2, 3, 4, 5, 6};
  const std::vector<double> d{1, 1e-10, 1e-10, 1, 1e-10, 1e-10};
  CHECK_FALSE(detect_equilibrium(t, d, 1e-9, 3).has_value());
  const std::vector<double> e{1, 1e-10, 1e-10, 1e-10, 1, 1};
  CHECK(detect_equilibrium(t, e, 1e-9, 3).value() == 4);
}

TEST_CASE("minority dynamics reach the weights at n = 100") {
  const auto m = sample_factor_weights(100, 1);
  const auto tr = integrate(m, {RewardScheme::minority}, Attention::uniform(100));
  REQUIRE(tr.converged_at.has_value());
  const auto& rho = tr.final_state();
  double l1 = 0.0;
  for (std::size_t i = 0; i < 100; ++i) l1 += std::abs(rho[i] - m.beta(i));
  CHECK(l1 < 0.05);
  CHECK(tr.accuracy.back() > 0.95);
}

TEST_CASE("binary dynamics converge on the top factor at n = 5") {
  const auto m = sample_factor_weights(5, 2);
  const auto tr = integrate(m, {RewardScheme::binary}, Attention::uniform(5));
  REQUIRE(tr.converged_at.has_value());
  CHECK(std::isfinite(*tr.converged_at));
  CHECK(tr.final_state()[0] > 0.99);
  CHECK(std::is_sorted(tr.times.begin(), tr.times.end()));
}

TEST_CASE("integrator settings are validated") {
  IntegratorConfig cfg;
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  const auto m = sample_factor_weights(5, 2);
  CHECK_THROWS_AS(integrate(m, {RewardScheme::binary}, Attention::uniform(4)), InvalidArgument);
}
