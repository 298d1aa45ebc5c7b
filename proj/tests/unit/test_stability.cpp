#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cilab/error.hpp"
#include "cilab/normal.hpp"
#include "cilab/stability.hpp"

using namespace cilab;

TEST_CASE("stationarity at the weights") {
  const auto m = FactorModel::from_weights({0.6, 0.25, 0.15});
  const Attention rho({0.6, 0.25, 0.15});
  CHECK(stationarity_check(m, {RewardScheme::minority}, rho) < 1e-12);
  const auto five = sample_factor_weights(5, 1);
  CHECK(stationarity_check(five, {RewardScheme::binary}, Attention::uniform(5)) > 0.0);
}

TEST_CASE("perturbation construction") {
  const auto m = FactorModel::from_weights({0.4, 0.3, 0.2, 0.1});
  const auto p = Perturbation::make(m, {0.1, -0.1, 0.05, -0.05}, 0.5);
  CHECK(p.delta[0] == doctest::Approx(0.05));
  CHECK(p.sigma_delta == doctest::Approx(std::sqrt(2 * 0.0025 + 2 * 0.000625)));
  const auto rho = p.apply(m);
  CHECK(rho[0] == doctest::Approx(0.45));
  CHECK_THROWS_AS(Perturbation::make(m, {0.1, 0.1, 0.0, 0.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Perturbation::make(m, {0.0, 0.0, 0.0, 0.0, 0.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Perturbation::make(m, {0.0, 0.0, 0.5, -0.5}, 1.0), InvalidArgument);
}

TEST_CASE("predicted two factor rate") {
  const auto m = sample_factor_weights(1000, 1);
  double sb2 = 0.0;
  for (double b : m.beta()) sb2 += b * b;
  const double want = -0.5 * normal::pdf(m.beta(10) - m.beta(500), 0.0, std::sqrt(sb2)) * 1e-3;
  CHECK(predicted_two_factor_rate(m, 10, 500, 1e-3) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("two factor perturbation at n = 1000") {
  const auto m = sample_factor_weights(1000, 1);
  const auto r = two_factor_perturbation(m, 500, 10, 1e-3, {1000000, 7});
  CHECK(r.report.relative_error < 0.2);
  CHECK(r.restoring);
  CHECK(r.report.passed);
}

TEST_CASE("extensive perturbation shapes sum to zero") {
  const auto m = sample_factor_weights(300, 2);
  const auto a = random_sign_shape(m, 4);
  const auto b = beta_correlated_shape(m);
  CHECK(std::abs(std::accumulate(a.begin(), a.end(), 0.0)) < 1e-12);
  CHECK(std::abs(std::accumulate(b.begin(), b.end(), 0.0)) < 1e-12);
  const auto p = Perturbation::make(m, a, 0.1);
  const auto f = predicted_extensive_field(m, p.delta);
  double common = 0.0, sb2 = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    common += m.beta(i) * p.delta[i];
    sb2 += m.beta(i) * m.beta(i);
  }
  const double scale = m.beta(3) / (2.0 * normal::kSqrt2Pi * std::sqrt(sb2));
  CHECK(f[3] == doctest::Approx(scale * (common - p.delta[3])).epsilon(1e-12));
}

TEST_CASE("correlated minority stays stationary") {
  const auto m = sample_factor_weights(500, 3);
  const auto q = m.with_covariance(Covariance::block_equicorrelated(500, 10, 0.3));
  const auto minority = correlated_stationarity_check(q, {RewardScheme::minority}, 100000, 1);
  CHECK(minority.outliers == 0);
  for (std::size_t i = 0; i < minority.field.size(); ++i) {
    CHECK(std::abs(minority.field[i]) <= 3.0 * minority.std_error[i]);
  }
  const auto binary = correlated_stationarity_check(q, {RewardScheme::binary}, 100000, 1);
  CHECK(binary.outliers > 0);
  CHECK(binary.max_abs > 0.0);
}
