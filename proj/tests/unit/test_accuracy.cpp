#include <doctest.h>

#include <cmath>
#include <vector>

#include "cilab/accuracy.hpp"
#include "cilab/mc.hpp"
#include "cilab/normal.hpp"
#include "cilab/rng.hpp"

using namespace cilab;

namespace {

FactorModel hand_model() { return FactorModel::from_weights({0.6, 0.25, 0.15}); }

Attention random_attention(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, {0xa7});
  std::vector<double> w(n);
  for (auto& v : w) v = uniform_open(rng);
  return Attention::normalized(std::move(w));
}

}  // namespace

TEST_CASE("three factor accuracy") {
  CHECK(std::abs(collective_accuracy_exact(hand_model(), Attention::uniform(3)) - 0.75) < 1e-12);
  CHECK(collective_accuracy_exact(hand_model(), Attention::vertex(3, 0)) == 1.0);
}

TEST_CASE("attention proportional to weights is optimal") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 2 + seed % 15;
    const auto m = sample_factor_weights(n, seed);
    const Attention rho({m.beta().begin(), m.beta().end()});
    CHECK(collective_accuracy_exact(m, rho) == 1.0);
  }
  const auto m = sample_factor_weights(1000, 1);
  const Attention rho({m.beta().begin(), m.beta().end()});
  CHECK(collective_accuracy_approx(m, rho) >= 1.0 - 1e-9);
}

TEST_CASE("orthant identity equals the double integral") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 20 + 10 * seed;
    const auto m = sample_factor_weights(n, seed);
    const auto rho = random_attention(n, seed);
    CHECK(collective_accuracy_approx(m, rho) ==
          doctest::Approx(collective_accuracy_double_integral(m, rho)).epsilon(1e-6));
  }
}

TEST_CASE("uniform attention approaches five sixths") {
  const auto m = sample_factor_weights(10000, 1);
  CHECK(std::abs(collective_accuracy_approx(m, Attention::uniform(10000)) - 5.0 / 6.0) < 0.01);
}

TEST_CASE("approximation against enumeration at n = 16") {
  const auto m = sample_factor_weights(16, 5);
  const auto rho = random_attention(16, 5);
  CHECK(std::abs(collective_accuracy_approx(m, rho) - collective_accuracy_exact(m, rho)) < 0.03);
}

TEST_CASE("sparse attention") {
  const auto small = sample_factor_weights(12, 3);
  const auto vertex = Attention::vertex(12, 0);
  CHECK(is_sparse(vertex));
  CHECK(std::abs(collective_accuracy_sparse(small, vertex) - collective_accuracy_exact(small, vertex)) < 0.02);

  const auto m = sample_factor_weights(1000, 3);
  double rest = 0.0;
  for (std::size_t j = 1; j < m.size(); ++j) rest += m.beta(j) * m.beta(j);
  const double want = normal::cdf(m.beta(0) / std::sqrt(rest));
  const auto v = Attention::vertex(1000, 0);
  CHECK(collective_accuracy_sparse(m, v) == doctest::Approx(want).epsilon(1e-6));
  CHECK(collective_accuracy(m, v) == doctest::Approx(want).epsilon(1e-6));
  const auto mc = mc_accuracy(m, v, 200000, 4);
  CHECK(std::abs(mc.value - want) < 4.0 * mc.std_error);
}

TEST_CASE("orthant probability") {
  CHECK(normal::same_sign_probability(0.0) == doctest::Approx(0.5));
  CHECK(normal::same_sign_probability(1.0) == doctest::Approx(1.0));
  CHECK(normal::same_sign_probability(std::sqrt(3.0) / 2.0) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("diversity") {
  CHECK(diversity(Attention::uniform(50)) == doctest::Approx(1.0));
  CHECK(diversity(Attention::vertex(50, 3)) == doctest::Approx(0.0));
  const double d = diversity(Attention({0.5, 0.5, 0.0, 0.0}));
  CHECK(d == doctest::Approx(0.5));
}
