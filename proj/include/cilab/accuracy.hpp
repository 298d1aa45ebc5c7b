#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cilab/model.hpp"
#include "cilab/quadrature.hpp"

namespace cilab {

// Joint second moments of (psi, V/2) under independent factors.
struct AccuracyMoments {
  double s_psi_psi = 0.0;  // sum beta^2
  double s_vv = 0.0;       // sum rho^2 / 4
  double s_psi_v = 0.0;    // sum beta rho / 2

  // Correlation between psi and V; requires s_vv > 0.
  double correlation() const;
};

AccuracyMoments accuracy_moments(const FactorModel& model, const Attention& attention);

// Fraction of the 2^n worlds where sign(V) = sign(psi).
double collective_accuracy_exact(std::span<const double> beta, std::span<const double> rho,
                                 std::size_t limit = kExactLimit);
double collective_accuracy_exact(const FactorModel& model, const Attention& attention,
                                 std::size_t limit = kExactLimit);

// Bivariate-normal accuracy via the orthant identity C = 1/2 + asin(r)/pi.
double collective_accuracy_approx(const FactorModel& model, const Attention& attention);

// Same quantity from 2 * int_0^inf P(V > 0 | psi) p(psi) dpsi by quadrature;
// slower, kept as an independent check on the orthant identity.
double collective_accuracy_double_integral(const FactorModel& model, const Attention& attention,
                                           const QuadratureConfig& quad = {});

// Smallest set of factors (largest rho first) carrying at least `mass` of
// the attention.
std::vector<std::size_t> heavy_factors(const Attention& attention, double mass = 0.99);

// True when 99% of the attention sits on fewer than 10 factors.
bool is_sparse(const Attention& attention);

// Enumerates the heavy factors exactly and treats the light remainder of
// (psi, V) as a correlated Gaussian. Throws NotSparse for spread attention.
double collective_accuracy_sparse(const FactorModel& model, const Attention& attention);

// Exact for n < 10, sparse fallback for concentrated attention, orthant otherwise.
double collective_accuracy(const FactorModel& model, const Attention& attention);

// Normalised Shannon entropy of the attention; 1 for n = 1.
double diversity(const Attention& attention);

}  // namespace cilab
