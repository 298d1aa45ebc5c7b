#include "cilab/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cilab::normal {

double pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double pdf(double x, double mean, double sd) { return pdf((x - mean) / sd) / sd; }

double cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Gauss-Legendre half rules (abscissae in (0,1), weights) for 6, 12 and 20 points.
constexpr std::array<double, 3> kW6 = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
constexpr std::array<double, 3> kX6 = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
constexpr std::array<double, 6> kW12 = {.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                                        0.2031674267230659, 0.2334925365383547, 0.2491470458134029};
constexpr std::array<double, 6> kX12 = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                                        0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
constexpr std::array<double, 10> kW20 = {.01761400713915212, .04060142980038694, .06267204833410906,
                                         .08327674157670475, 0.1019301198172404, 0.1181945319615184,
                                         0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
                                         0.1527533871307259};
constexpr std::array<double, 10> kX20 = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                         0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                         0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                         0.07652652113349733};

template <std::size_t L>
double bvnu(double h, double k, double r, const std::array<double, L>& w, const std::array<double, L>& xg) {
  constexpr double tp = 2.0 * kPi;
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    for (std::size_t i = 0; i < L; ++i) {
      for (double x : {1.0 - xg[i], 1.0 + xg[i]}) {
        const double sn = std::sin(asr * x);
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return bvn * asr / tp + cdf(-h) * cdf(-k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    double asr = -(bs / as + hk) / 2.0;
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = kSqrt2Pi * cdf(-b / a);
      bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a /= 2.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      for (double x : {1.0 - xg[i], 1.0 + xg[i]}) {
        const double xs = (a * x) * (a * x);
        asr = -(bs / xs + hk) / 2.0;
        if (asr <= -100.0) continue;
        const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
        const double rs = std::sqrt(1.0 - xs);
        const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
        acc += w[i] * std::exp(asr) * (sp - ep);
      }
    }
    bvn = (a * acc - bvn) / tp;
  }
  if (r > 0.0) return bvn + cdf(-std::max(h, k));
  if (h >= k) return -bvn;
  const double l = h < 0.0 ? cdf(k) - cdf(h) : cdf(-h) - cdf(-k);
  return l - bvn;
}

}  // namespace

double bivariate_upper(double h, double k, double r) {
  double p;
  if (std::abs(r) < 0.3) {
    p = bvnu(h, k, r, kW6, kX6);
  } else if (std::abs(r) < 0.75) {
    p = bvnu(h, k, r, kW12, kX12);
  } else {
    p = bvnu(h, k, r, kW20, kX20);
  }
  return std::clamp(p, 0.0, 1.0);
}

double same_sign_probability(double r) { return 0.5 + std::asin(std::clamp(r, -1.0, 1.0)) / kPi; }

}  // namespace cilab::normal
