#include "cilab/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cilab/error.hpp"
#include "cilab/normal.hpp"

namespace cilab {

namespace {

void check_dims(const FactorModel& model, const Attention& attention) {
  if (model.size() != attention.size()) throw InvalidArgument("model and attention dimensions differ");
}

}  // namespace

double AccuracyMoments::correlation() const {
  if (!(s_vv > 0.0)) throw DegenerateAttention("collective vote has zero variance");
  return std::clamp(s_psi_v / std::sqrt(s_psi_psi * s_vv), -1.0, 1.0);
}

AccuracyMoments accuracy_moments(const FactorModel& model, const Attention& attention) {
  check_dims(model, attention);
  AccuracyMoments m;
  const auto beta = model.beta();
  for (std::size_t i = 0; i < beta.size(); ++i) {
    m.s_psi_psi += beta[i] * beta[i];
    m.s_vv += attention[i] * attention[i];
    m.s_psi_v += beta[i] * attention[i];
  }
  m.s_vv *= 0.25;
  m.s_psi_v *= 0.5;
  return m;
}

double collective_accuracy_exact(std::span<const double> beta, std::span<const double> rho, std::size_t limit) {
  if (beta.size() != rho.size()) throw InvalidArgument("model and attention dimensions differ");
  std::uint64_t hits = 0;
  for_each_world(
      beta,
      [&](std::span<const std::int8_t> x, double psi) {
        if (vote_sign(rho, x) == sign_of(psi)) ++hits;
      },
      limit);
  return std::ldexp(static_cast<double>(hits), -static_cast<int>(beta.size()));
}

double collective_accuracy_exact(const FactorModel& model, const Attention& attention, std::size_t limit) {
  return collective_accuracy_exact(model.beta(), attention.values(), limit);
}

double collective_accuracy_approx(const FactorModel& model, const Attention& attention) {
  return normal::same_sign_probability(accuracy_moments(model, attention).correlation());
}

double collective_accuracy_double_integral(const FactorModel& model, const Attention& attention,
                                           const QuadratureConfig& quad) {
  const auto m = accuracy_moments(model, attention);
  if (!(m.s_vv > 0.0)) throw DegenerateAttention("collective vote has zero variance");
  const double sd_psi = std::sqrt(m.s_psi_psi);
  const double slope = m.s_psi_v / m.s_psi_psi;
  const double cond_sd = std::sqrt(std::max(0.0, m.s_vv - m.s_psi_v * slope));
  auto integrand = [&](double psi) {
    const double mean = psi * slope;
    const double p = cond_sd > 0.0 ? normal::cdf(mean / cond_sd) : (mean > 0.0 ? 1.0 : 0.5);
    return p * normal::pdf(psi, 0.0, sd_psi);
  };
  const double breaks[] = {0.0, 13.0 * sd_psi};
  return 2.0 * integrate_adaptive(integrand, breaks, quad).value;
}

std::vector<std::size_t> heavy_factors(const Attention& attention, double mass) {
  std::vector<std::size_t> order(attention.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return attention[a] > attention[b]; });
  std::vector<std::size_t> heavy;
  double acc = 0.0;
  for (auto i : order) {
    if (acc >= mass) break;
    heavy.push_back(i);
    acc += attention[i];
  }
  return heavy;
}

bool is_sparse(const Attention& attention) { return heavy_factors(attention).size() < 10; }

double collective_accuracy_sparse(const FactorModel& model, const Attention& attention) {
  check_dims(model, attention);
  const auto heavy = heavy_factors(attention);
  if (heavy.size() >= 10) throw NotSparse("attention is spread over 10 or more factors; use the approx path");

  const std::size_t n = model.size();
  std::vector<bool> is_heavy(n, false);
  for (auto i : heavy) is_heavy[i] = true;
  double var_psi = 0.0, var_v = 0.0, cov = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (is_heavy[j]) continue;
    var_psi += model.beta(j) * model.beta(j);
    var_v += attention[j] * attention[j];
    cov += model.beta(j) * attention[j];
  }
  const double sd_psi = std::sqrt(var_psi);
  const double sd_v = std::sqrt(var_v);

  std::vector<double> hb, hr;
  for (auto i : heavy) {
    hb.push_back(model.beta(i));
    hr.push_back(attention[i]);
  }
  double total = 0.0;
  for_each_world(hb, [&](std::span<const std::int8_t> x, double psi_h) {
    const double v_h = weighted_sum(hr, x);
    double p;
    if (!(sd_psi > 0.0)) {
      // No light factors: the heavy assignment decides everything.
      p = sign_of(psi_h) == vote_sign(hr, x) ? 1.0 : 0.0;
    } else if (!(sd_v > 0.0)) {
      const int y_hat = vote_sign(hr, x);
      p = normal::cdf(y_hat * psi_h / sd_psi);
    } else {
      const double r = std::clamp(cov / (sd_psi * sd_v), -1.0, 1.0);
      p = normal::bivariate_upper(-psi_h / sd_psi, -v_h / sd_v, r) +
          normal::bivariate_upper(psi_h / sd_psi, v_h / sd_v, r);
    }
    total += p;
  });
  return std::ldexp(total, -static_cast<int>(heavy.size()));
}

double collective_accuracy(const FactorModel& model, const Attention& attention) {
  check_dims(model, attention);
  if (model.size() < 10) return collective_accuracy_exact(model, attention);
  if (is_sparse(attention)) return collective_accuracy_sparse(model, attention);
  return collective_accuracy_approx(model, attention);
}

double diversity(const Attention& attention) {
  const std::size_t n = attention.size();
  if (n == 1) return 1.0;
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = attention[i];
    if (r > 0.0) h -= r * std::log(r);
  }
  return std::clamp(h / std::log(static_cast<double>(n)), 0.0, 1.0);
}

}  // namespace cilab
