#include "cilab/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "cilab/error.hpp"
#include "cilab/mc.hpp"
#include "cilab/normal.hpp"

namespace cilab {

std::string_view to_string(RewardMode m) {
  switch (m) {
    case RewardMode::automatic: return "auto";
    case RewardMode::exact: return "exact";
    case RewardMode::approx: return "approx";
    case RewardMode::monte_carlo: return "mc";
  }
  return "unknown";
}

RewardMode parse_reward_mode(std::string_view name) {
  if (name == "auto") return RewardMode::automatic;
  if (name == "exact") return RewardMode::exact;
  if (name == "approx") return RewardMode::approx;
  if (name == "mc") return RewardMode::monte_carlo;
  throw InvalidArgument("unknown reward mode '" + std::string(name) + "'");
}

namespace {

void check_dims(const FactorModel& model, const Attention& attention) {
  if (model.size() != attention.size()) throw InvalidArgument("model and attention dimensions differ");
}

// sum_{j != i} a_j b_j, recomputed directly when entry i dominates the total
// so the subtraction does not cancel.
class LeaveOneOut {
 public:
  LeaveOneOut(std::span<const double> a, std::span<const double> b) : a_(a), b_(b) {
    for (std::size_t j = 0; j < a.size(); ++j) total_ += a[j] * b[j];
  }

  double operator()(std::size_t i) const {
    const double own = a_[i] * b_[i];
    if (std::abs(own) <= 0.25 * std::abs(total_)) return total_ - own;
    double s = 0.0;
    for (std::size_t j = 0; j < a_.size(); ++j) {
      if (j != i) s += a_[j] * b_[j];
    }
    return s;
  }

 private:
  std::span<const double> a_, b_;
  double total_ = 0.0;
};

std::vector<double> residuals(std::span<const double> beta, std::span<const double> rho) {
  double br = 0.0, rr = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    br += beta[j] * rho[j];
    rr += rho[j] * rho[j];
  }
  const double slope = rr > 0.0 ? br / rr : 0.0;
  std::vector<double> r(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) r[j] = beta[j] - slope * rho[j];
  return r;
}

// Leave-one-out sums for the Gaussian moments of (psi, z) given x_i = 1.
// The conditional variance of psi given z is the residual sum of squares of
// beta regressed on rho over j != i, assembled from the residuals r of the
// full regression.
struct MomentTables {
  MomentTables(const FactorModel& model, const Attention& attention)
      : beta(model.beta()),
        rho(attention.values()),
        r(residuals(beta, rho)),
        bb(beta, beta),
        rr(rho, rho),
        br(beta, rho),
        res2(r, r),
        res_rho(r, rho) {}

  ConditionalMoments at(std::size_t i) const {
    ConditionalMoments m{beta[i], 0.5 * (1.0 + rho[i]), bb(i), 0.25 * rr(i), 0.5 * br(i)};
    const double c = rr(i);
    if (c > 0.0) {
      const double cross = res_rho(i);
      m.k_cond = std::max(0.0, res2(i) - cross * cross / c);
    }
    return m;
  }

  std::span<const double> beta, rho;
  std::vector<double> r;
  LeaveOneOut bb, rr, br, res2, res_rho;
};

double integrate_reward(const ConditionalMoments& m, const RewardSpec& spec, const QuadratureConfig& quad) {
  if (!(m.k_zz > 0.0)) {
    throw DegenerateAttention("conditional variance of z vanishes; use the exact or Monte Carlo path");
  }
  const double sz = std::sqrt(m.k_zz);
  const double slope = m.k_psi_z / m.k_zz;
  const double s = std::sqrt(m.k_cond >= 0.0 ? m.k_cond : std::max(0.0, m.k_psi_psi - m.k_psi_z * slope));

  // P(psi > 0 | x_i = 1, z)
  auto p_correct = [&](double z) {
    const double mean = m.mu_psi + (z - m.mu_z) * slope;
    if (s > 0.0) return normal::cdf(mean / s);
    return mean > 0.0 ? 1.0 : (mean < 0.0 ? 0.0 : 0.5);
  };
  auto density = [&](double z) { return normal::pdf((z - m.mu_z) / sz) / sz; };

  constexpr double kWindow = 12.0;
  double lo = std::max(spec.epsilon, m.mu_z - kWindow * sz);
  double hi = std::min(1.0, m.mu_z + kWindow * sz);
  if (spec.scheme == RewardScheme::minority) hi = std::min(hi, 0.5);
  if (!(hi > lo)) return 0.0;

  double total = 0.0;
  // Market rewards grow like 1/z near the floor; integrate that stretch in
  // u = ln z where the integrand f(z) z stays bounded.
  constexpr double kLogSplit = 0.05;
  if (spec.scheme == RewardScheme::market && lo < kLogSplit) {
    const double top = std::min(hi, kLogSplit);
    auto in_log = [&](double u) {
      const double z = std::exp(u);
      return density(z) * p_correct(z);  // f(z) * z == 1
    };
    const double lb[] = {std::log(lo), std::log(top)};
    total += integrate_adaptive(in_log, lb, quad).value;
    lo = top;
    if (!(hi > lo)) return total;
  }

  std::vector<double> breaks{lo, hi};
  std::vector<double> marks{0.5, m.mu_z};
  // P(correct | z) steps from 0 to 1 around z0 with width s / slope; near
  // rho = beta that step is far narrower than the panels.
  if (slope != 0.0) {
    const double z0 = m.mu_z - m.mu_psi / slope;
    const double w = s / std::abs(slope);
    for (double d : {-8.0, -2.0, 0.0, 2.0, 8.0}) marks.push_back(z0 + d * w);
  }
  for (double b : marks) {
    if (b > lo && b < hi) breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto integrand = [&](double z) {
    const double dens = density(z);
    if (dens == 0.0) return 0.0;
    return reward_function(spec, z) * dens * p_correct(z);
  };
  total += integrate_adaptive(integrand, breaks, quad).value;
  return total;
}

}  // namespace

ExpectedRewards expected_rewards_exact(const FactorModel& model, const Attention& attention,
                                       const RewardSpec& spec, std::size_t limit) {
  check_dims(model, attention);
  if (!model.independent()) throw UnsupportedCovariance("exact enumeration assumes independent factors");
  spec.validate();
  const std::size_t n = model.size();
  const auto rho = attention.values();
  std::vector<double> sums(n, 0.0);
  for_each_world(
      model.beta(),
      [&](std::span<const std::int8_t> x, double psi) {
        const int y = sign_of(psi);
        double plus = 0.0;
        double minus = 0.0;
        for (std::size_t j = 0; j < n; ++j) (x[j] > 0 ? plus : minus) += rho[j];
        const double z = std::max(y > 0 ? plus : minus, spec.epsilon);
        const double pay = reward_function(spec, z);
        if (pay == 0.0) return;
        for (std::size_t i = 0; i < n; ++i) {
          if (x[i] == y) sums[i] += pay;
        }
      },
      limit);
  const double scale = std::ldexp(1.0, -static_cast<int>(n));
  for (double& v : sums) v *= scale;
  return {std::move(sums), RewardMode::exact};
}

ConditionalMoments conditional_moments(const FactorModel& model, const Attention& attention, std::size_t i) {
  check_dims(model, attention);
  if (i >= model.size()) throw InvalidArgument("factor index out of range");
  return MomentTables(model, attention).at(i);
}

double expected_reward_binary_approx(const FactorModel& model, std::size_t i) {
  if (i >= model.size()) throw InvalidArgument("factor index out of range");
  const auto beta = model.beta();
  const double rest = LeaveOneOut(beta, beta)(i);
  if (!(rest > 0.0)) return 1.0;
  return normal::cdf(beta[i] / std::sqrt(rest));
}

double expected_reward_approx(const FactorModel& model, const Attention& attention, const RewardSpec& spec,
                              std::size_t i, const QuadratureConfig& quad) {
  spec.validate();
  return integrate_reward(conditional_moments(model, attention, i), spec, quad);
}

namespace {

ExpectedRewards approx_all(const FactorModel& model, const Attention& attention, const RewardSpec& spec,
                           const QuadratureConfig& quad) {
  const std::size_t n = model.size();
  ExpectedRewards out{std::vector<double>(n), RewardMode::approx};
  if (spec.scheme == RewardScheme::binary) {
    const auto beta = model.beta();
    const LeaveOneOut bb(beta, beta);
    for (std::size_t i = 0; i < n; ++i) {
      const double rest = bb(i);
      out.values[i] = rest > 0.0 ? normal::cdf(beta[i] / std::sqrt(rest)) : 1.0;
    }
    return out;
  }
  const MomentTables tables(model, attention);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = integrate_reward(tables.at(i), spec, quad);
  return out;
}

}  // namespace

ExpectedRewards expected_rewards(const FactorModel& model, const Attention& attention, const RewardSpec& spec,
                                 const RewardOptions& options) {
  check_dims(model, attention);
  spec.validate();
  const std::size_t n = model.size();
  RewardMode mode = options.mode;
  if (mode == RewardMode::automatic) mode = n < kApproxThreshold ? RewardMode::exact : RewardMode::approx;
  switch (mode) {
    case RewardMode::exact:
      return expected_rewards_exact(model, attention, spec, options.exact_limit);
    case RewardMode::approx:
      try {
        return approx_all(model, attention, spec, options.quad);
      } catch (const DegenerateAttention&) {
        if (n <= options.exact_limit && model.independent()) {
          return expected_rewards_exact(model, attention, spec, options.exact_limit);
        }
        throw;
      }
    case RewardMode::monte_carlo: {
      auto est = mc_expected_rewards(model, attention, spec, options.mc_samples, options.mc_seed);
      ExpectedRewards out{std::vector<double>(n), RewardMode::monte_carlo};
      for (std::size_t i = 0; i < n; ++i) out.values[i] = est[i].value;
      return out;
    }
    case RewardMode::automatic: break;
  }
  throw InvalidArgument("unresolved reward mode");
}

}  // namespace cilab
