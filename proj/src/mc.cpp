#include "cilab/mc.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <utility>

#include "cilab/accuracy.hpp"
#include "cilab/correlated.hpp"
#include "cilab/error.hpp"
#include "cilab/parallel.hpp"

namespace cilab {

namespace {

constexpr std::uint64_t kRewardStream = 0x5e3a;
constexpr std::uint64_t kAccuracyStream = 0xacc;
constexpr std::uint64_t kPopulationStream = 0xf1e;

struct Partial {
  std::vector<double> sum, sumsq;
  std::size_t count = 0;
};

McEstimate finish(double sum, double sumsq, std::size_t count) {
  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  if (count > 1) {
    var = std::max(0.0, (sumsq - static_cast<double>(count) * mean * mean) / static_cast<double>(count - 1));
  }
  return {mean, std::sqrt(var / static_cast<double>(count)), count};
}

// psi = sum beta x and v = sum rho x with four partial sums each.
struct Tally {
  double psi = 0.0;
  double v = 0.0;
};

Tally tally(std::span<const double> beta, std::span<const double> rho, std::span<const std::int8_t> x) {
  const std::size_t n = x.size();
  double p[4] = {0, 0, 0, 0}, v[4] = {0, 0, 0, 0};
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double s = x[j + l];
      p[l] += beta[j + l] * s;
      v[l] += rho[j + l] * s;
    }
  }
  for (; j < n; ++j) {
    p[0] += beta[j] * x[j];
    v[0] += rho[j] * x[j];
  }
  return {(p[0] + p[1]) + (p[2] + p[3]), (v[0] + v[1]) + (v[2] + v[3])};
}

// Attention mass of the +1 and -1 camps. Near a tie the camps are summed
// separately so equal splits compare exactly equal.
std::pair<double, double> camps(std::span<const double> rho, std::span<const std::int8_t> x, double total,
                                double v) {
  if (std::abs(v) > 1e-12) return {0.5 * (total + v), 0.5 * (total - v)};
  double plus = 0.0, minus = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double up = x[j] > 0 ? 1.0 : 0.0;
    plus += rho[j] * up;
    minus += rho[j] * (1.0 - up);
  }
  return {plus, minus};
}

void check_samples(std::size_t samples) {
  if (samples < 2) throw InvalidArgument("Monte Carlo needs at least two samples");
}

}  // namespace

std::vector<McEstimate> mc_expected_rewards(const FactorModel& model, const Attention& attention,
                                            const RewardSpec& spec, std::size_t samples, std::uint64_t seed,
                                            unsigned threads) {
  if (model.size() != attention.size()) throw InvalidArgument("model and attention dimensions differ");
  spec.validate();
  check_samples(samples);
  const std::size_t n = model.size();
  const auto blocks = block_structure(model);
  const auto beta = model.beta();
  const auto rho = attention.values();
  double rho_total = 0.0;
  for (double r : rho) rho_total += r;
  const std::size_t batches = (samples + kMcBatch - 1) / kMcBatch;
  std::vector<Partial> partials(batches);

  parallel_for(batches, threads, [&](std::size_t b) {
    Rng rng = make_rng(seed, {kRewardStream, b});
    Partial& part = partials[b];
    part.sum.assign(n, 0.0);
    part.sumsq.assign(n, 0.0);
    part.count = std::min(kMcBatch, samples - b * kMcBatch);
    std::vector<std::int8_t> x(n);
    for (std::size_t s = 0; s < part.count; ++s) {
      draw_block_signs(blocks, rng, x);
      const auto t = tally(beta, rho, x);
      const auto [plus, minus] = camps(rho, x, rho_total, t.v);
      const int y = sign_of(t.psi);
      const double pay = reward_function(spec, std::max(y > 0 ? plus : minus, spec.epsilon));
      if (pay == 0.0) continue;
      const double pay2 = pay * pay;
      double* sum = part.sum.data();
      double* sumsq = part.sumsq.data();
      for (std::size_t i = 0; i < n; ++i) {
        const double hit = x[i] == y ? 1.0 : 0.0;
        sum[i] += pay * hit;
        sumsq[i] += pay2 * hit;
      }
    }
  });

  std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
  for (const auto& p : partials) {
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += p.sum[i];
      sumsq[i] += p.sumsq[i];
    }
  }
  std::vector<McEstimate> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = finish(sum[i], sumsq[i], samples);
  return out;
}

McEstimate mc_accuracy(const FactorModel& model, const Attention& attention, std::size_t samples,
                       std::uint64_t seed, unsigned threads) {
  if (model.size() != attention.size()) throw InvalidArgument("model and attention dimensions differ");
  check_samples(samples);
  const std::size_t n = model.size();
  const auto blocks = block_structure(model);
  const auto beta = model.beta();
  const auto rho = attention.values();
  double rho_total = 0.0;
  for (double r : rho) rho_total += r;
  const std::size_t batches = (samples + kMcBatch - 1) / kMcBatch;
  std::vector<std::size_t> hits(batches, 0);

  parallel_for(batches, threads, [&](std::size_t b) {
    Rng rng = make_rng(seed, {kAccuracyStream, b});
    const std::size_t count = std::min(kMcBatch, samples - b * kMcBatch);
    std::vector<std::int8_t> x(n);
    for (std::size_t s = 0; s < count; ++s) {
      draw_block_signs(blocks, rng, x);
      const auto t = tally(beta, rho, x);
      const auto [plus, minus] = camps(rho, x, rho_total, t.v);
      if (sign_of(t.psi) == (plus >= minus ? 1 : -1)) ++hits[b];
    }
  });

  std::size_t total = 0;
  for (auto h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)), samples};
}

void FinitePopulationConfig::validate() const {
  if (population == 0) throw InvalidArgument("population must be positive");
  if (!(imitation_rate >= 0.0 && imitation_rate <= 1.0)) throw InvalidArgument("imitation rate must lie in [0, 1]");
  if (record_every == 0) throw InvalidArgument("record interval must be positive");
}

namespace {

Attention empirical_attention(const std::vector<std::size_t>& counts, std::size_t population) {
  std::vector<double> rho(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    rho[i] = static_cast<double>(counts[i]) / static_cast<double>(population);
  }
  return Attention::normalized(std::move(rho));
}

}  // namespace

Trajectory finite_population_run(const FactorModel& model, const RewardSpec& spec,
                                 const FinitePopulationConfig& cfg) {
  cfg.validate();
  spec.validate();
  const std::size_t n = model.size();
  const std::size_t big_n = cfg.population;
  if (big_n < n) {
    std::clog << "warning: population " << big_n << " is smaller than the number of factors " << n << '\n';
  }
  const auto blocks = block_structure(model);
  const auto beta = model.beta();
  Rng rng = make_rng(cfg.seed, {kPopulationStream});

  std::vector<std::uint32_t> agents(big_n);
  if (cfg.init == InitKind::concentrated && n > 1) {
    const std::size_t half = big_n / 2;
    for (std::size_t a = 0; a < big_n; ++a) {
      agents[a] = a < half ? 0 : static_cast<std::uint32_t>(1 + (a - half) % (n - 1));
    }
  } else {
    for (std::size_t a = 0; a < big_n; ++a) agents[a] = static_cast<std::uint32_t>(a % n);
  }
  std::vector<std::size_t> counts(n, 0);
  for (auto g : agents) ++counts[g];

  Trajectory traj;
  auto record = [&](double t) {
    Attention a = empirical_attention(counts, big_n);
    traj.times.push_back(t);
    traj.accuracy.push_back(collective_accuracy(model, a));
    traj.diversity.push_back(diversity(a));
    traj.states.push_back(std::move(a));
  };
  record(0.0);

  const double floor_z = 1.0 / static_cast<double>(big_n);
  std::vector<std::int8_t> x(n);
  std::vector<double> pay(n);
  std::vector<std::uint32_t> snapshot;
  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    draw_block_signs(blocks, rng, x);
    double psi = 0.0;
    std::size_t plus = 0;
    for (std::size_t j = 0; j < n; ++j) {
      psi += beta[j] * x[j];
      if (x[j] > 0) plus += counts[j];
    }
    const int y = sign_of(psi);
    const std::size_t camp = y > 0 ? plus : big_n - plus;
    const double z = std::max(static_cast<double>(camp) / static_cast<double>(big_n), floor_z);
    const double camp_pay = reward_function(spec, z);
    double pay_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pay[i] = x[i] == y ? camp_pay : 0.0;
      if (counts[i] > 0) pay_max = std::max(pay_max, pay[i]);
    }

    if (pay_max > 0.0 && cfg.imitation_rate > 0.0) {
      snapshot = agents;
      for (std::size_t a = 0; a < big_n; ++a) {
        if (uniform_open(rng) >= cfg.imitation_rate) continue;
        const std::uint32_t peer = snapshot[uniform_index(rng, big_n)];
        const std::uint32_t own = snapshot[a];
        const double gain = pay[peer] - pay[own];
        if (gain > 0.0 && uniform_open(rng) < gain / pay_max) {
          agents[a] = peer;
          --counts[own];
          ++counts[peer];
        }
      }
    }
    if (round % cfg.record_every == 0 || round == cfg.rounds) record(static_cast<double>(round));
  }
  return traj;
}

std::vector<double> average_state(const Trajectory& traj, double from_time) {
  if (traj.states.empty()) throw InvalidArgument("empty trajectory");
  std::vector<double> avg(traj.states.front().size(), 0.0);
  std::size_t used = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] < from_time) continue;
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += traj.states[k][i];
    ++used;
  }
  if (used == 0) throw InvalidArgument("no recorded states after the requested time");
  for (double& v : avg) v /= static_cast<double>(used);
  return avg;
}

}  // namespace cilab
