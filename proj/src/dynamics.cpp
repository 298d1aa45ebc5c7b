#include "cilab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "cilab/accuracy.hpp"
#include "cilab/error.hpp"

namespace cilab {

std::string_view to_string(InitKind k) { return k == InitKind::uniform ? "uniform" : "concentrated"; }

InitKind parse_init(std::string_view name) {
  if (name == "uniform") return InitKind::uniform;
  if (name == "concentrated") return InitKind::concentrated;
  throw InvalidArgument("unknown initial allocation '" + std::string(name) + "'");
}

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0 && abs_tol > 0.0)) throw InvalidArgument("integrator tolerances must be positive");
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  if (!(equilibrium_tol > 0.0)) throw InvalidArgument("equilibrium tolerance must be positive");
  if (!(simplex_floor >= 0.0)) throw InvalidArgument("simplex floor must be nonnegative");
  if (!(normalization_floor > 0.0)) throw InvalidArgument("normalization floor must be positive");
  if (!(record_start > 0.0) || points_per_decade == 0) throw InvalidArgument("invalid record schedule");
}

ReplicatorField replicator_field(std::span<const double> rho, std::span<const double> rewards, bool normalize,
                                 double floor) {
  if (rho.size() != rewards.size()) throw InvalidArgument("attention and reward dimensions differ");
  double total = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rewards[i] < 0.0) throw InvalidArgument("expected rewards must be nonnegative");
    total += rho[i] * rewards[i];
  }
  ReplicatorField out;
  out.mean_reward = total;
  out.rate.resize(rho.size());
  out.scale = normalize ? 1.0 / std::max(total, floor) : 1.0;
  for (std::size_t i = 0; i < rho.size(); ++i) out.rate[i] = out.scale * rho[i] * (rewards[i] - total);
  return out;
}

std::vector<double> replicator_rhs(const Attention& attention, const ExpectedRewards& rewards) {
  return replicator_field(attention.values(), rewards.values).rate;
}

double raw_field_max(std::span<const double> rho, std::span<const double> rewards) {
  const auto f = replicator_field(rho, rewards, false);
  double m = 0.0;
  for (double v : f.rate) m = std::max(m, std::abs(v));
  return m;
}

Attention initial_allocation(std::size_t n, InitKind kind) {
  if (n == 0) throw InvalidArgument("number of factors must be positive");
  if (kind == InitKind::uniform || n == 1) return Attention::uniform(n);
  std::vector<double> rho(n, 0.5 / static_cast<double>(n - 1));
  rho[0] = 0.5;
  return Attention(std::move(rho));
}

std::optional<double> detect_equilibrium(std::span<const double> times, std::span<const double> max_derivative,
                                         double tol, std::size_t window) {
  std::size_t run = 0;
  for (std::size_t k = 0; k < max_derivative.size() && k < times.size(); ++k) {
    run = max_derivative[k] < tol ? run + 1 : 0;
    if (run >= window) return times[k];
  }
  return std::nullopt;
}

namespace {

// Clamps to the floor and rescales to unit sum; values below 1e-300 are
// flushed to zero so decaying shares never become subnormal.
void repair_simplex(std::vector<double>& y, double floor) {
  double total = 0.0;
  for (double& v : y) {
    if (v < floor) v = floor;
    if (v < 1e-300) v = 0.0;
    total += v;
  }
  for (double& v : y) v /= total;
}

class FieldEvaluator {
 public:
  FieldEvaluator(const FactorModel& model, const RewardSpec& spec, const IntegratorConfig& cfg)
      : model_(model), spec_(spec), cfg_(cfg) {}

  ReplicatorField operator()(const std::vector<double>& state) {
    std::vector<double> y = state;
    repair_simplex(y, 0.0);
    const Attention a(std::move(y));
    const auto& rewards = rewards_at(a);
    return replicator_field(a.values(), rewards, cfg_.normalize_rewards, cfg_.normalization_floor);
  }

 private:
  const std::vector<double>& rewards_at(const Attention& a) {
    // Binary rewards do not depend on the attention vector.
    const bool constant = spec_.scheme == RewardScheme::binary && cfg_.rewards.mode != RewardMode::monte_carlo;
    if (constant && !cached_.empty()) return cached_;
    cached_ = expected_rewards(model_, a, spec_, cfg_.rewards).values;
    return cached_;
  }

  const FactorModel& model_;
  const RewardSpec& spec_;
  const IntegratorConfig& cfg_;
  std::vector<double> cached_;
};

double raw_max(const ReplicatorField& f) {
  double m = 0.0;
  for (double v : f.rate) m = std::max(m, std::abs(v));
  return m / f.scale;
}

void record(Trajectory& traj, const FactorModel& model, double t, std::vector<double> y) {
  repair_simplex(y, 0.0);
  Attention a(std::move(y));
  traj.times.push_back(t);
  traj.accuracy.push_back(collective_accuracy(model, a));
  traj.diversity.push_back(diversity(a));
  traj.states.push_back(std::move(a));
}

}  // namespace

Trajectory integrate(const FactorModel& model, const RewardSpec& spec, const Attention& init,
                     const IntegratorConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (init.size() != model.size()) throw InvalidArgument("model and initial attention dimensions differ");
  const std::size_t n = model.size();

  FieldEvaluator field(model, spec, cfg);
  Trajectory traj;
  std::vector<double> y(init.values().begin(), init.values().end());
  record(traj, model, 0.0, y);

  double t = 0.0;
  double h = std::min(cfg.initial_step, cfg.t_max);
  auto f0 = field(y);
  std::size_t k_record = 0;
  auto next_record = [&] {
    return cfg.record_start * std::pow(10.0, static_cast<double>(k_record) / static_cast<double>(cfg.points_per_decade));
  };
  std::vector<double> step_times, step_derivs;
  step_times.push_back(0.0);
  step_derivs.push_back(raw_max(f0));
  // Accepted states of the last window, for the averaged velocity.
  const std::size_t window = std::max<std::size_t>(1, cfg.equilibrium_window);
  std::deque<std::pair<double, std::vector<double>>> recent;
  recent.emplace_back(0.0, y);

  std::vector<double> ytmp(n), y1(n), err(n);
  std::size_t steps = 0;
  while (t < cfg.t_max && steps < cfg.max_steps) {
    h = std::min(h, cfg.t_max - t);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * f0.rate[i];
    const auto k2 = field(ytmp);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.75 * h * k2.rate[i];
    const auto k3 = field(ytmp);
    for (std::size_t i = 0; i < n; ++i) {
      y1[i] = y[i] + h * (2.0 / 9.0 * f0.rate[i] + 1.0 / 3.0 * k2.rate[i] + 4.0 / 9.0 * k3.rate[i]);
    }
    repair_simplex(y1, cfg.simplex_floor);
    auto k4 = field(y1);
    double err_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (-5.0 / 72.0 * f0.rate[i] + 1.0 / 12.0 * k2.rate[i] + 1.0 / 9.0 * k3.rate[i] -
                            1.0 / 8.0 * k4.rate[i]);
      const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err_norm = std::max(err_norm, std::abs(e) / scale);
    }
    if (err_norm > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err_norm, -1.0 / 3.0));
      if (h < cfg.min_step) {
        std::vector<double> last = y;
        throw StiffnessError("step size underflow at t = " + std::to_string(t), t, std::move(last));
      }
      continue;
    }

    const double t1 = t + h;
    // Cubic Hermite dense output for the recording schedule.
    while (next_record() <= t1) {
      const double tr = next_record();
      ++k_record;
      if (tr <= t) continue;
      const double s = (tr - t) / h;
      const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
      const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
      std::vector<double> yr(n);
      for (std::size_t i = 0; i < n; ++i) {
        yr[i] = h00 * y[i] + h10 * h * f0.rate[i] + h01 * y1[i] + h11 * h * k4.rate[i];
      }
      record(traj, model, tr, std::move(yr));
    }

    y = y1;
    t = t1;
    ++steps;
    f0 = std::move(k4);
    recent.emplace_back(t, y);
    if (recent.size() > window + 1) recent.pop_front();
    double speed = raw_max(f0);
    if (recent.size() == window + 1) {
      const auto& [t_old, y_old] = recent.front();
      double moved = 0.0;
      for (std::size_t i = 0; i < n; ++i) moved = std::max(moved, std::abs(y[i] - y_old[i]));
      speed = std::min(speed, moved / (t - t_old) / f0.scale);
    }
    step_times.push_back(t);
    step_derivs.push_back(speed);
    h *= err_norm > 0.0 ? std::clamp(0.9 * std::pow(err_norm, -1.0 / 3.0), 0.2, 5.0) : 5.0;

    if (auto eq = detect_equilibrium(std::span(step_times).last(std::min(step_times.size(), cfg.equilibrium_window)),
                                     std::span(step_derivs).last(std::min(step_derivs.size(), cfg.equilibrium_window)),
                                     cfg.equilibrium_tol, cfg.equilibrium_window)) {
      traj.converged_at = *eq;
      break;
    }
  }
  if (traj.times.back() < t) record(traj, model, t, y);
  return traj;
}

}  // namespace cilab
