#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <vector>

namespace cilab {

struct QuadratureConfig {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  std::size_t max_panels = 4096;
  // Each interval between consecutive break points starts out split into
  // this many equal panels before adaptive refinement.
  std::size_t initial_panels = 4;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t panels = 0;
  bool converged = true;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const {
    if (error != o.error) return error < o.error;
    return a > o.a;
  }
};

// 15-point Kronrod estimate with the embedded 7-point Gauss rule as error gauge.
template <class F>
Panel gauss_kronrod15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7-15) quadrature over [breaks.front(),
// breaks.back()]. Interior break points are never straddled by a panel, so
// integrand discontinuities placed there are integrated exactly. The panel
// refinement sequence depends only on the integrand and the config, and the
// final sum runs in left-to-right panel order.
template <class F>
QuadratureResult integrate_adaptive(F&& f, std::span<const double> breaks, const QuadratureConfig& cfg) {
  QuadratureResult res;
  if (breaks.size() < 2) return res;
  std::priority_queue<detail::Panel> heap;
  double total_err = 0.0;
  double total = 0.0;
  const std::size_t init = std::max<std::size_t>(1, cfg.initial_panels);
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double lo = breaks[s];
    const double hi = breaks[s + 1];
    if (!(hi > lo)) continue;
    for (std::size_t p = 0; p < init; ++p) {
      const double a = lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(init);
      const double b = p + 1 == init ? hi : lo + (hi - lo) * static_cast<double>(p + 1) / static_cast<double>(init);
      auto panel = detail::gauss_kronrod15(f, a, b);
      total += panel.value;
      total_err += panel.error;
      heap.push(panel);
    }
  }
  while (!heap.empty()) {
    const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
    if (total_err <= tol) break;
    if (heap.size() >= cfg.max_panels) {
      res.converged = false;
      break;
    }
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      res.converged = false;
      break;
    }
    heap.pop();
    auto left = detail::gauss_kronrod15(f, worst.a, mid);
    auto right = detail::gauss_kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  std::vector<detail::Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
  for (const auto& p : panels) {
    res.value += p.value;
    res.error += p.error;
  }
  res.panels = panels.size();
  return res;
}

}  // namespace cilab
