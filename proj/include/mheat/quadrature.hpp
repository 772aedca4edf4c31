#pragma once

#include <cmath>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

namespace mheat {

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      auto [p, dp] = legendre(n, x);
      for (int iter = 0; iter < 100; ++iter) {
        const double dx = p / dp;
        x -= dx;
        std::tie(p, dp) = legendre(n, x);
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  /// (P_n(x), P_n'(x)) by the three-term recurrence.
  static std::pair<double, double> legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0;
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
  }

  /// Nodes and weights mapped to [a, b].
  std::pair<std::vector<double>, std::vector<double>> on(double a, double b) const {
    std::vector<double> x(nodes.size()), w(nodes.size());
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      x[i] = mid + half * nodes[i];
      w[i] = half * weights[i];
    }
    return {x, w};
  }
};

template <class F>
double integrate_gauss(F&& f, double a, double b, int n = 16) {
  static thread_local GaussLegendre cache(16);
  if (static_cast<int>(cache.nodes.size()) != n) cache = GaussLegendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += cache.weights[i] * f(mid + half * cache.nodes[i]);
  return half * s;
}

/// Composite 8-point Gauss–Legendre on `panels` equal panels.
template <class F>
double integrate_composite(F&& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) s += integrate_gauss(f, a + p * h, a + (p + 1) * h, 8);
  return s;
}

}  // namespace mheat
