#include "mheat/scalar_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mheat/errors.hpp"
#include "mheat/geometry.hpp"

namespace mheat {

Point make_point(std::initializer_list<double> coords, int chart) {
  Vec x(static_cast<int>(coords.size()));
  int i = 0;
  for (double c : coords) x[i++] = c;
  return Point(std::move(x), chart);
}

ScalarField ScalarField::constant(double c) {
  ScalarField f("constant", [c](const Point&) { return c; });
  f.constant_ = c;
  return f;
}

ScalarField ScalarField::on_canonical(std::string name, std::shared_ptr<const Geometry> geometry,
                                      std::function<double(const Vec&)> fn) {
  return ScalarField(std::move(name), [geometry, fn = std::move(fn)](const Point& p) {
    return p.chart == 0 ? fn(p.x) : fn(geometry->canonical(p).x);
  });
}

ScalarField ScalarField::scaled(double q) const {
  if (constant_) {
    ScalarField f = constant(q * *constant_);
    f.name_ = name_;
    return f;
  }
  return ScalarField(name_, [fn = fn_, q](const Point& p) { return q * fn(p); });
}

ScalarField ScalarField::abs() const {
  if (constant_) return constant(std::abs(*constant_));
  return ScalarField("|" + name_ + "|", [fn = fn_](const Point& p) { return std::abs(fn(p)); });
}

ScalarField ScalarField::negative_part() const {
  if (constant_) return constant(std::max(-*constant_, 0.0));
  return ScalarField(name_ + "^-",
                     [fn = fn_](const Point& p) { return std::max(-fn(p), 0.0); });
}

// Radial profiles ---------------------------------------------------------------

RadialProfile RadialProfile::linear() {
  return {"linear", [](double r) { return r; }, [](double) { return 1.0; },
          [](double) { return 0.0; }};
}

RadialProfile RadialProfile::power(double c, double a) {
  return {"power",
          [c, a](double r) { return c * std::pow(r, a); },
          [c, a](double r) { return c * a * std::pow(r, a - 1.0); },
          [c, a](double r) { return c * a * (a - 1.0) * std::pow(r, a - 2.0); }};
}

RadialProfile RadialProfile::sinh(double scale) {
  return {"sinh",
          [scale](double r) { return scale * std::sinh(r / scale); },
          [scale](double r) { return std::cosh(r / scale); },
          [scale](double r) { return std::sinh(r / scale) / scale; }};
}

RadialProfile RadialProfile::sin(double scale) {
  return {"sin",
          [scale](double r) { return scale * std::sin(r / scale); },
          [scale](double r) { return std::cos(r / scale); },
          [scale](double r) { return -std::sin(r / scale) / scale; }};
}

namespace {

struct CubicSpline {
  std::vector<double> x, y, m;  // m: second derivatives at the knots

  CubicSpline(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
    const std::size_t n = x.size();
    m.assign(n, 0.0);
    if (n < 3) return;
    // Tridiagonal solve for natural boundary conditions (m_0 = m_{n-1} = 0).
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
      const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
      const double rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) m[i] = d[i] - c[i] * m[i + 1];
  }

  std::size_t segment(double r) const {
    auto it = std::upper_bound(x.begin(), x.end(), r);
    std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    return std::min(i, x.size() - 2);
  }

  double slope_at(std::size_t i, bool left_end) const {
    const double h = x[i + 1] - x[i];
    const double base = (y[i + 1] - y[i]) / h;
    return left_end ? base - h * (2 * m[i] + m[i + 1]) / 6.0 : base + h * (m[i] + 2 * m[i + 1]) / 6.0;
  }

  double eval(double r, int order) const {
    if (r < x.front() || r > x.back()) {
      const bool left = r < x.front();
      const std::size_t i = left ? 0 : x.size() - 2;
      const double x0 = left ? x.front() : x.back();
      const double y0 = left ? y.front() : y.back();
      const double s = slope_at(i, left);
      if (order == 0) return y0 + s * (r - x0);
      return order == 1 ? s : 0.0;
    }
    const std::size_t i = segment(r);
    const double h = x[i + 1] - x[i];
    const double a = (x[i + 1] - r) / h, b = (r - x[i]) / h;
    switch (order) {
      case 0:
        return a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
      case 1:
        return (y[i + 1] - y[i]) / h + (-(3 * a * a - 1) * m[i] + (3 * b * b - 1) * m[i + 1]) * h / 6.0;
      default:
        return a * m[i] + b * m[i + 1];
    }
  }
};

}  // namespace

RadialProfile RadialProfile::table(std::vector<double> r, std::vector<double> psi) {
  if (r.size() != psi.size() || r.size() < 2)
    throw DomainError("radial table needs at least two (r, psi) pairs of equal length");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (!(r[i] > r[i - 1])) throw DomainError("radial table abscissae must increase");
  auto spline = std::make_shared<const CubicSpline>(std::move(r), std::move(psi));
  return {"table", [spline](double s) { return spline->eval(s, 0); },
          [spline](double s) { return spline->eval(s, 1); },
          [spline](double s) { return spline->eval(s, 2); }};
}

RadialProfile RadialProfile::from_function(std::string name, std::function<double(double)> psi,
                                           double h) {
  auto d1 = [psi, h](double r) { return (psi(r + h) - psi(r - h)) / (2 * h); };
  // Larger step for the second difference so that roundoff stays near 1e-8.
  const double h2 = 100 * h;
  auto d2 = [psi, h2](double r) { return (psi(r + h2) - 2 * psi(r) + psi(r - h2)) / (h2 * h2); };
  return {std::move(name), psi, d1, d2};
}

RadialProfile RadialProfile::scaled(double c) const {
  return {name, [f = value, c](double r) { return c * f(r); },
          [f = d1, c](double r) { return c * f(r); }, [f = d2, c](double r) { return c * f(r); }};
}

// Weights -------------------------------------------------------------------------

WeightPotential WeightPotential::quadratic(double a) {
  WeightPotential w;
  w.name = "quadratic";
  w.value = ScalarField("quadratic", [a](const Point& p) { return 0.5 * a * p.x.squaredNorm(); });
  w.gradient = [a](const Point& p) -> Vec { return a * p.x; };
  w.hessian = [a](const Point& p) -> Mat { return a * Mat::Identity(p.dim(), p.dim()); };
  return w;
}

WeightPotential WeightPotential::from_function(std::string name, ScalarField phi, double h) {
  WeightPotential w;
  w.name = std::move(name);
  w.value = phi;
  w.gradient = [phi, h](const Point& p) { return fd_gradient(phi, p, h * 0.1); };
  w.hessian = [phi, h](const Point& p) { return fd_hessian(phi, p, h); };
  return w;
}

Vec fd_gradient(const ScalarField& f, const Point& p, double h) {
  const int d = p.dim();
  const double step = h * (1.0 + p.x.norm());
  Vec g(d);
  for (int i = 0; i < d; ++i) {
    Point a = p, b = p;
    a.x[i] += step;
    b.x[i] -= step;
    g[i] = (f(a) - f(b)) / (2 * step);
  }
  return g;
}

Mat fd_hessian(const ScalarField& f, const Point& p, double h) {
  const int d = p.dim();
  const double step = h * (1.0 + p.x.norm());
  Mat H(d, d);
  const double f0 = f(p);
  for (int i = 0; i < d; ++i) {
    Point a = p, b = p;
    a.x[i] += step;
    b.x[i] -= step;
    H(i, i) = (f(a) - 2 * f0 + f(b)) / (step * step);
    for (int j = i + 1; j < d; ++j) {
      Point pp = p, pm = p, mp = p, mm = p;
      pp.x[i] += step, pp.x[j] += step;
      pm.x[i] += step, pm.x[j] -= step;
      mp.x[i] -= step, mp.x[j] += step;
      mm.x[i] -= step, mm.x[j] -= step;
      H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * step * step);
    }
  }
  return H;
}

}  // namespace mheat
