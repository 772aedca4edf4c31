#include "mheat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mheat/quadrature.hpp"

namespace mheat {

namespace {

double stencil_step(const Point& p, double h) { return h * (1.0 + p.x.norm()); }

Point shifted(const Point& p, int axis, double delta) {
  Point q = p;
  q.x[axis] += delta;
  return q;
}

}  // namespace

Geometry::Geometry(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim)
    throw DomainError("dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
}

Tensor3 Geometry::metric_derivatives(const Point& p) const {
  const int d = dim();
  const double h = stencil_step(p, 1e-5);
  Tensor3 dg(d);
  for (int k = 0; k < d; ++k) {
    const Point plus = shifted(p, k, h);
    const Point minus = shifted(p, k, -h);
    if (!in_domain(plus) || !in_domain(minus))
      throw StencilError("metric stencil leaves the chart domain");
    const Mat diff = (metric(plus) - metric(minus)) / (2.0 * h);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) dg(k, i, j) = diff(i, j);
  }
  return dg;
}

Tensor3 Geometry::christoffel(const Point& p) const {
  const int d = dim();
  const Mat ginv = metric(p).inverse();
  const Tensor3 dg = metric_derivatives(p);
  Tensor3 gamma(d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      // First kind Γ_{lij} = ½(∂_i g_{lj} + ∂_j g_{li} − ∂_l g_{ij}).
      Vec first(d);
      for (int l = 0; l < d; ++l) first[l] = 0.5 * (dg(i, l, j) + dg(j, l, i) - dg(l, i, j));
      const Vec second = ginv * first;
      for (int k = 0; k < d; ++k) {
        gamma(k, i, j) = second[k];
        gamma(k, j, i) = second[k];
      }
    }
  }
  return gamma;
}

Point Geometry::to_chart(const Point& p, int chart, Mat* jacobian) const {
  if (chart != p.chart) throw DomainError(name() + " has a single chart");
  if (jacobian) *jacobian = Mat::Identity(dim(), dim());
  return p;
}

Point Geometry::origin() const { return Point(Vec::Zero(dim()), 0); }

double Geometry::radial_coordinate(const Point& p) const { return p.x.norm(); }

std::optional<double> Geometry::ball_volume(double r) const {
  const auto psi = radial_profile();
  if (!psi) return std::nullopt;
  const int d = dim();
  const double sphere_area = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
  const double integral = integrate_composite(
      [&](double s) { return std::pow(psi->value(s), d - 1); }, 0.0, r, 64);
  return sphere_area * integral;
}

Point Geometry::exp_map(const Point& x, const Vec& v) const {
  const double speed = norm(metric(x), v);
  const int steps = 128 * std::max(1, static_cast<int>(std::ceil(speed)));
  return numeric::integrate_geodesic(*this, x, v, steps).end;
}

GeodesicPath Geometry::connect(const Point& u, const Point& v, int samples) const {
  return numeric::shoot(*this, u, v, samples);
}

double Geometry::distance(const Point& u, const Point& v) const {
  return connect(u, v).length;
}

Vec Geometry::transport(const Point& u, const Point& v, const Vec& w) const {
  return numeric::transport_along(*this, connect(u, v), w);
}

std::vector<Point> Geometry::geodesic_points(const Point& u, const Point& v,
                                             std::span<const double> params) const {
  const GeodesicPath path = connect(u, v, 129);
  const int n = static_cast<int>(path.points.size()) - 1;
  std::vector<Point> out;
  out.reserve(params.size());
  for (double r : params) {
    const double s = std::clamp(r, 0.0, 1.0) * n;
    const int i = std::min(static_cast<int>(s), n - 1);
    const double tau = s - i;
    const double h = 1.0 / n;
    const Point& a = path.points[i];
    Point b = path.points[i + 1];
    Vec vb = path.velocities[i + 1];
    if (b.chart != a.chart) {
      Mat jac;
      b = to_chart(b, a.chart, &jac);
      vb = jac * vb;
    }
    // Cubic Hermite interpolation using positions and velocities.
    const double h00 = 2 * tau * tau * tau - 3 * tau * tau + 1;
    const double h10 = tau * tau * tau - 2 * tau * tau + tau;
    const double h01 = -2 * tau * tau * tau + 3 * tau * tau;
    const double h11 = tau * tau * tau - tau * tau;
    Vec x = h00 * a.x + h10 * h * path.velocities[i] + h01 * b.x + h11 * h * vb;
    out.emplace_back(std::move(x), a.chart);
  }
  return out;
}

// Model operations -----------------------------------------------------------

Mat metric_at(const ManifoldModel& m, const Point& x) {
  if (!m.geo().in_domain(x)) throw DomainError("point outside chart domain");
  return m.geo().metric(x);
}

Tensor3 christoffel_at(const ManifoldModel& m, const Point& x) {
  if (!m.geo().in_domain(x)) throw DomainError("point outside chart domain");
  return m.geo().christoffel(x);
}

Mat ricci_at(const ManifoldModel& m, const Point& x) {
  const Geometry& geo = m.geo();
  if (!geo.in_domain(x)) throw DomainError("point outside chart domain");
  const int d = geo.dim();
  const Tensor3 gamma = geo.christoffel(x);
  const double h = stencil_step(x, 1e-4);
  // dgamma[l](k,i,j) = ∂_l Γ^k_{ij}
  std::array<Tensor3, kMaxDim> dgamma;
  for (int l = 0; l < d; ++l) {
    const Point plus = shifted(x, l, h);
    const Point minus = shifted(x, l, -h);
    if (!geo.in_domain(plus) || !geo.in_domain(minus))
      throw StencilError("curvature stencil leaves the chart domain");
    const Tensor3 gp = geo.christoffel(plus);
    const Tensor3 gm = geo.christoffel(minus);
    dgamma[l] = Tensor3(d);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) dgamma[l](k, i, j) = (gp(k, i, j) - gm(k, i, j)) / (2 * h);
  }
  Mat ric = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        s += dgamma[k](k, i, j) - dgamma[j](k, k, i);
        for (int l = 0; l < d; ++l)
          s += gamma(k, k, l) * gamma(l, i, j) - gamma(k, j, l) * gamma(l, k, i);
      }
      ric(i, j) = s;
    }
  }
  return 0.5 * (ric + ric.transpose());
}

Mat covariant_hessian(const Tensor3& gamma, const Vec& grad, const Mat& partials) {
  const int d = gamma.dim();
  Mat hess = partials;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) hess(i, j) -= gamma(k, i, j) * grad[k];
  return hess;
}

namespace {

Mat weight_correction(const ManifoldModel& m, const Point& x) {
  const WeightPotential& w = *m.weight;
  return 2.0 * covariant_hessian(m.geo().christoffel(x), w.gradient(x), w.hessian(x));
}

}  // namespace

Mat bakry_emery_ricci_at(const ManifoldModel& m, const Point& x) {
  Mat ric = ricci_at(m, x);
  if (m.weight) ric += weight_correction(m, x);
  return ric;
}

Mat fast_ricci(const ManifoldModel& m, const Point& x) {
  auto closed = m.geo().ricci_closed_form(x);
  Mat ric = closed ? *closed : ricci_at(m, x);
  if (m.weight) ric += weight_correction(m, x);
  return ric;
}

Point exp_map(const ManifoldModel& m, const Point& x, const Vec& v) {
  if (!m.geo().in_domain(x)) throw DomainError("point outside chart domain");
  if (v.isZero(0.0)) return x;
  return m.geo().exp_map(x, v);
}

GeodesicPath geodesic_connect(const ManifoldModel& m, const Point& u, const Point& v) {
  if (!m.geo().in_domain(u) || !m.geo().in_domain(v))
    throw DomainError("point outside chart domain");
  return m.geo().connect(u, v);
}

double distance(const ManifoldModel& m, const Point& u, const Point& v) {
  if (!m.geo().in_domain(u) || !m.geo().in_domain(v))
    throw DomainError("point outside chart domain");
  return m.geo().distance(u, v);
}

Vec parallel_transport(const ManifoldModel& m, const GeodesicPath& path, const Vec& v) {
  if (!m.geo().in_domain(path.start)) throw DomainError("path start outside chart domain");
  return numeric::transport_along(m.geo(), path, v);
}

double radial_ricci_model(const RadialProfile& psi, int d, double r) {
  if (!(r > 0.0)) throw DomainError("radial expression needs r > 0");
  const double p = psi.value(r);
  if (!(p > 0.0)) throw DomainError("psi must be positive at r");
  const double p1 = psi.d1(r);
  return psi.d2(r) / p - (d - 1) * p1 * p1 / (p * p);
}

double inner(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

double norm(const Mat& g, const Vec& a) { return std::sqrt(std::max(0.0, inner(g, a, a))); }

void orthonormalize(const Mat& g, Mat& frame) {
  const int d = static_cast<int>(frame.cols());
  for (int a = 0; a < d; ++a) {
    Vec col = frame.col(a);
    for (int b = 0; b < a; ++b) {
      const Vec prev = frame.col(b);
      col -= inner(g, prev, col) * prev;
    }
    frame.col(a) = col / norm(g, col);
  }
}

// Numerics ---------------------------------------------------------------------

namespace numeric {

namespace {

struct GeoState {
  Vec x;
  Vec v;
};

GeoState geodesic_rhs(const Geometry& geo, int chart, const Vec& x, const Vec& v) {
  const Point p(x, chart);
  if (!geo.in_domain(p)) throw ChartExitError("geodesic leaves the chart domain");
  return {v, -geo.christoffel(p).contract(v, v)};
}

void rk4_geodesic_step(const Geometry& geo, Point& p, Vec& v, double h) {
  const GeoState k1 = geodesic_rhs(geo, p.chart, p.x, v);
  const GeoState k2 = geodesic_rhs(geo, p.chart, p.x + 0.5 * h * k1.x, v + 0.5 * h * k1.v);
  const GeoState k3 = geodesic_rhs(geo, p.chart, p.x + 0.5 * h * k2.x, v + 0.5 * h * k2.v);
  const GeoState k4 = geodesic_rhs(geo, p.chart, p.x + h * k3.x, v + h * k3.v);
  p.x += (h / 6.0) * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
  v += (h / 6.0) * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
  if (!geo.in_domain(p)) throw ChartExitError("geodesic leaves the chart domain");
}

/// Re-expresses p (and tangent vectors based there) in a better chart if the
/// geometry asks for it.
void maybe_switch(const Geometry& geo, Point& p, std::initializer_list<Vec*> tangents) {
  if (!geo.wants_chart_switch(p)) return;
  Mat jac;
  p = geo.to_chart(p, geo.preferred_chart(p), &jac);
  for (Vec* t : tangents) *t = jac * *t;
}

}  // namespace

GeodesicPath integrate_geodesic(const Geometry& geo, const Point& x, const Vec& v, int steps) {
  if (!geo.in_domain(x)) throw DomainError("geodesic start outside chart domain");
  GeodesicPath path;
  path.start = x;
  path.params.reserve(steps + 1);
  path.points.reserve(steps + 1);
  path.velocities.reserve(steps + 1);
  Point p = x;
  Vec vel = v;
  const double h = 1.0 / steps;
  std::vector<double> speeds;
  speeds.reserve(steps + 1);
  for (int n = 0; n <= steps; ++n) {
    if (n > 0) {
      rk4_geodesic_step(geo, p, vel, h);
      maybe_switch(geo, p, {&vel});
    }
    path.params.push_back(n * h);
    path.points.push_back(p);
    path.velocities.push_back(vel);
    speeds.push_back(norm(geo.metric(p), vel));
  }
  double length = 0.0;
  for (int n = 0; n < steps; ++n) length += 0.5 * h * (speeds[n] + speeds[n + 1]);
  path.length = length;
  path.end = p;
  return path;
}

GeodesicPath shoot(const Geometry& geo, const Point& u, const Point& v, int samples) {
  const int d = geo.dim();
  const int steps = std::max(samples - 1, 256);
  auto residual = [&](const Vec& guess) -> Vec {
    Point end = integrate_geodesic(geo, u, guess, steps).end;
    if (end.chart != v.chart) end = geo.to_chart(end, v.chart);
    return end.x - v.x;
  };
  const Point v_in_u = v.chart == u.chart ? v : geo.to_chart(v, u.chart);
  Vec guess = v_in_u.x - u.x;
  if (guess.norm() == 0.0) {
    GeodesicPath path = integrate_geodesic(geo, u, guess, std::max(samples - 1, 1));
    path.end = v;
    return path;
  }
  const double tol = 1e-10 * (1.0 + v.x.norm());
  Vec f = residual(guess);
  for (int iter = 0; iter < 50 && f.norm() > tol; ++iter) {
    Mat jac(d, d);
    const double h = 1e-6 * (1.0 + guess.norm());
    for (int j = 0; j < d; ++j) {
      Vec gp = guess, gm = guess;
      gp[j] += h;
      gm[j] -= h;
      jac.col(j) = (residual(gp) - residual(gm)) / (2 * h);
    }
    const Vec delta = jac.fullPivLu().solve(-f);
    double lambda = 1.0;
    bool improved = false;
    for (int tries = 0; tries < 20; ++tries, lambda *= 0.5) {
      try {
        const Vec trial = guess + lambda * delta;
        const Vec ft = residual(trial);
        if (ft.norm() < f.norm()) {
          guess = trial;
          f = ft;
          improved = true;
          break;
        }
      } catch (const ChartExitError&) {
      }
    }
    if (!improved) break;
  }
  if (!(f.norm() <= tol)) throw NoConvergence("geodesic shooting did not converge");
  const int out_steps = samples - 1;
  if (out_steps >= steps) return integrate_geodesic(geo, u, guess, out_steps);
  // Integrate at the shooting resolution, then subsample.
  GeodesicPath fine = integrate_geodesic(geo, u, guess, steps);
  if (steps % out_steps != 0) return fine;
  GeodesicPath path;
  path.start = fine.start;
  path.end = fine.end;
  path.length = fine.length;
  const int stride = steps / out_steps;
  for (int n = 0; n <= steps; n += stride) {
    path.params.push_back(fine.params[n]);
    path.points.push_back(fine.points[n]);
    path.velocities.push_back(fine.velocities[n]);
  }
  return path;
}

Vec transport_along(const Geometry& geo, const GeodesicPath& path, const Vec& w) {
  const int steps = std::max(static_cast<int>(path.points.size()) - 1, 256);
  const double h = 1.0 / steps;
  Point p = path.start;
  Vec vel = path.velocities.front();
  Vec carried = w;
  auto rhs = [&](const Vec& x, const Vec& v, const Vec& c, Vec& dx, Vec& dv, Vec& dc) {
    const Point q(x, p.chart);
    if (!geo.in_domain(q)) throw ChartExitError("transport path leaves the chart domain");
    const Tensor3 gamma = geo.christoffel(q);
    dx = v;
    dv = -gamma.contract(v, v);
    dc = -gamma.contract(v, c);
  };
  for (int n = 0; n < steps; ++n) {
    Vec k1x, k1v, k1c, k2x, k2v, k2c, k3x, k3v, k3c, k4x, k4v, k4c;
    rhs(p.x, vel, carried, k1x, k1v, k1c);
    rhs(p.x + 0.5 * h * k1x, vel + 0.5 * h * k1v, carried + 0.5 * h * k1c, k2x, k2v, k2c);
    rhs(p.x + 0.5 * h * k2x, vel + 0.5 * h * k2v, carried + 0.5 * h * k2c, k3x, k3v, k3c);
    rhs(p.x + h * k3x, vel + h * k3v, carried + h * k3c, k4x, k4v, k4c);
    p.x += (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x);
    vel += (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v);
    carried += (h / 6.0) * (k1c + 2 * k2c + 2 * k3c + k4c);
    maybe_switch(geo, p, {&vel, &carried});
  }
  if (p.chart != path.end.chart) {
    Mat jac;
    geo.to_chart(p, path.end.chart, &jac);
    carried = jac * carried;
  }
  return carried;
}

}  // namespace numeric

}  // namespace mheat
