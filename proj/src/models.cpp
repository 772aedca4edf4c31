#include "mheat/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mheat {

namespace {

bool finite(const Vec& x) { return x.allFinite(); }

}  // namespace

// Euclidean --------------------------------------------------------------------

bool Euclidean::in_domain(const Point& p) const { return p.dim() == dim() && finite(p.x); }

Mat Euclidean::metric(const Point&) const { return Mat::Identity(dim(), dim()); }

Tensor3 Euclidean::metric_derivatives(const Point&) const { return Tensor3(dim()); }

Tensor3 Euclidean::christoffel(const Point&) const { return Tensor3(dim()); }

std::optional<Mat> Euclidean::ricci_closed_form(const Point&) const {
  return Mat::Zero(dim(), dim());
}

std::optional<double> Euclidean::ball_volume(double r) const {
  const double d = dim();
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(r, d);
}

Point Euclidean::exp_map(const Point& x, const Vec& v) const { return Point(x.x + v, x.chart); }

GeodesicPath Euclidean::connect(const Point& u, const Point& v, int samples) const {
  GeodesicPath path;
  path.start = u;
  path.end = v;
  const Vec delta = v.x - u.x;
  for (int i = 0; i < samples; ++i) {
    const double r = samples > 1 ? static_cast<double>(i) / (samples - 1) : 0.0;
    path.params.push_back(r);
    path.points.emplace_back(u.x + r * delta, u.chart);
    path.velocities.push_back(delta);
  }
  path.length = delta.norm();
  return path;
}

double Euclidean::distance(const Point& u, const Point& v) const { return (v.x - u.x).norm(); }

Vec Euclidean::transport(const Point&, const Point&, const Vec& w) const { return w; }

std::vector<Point> Euclidean::geodesic_points(const Point& u, const Point& v,
                                              std::span<const double> params) const {
  std::vector<Point> out;
  out.reserve(params.size());
  for (double r : params) out.emplace_back(u.x + r * (v.x - u.x), u.chart);
  return out;
}

// Space forms -------------------------------------------------------------------

SpaceForm::SpaceForm(int dim, int sign, double scale) : Geometry(dim), sign_(sign), scale_(scale) {
  if (!(scale > 0.0)) throw DomainError("space form scale must be positive");
}

double SpaceForm::eta(const AmbientVec& a, const AmbientVec& b) const {
  double s = a.dot(b);
  if (sign_ < 0) s -= 2.0 * a[0] * b[0];
  return s;
}

Vec SpaceForm::pull_back(const Point& p, const AmbientVec& V) const {
  const AmbientMat E = embed_jacobian(p);
  AmbientVec etaV = V;
  if (sign_ < 0) etaV[0] = -etaV[0];
  const Mat g_unit = metric(p) / (scale_ * scale_);
  return g_unit.llt().solve(E.transpose() * etaV);
}

std::optional<Mat> SpaceForm::ricci_closed_form(const Point& p) const {
  return (sign_ * (dim() - 1) / (scale_ * scale_)) * metric(p);
}

std::optional<RadialProfile> SpaceForm::radial_profile() const {
  return sign_ > 0 ? RadialProfile::sin(scale_) : RadialProfile::sinh(scale_);
}

SpaceForm::Chord SpaceForm::chord(const Point& u, const Point& v) const {
  Chord c;
  c.p = embed(u);
  const AmbientVec q = embed(v);
  const AmbientVec diff = q - c.p;
  const double half = 0.5 * std::sqrt(std::max(0.0, eta(diff, diff)));
  c.angle = 2.0 * (sign_ > 0 ? std::asin(std::min(half, 1.0)) : std::asinh(half));
  if (sign_ > 0 && scale_ * c.angle > std::numbers::pi * scale_ - 1e-6)
    throw CutLocusError("points are antipodal (within 1e-6 of the cut locus)");
  // q − C(α)p written so that it stays accurate for nearby points.
  const double s_half = sn(0.5 * c.angle);
  AmbientVec dir = diff + (2.0 * sign_ * s_half * s_half) * c.p;
  const double len = std::sqrt(std::max(0.0, eta(dir, dir)));
  c.w = len > 0.0 ? AmbientVec(dir / len) : AmbientVec(AmbientVec::Zero(dir.size()));
  return c;
}

double SpaceForm::distance(const Point& u, const Point& v) const {
  return scale_ * chord(u, v).angle;
}

double SpaceForm::radial_coordinate(const Point& p) const { return distance(origin(), p); }

Point SpaceForm::exp_map(const Point& x, const Vec& v) const {
  const AmbientVec p = embed(x);
  const AmbientVec V = embed_jacobian(x) * v;
  const double alpha = std::sqrt(std::max(0.0, eta(V, V)));
  if (alpha == 0.0) return x;
  const AmbientVec q = cs(alpha) * p + (sn(alpha) / alpha) * V;
  return from_ambient(q, x.chart);
}

GeodesicPath SpaceForm::connect(const Point& u, const Point& v, int samples) const {
  const Chord c = chord(u, v);
  GeodesicPath path;
  path.start = u;
  path.end = v;
  path.length = scale_ * c.angle;
  int chart = u.chart;
  for (int i = 0; i < samples; ++i) {
    const double r = samples > 1 ? static_cast<double>(i) / (samples - 1) : 0.0;
    const double a = r * c.angle;
    Point pt = i == 0 ? u : i == samples - 1 ? v : from_ambient(cs(a) * c.p + sn(a) * c.w, chart);
    chart = pt.chart;
    const AmbientVec vel = c.angle * (-sign_ * sn(a) * c.p + cs(a) * c.w);
    path.params.push_back(r);
    path.velocities.push_back(pull_back(pt, vel));
    path.points.push_back(std::move(pt));
  }
  return path;
}

Vec SpaceForm::transport(const Point& u, const Point& v, const Vec& w) const {
  const Chord c = chord(u, v);
  const AmbientVec V = embed_jacobian(u) * w;
  if (c.angle == 0.0) return w;
  const AmbientVec Tq = -sign_ * sn(c.angle) * c.p + cs(c.angle) * c.w;
  const AmbientVec moved = V + eta(V, c.w) * (Tq - c.w);
  return pull_back(v, moved);
}

std::vector<Point> SpaceForm::geodesic_points(const Point& u, const Point& v,
                                              std::span<const double> params) const {
  const Chord c = chord(u, v);
  std::vector<Point> out;
  out.reserve(params.size());
  int chart = u.chart;
  for (double r : params) {
    const double a = r * c.angle;
    out.push_back(from_ambient(cs(a) * c.p + sn(a) * c.w, chart));
    chart = out.back().chart;
  }
  return out;
}

// Sphere --------------------------------------------------------------------------
//
// Local ambient coordinates q_0..q_d of chart coordinates θ_0..θ_{d-1}:
//   q_i = sin θ_0 ⋯ sin θ_{i-1} cos θ_i   (i < d),
//   q_d = sin θ_0 ⋯ sin θ_{d-2} sin θ_{d-1},
// and chart c places q_i on ambient axis (i + c) mod (d + 1).

Sphere::Sphere(int dim, double radius)
    : SpaceForm(dim, +1, radius), switch_threshold_(0.5 / (dim + 1)) {}

bool Sphere::in_domain(const Point& p) const {
  if (p.dim() != dim() || !finite(p.x) || p.chart < 0 || p.chart > dim()) return false;
  for (int j = 0; j + 1 < dim(); ++j)
    if (!(p.x[j] > 0.0 && p.x[j] < std::numbers::pi)) return false;
  return true;
}

Mat Sphere::metric(const Point& p) const {
  const int d = dim();
  Mat g = Mat::Zero(d, d);
  double s = scale();
  for (int k = 0; k < d; ++k) {
    g(k, k) = s * s;
    s *= std::sin(p.x[k]);
  }
  return g;
}

Tensor3 Sphere::christoffel(const Point& p) const {
  const int d = dim();
  Tensor3 gamma(d);
  Mat g = metric(p);
  for (int m = 0; m + 1 < d; ++m) {
    const double cot = std::cos(p.x[m]) / std::sin(p.x[m]);
    for (int k = m + 1; k < d; ++k) {
      gamma(k, k, m) = cot;
      gamma(k, m, k) = cot;
      gamma(m, k, k) = -(g(k, k) / g(m, m)) * cot;
    }
  }
  return gamma;
}

AmbientVec Sphere::embed(const Point& p) const {
  const int d = dim();
  AmbientVec y(d + 1);
  double s = 1.0;
  for (int i = 0; i < d; ++i) {
    y[(i + p.chart) % (d + 1)] = s * std::cos(p.x[i]);
    s *= std::sin(p.x[i]);
  }
  y[(d + p.chart) % (d + 1)] = s;
  return y;
}

AmbientMat Sphere::embed_jacobian(const Point& p) const {
  const int d = dim();
  // Factor j of q_i and its derivative: sin θ_j for j < i, cos θ_i at j = i < d.
  auto factor = [&](int i, int j, bool deriv) {
    const double th = p.x[j];
    if (j < i) return deriv ? std::cos(th) : std::sin(th);
    return deriv ? -std::sin(th) : std::cos(th);
  };
  AmbientMat E = AmbientMat::Zero(d + 1, d);
  for (int i = 0; i <= d; ++i) {
    const int nfactors = std::min(i + 1, d);
    for (int k = 0; k < nfactors; ++k) {
      double prod = 1.0;
      for (int j = 0; j < nfactors; ++j) prod *= factor(i, j, j == k);
      E((i + p.chart) % (d + 1), k) = prod;
    }
  }
  return E;
}

double Sphere::last_ring_sq(const AmbientVec& y, int chart) const {
  const int d = dim();
  const double a = y[(d - 1 + chart) % (d + 1)];
  const double b = y[(d + chart) % (d + 1)];
  return a * a + b * b;
}

Point Sphere::coordinates(const AmbientVec& y_in, int chart) const {
  const int d = dim();
  const AmbientVec y = y_in / y_in.norm();
  Vec theta(d);
  double tail_sq = 1.0;
  for (int i = 0; i + 1 < d; ++i) {
    const double qi = y[(i + chart) % (d + 1)];
    tail_sq = std::max(0.0, tail_sq - qi * qi);
    theta[i] = std::atan2(std::sqrt(tail_sq), qi);
  }
  theta[d - 1] = std::atan2(y[(d + chart) % (d + 1)], y[(d - 1 + chart) % (d + 1)]);
  return Point(std::move(theta), chart);
}

bool Sphere::wants_chart_switch(const Point& p) const {
  if (dim() < 2) return false;
  double s = 1.0;
  for (int j = 0; j + 1 < dim(); ++j) s *= std::sin(p.x[j]);
  return s * s < switch_threshold_;
}

int Sphere::preferred_chart(const Point& p) const {
  if (dim() < 2) return p.chart;
  const AmbientVec y = embed(p);
  int best = p.chart;
  double best_val = last_ring_sq(y, p.chart);
  for (int c = 0; c <= dim(); ++c) {
    const double val = last_ring_sq(y, c);
    if (val > best_val) {
      best = c;
      best_val = val;
    }
  }
  return best;
}

Point Sphere::to_chart(const Point& p, int chart, Mat* jacobian) const {
  if (chart < 0 || chart > dim()) throw DomainError("sphere chart index out of range");
  if (chart == p.chart) {
    if (jacobian) *jacobian = Mat::Identity(dim(), dim());
    return p;
  }
  const Point q = coordinates(embed(p), chart);
  if (!in_domain(q)) throw DomainError("point lies on the singular set of the requested chart");
  if (jacobian) {
    const Mat gq = metric(q) / (scale() * scale());
    *jacobian = gq.llt().solve(embed_jacobian(q).transpose() * embed_jacobian(p));
  }
  return q;
}

Point Sphere::from_ambient(const AmbientVec& y, int chart_hint) const {
  int chart = chart_hint;
  if (dim() >= 2 && last_ring_sq(y, chart) < switch_threshold_) {
    double best_val = -1.0;
    for (int c = 0; c <= dim(); ++c) {
      const double val = last_ring_sq(y, c);
      if (val > best_val) {
        chart = c;
        best_val = val;
      }
    }
  }
  return coordinates(y, chart);
}

Point Sphere::origin() const {
  Vec theta = Vec::Constant(dim(), 0.5 * std::numbers::pi);
  theta[dim() - 1] = 0.0;
  return Point(std::move(theta), 0);
}

// Hyperbolic ----------------------------------------------------------------------
//
// Hyperboloid coordinates of the half-space point (x', y), s = |x'|² + y²:
//   X_0 = (1 + s)/(2y),  X_i = x_i / y,  X_d = (1 − s)/(2y).

Hyperbolic::Hyperbolic(int dim, double scale) : SpaceForm(dim, -1, scale) {}

bool Hyperbolic::in_domain(const Point& p) const {
  return p.dim() == dim() && p.chart == 0 && finite(p.x) && p.x[dim() - 1] > 0.0;
}

Mat Hyperbolic::metric(const Point& p) const {
  const double y = p.x[dim() - 1];
  return (scale() * scale() / (y * y)) * Mat::Identity(dim(), dim());
}

Tensor3 Hyperbolic::christoffel(const Point& p) const {
  const int d = dim();
  const int last = d - 1;
  const double inv_y = 1.0 / p.x[last];
  Tensor3 gamma(d);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double v = (i == k && j == last) + (j == k && i == last) - (i == j && k == last);
        gamma(k, i, j) = -inv_y * v;
      }
  return gamma;
}

Point Hyperbolic::origin() const {
  Vec x = Vec::Zero(dim());
  x[dim() - 1] = 1.0;
  return Point(std::move(x), 0);
}

double Hyperbolic::radial_coordinate(const Point& p) const {
  return scale() * std::acosh(std::max(1.0, embed(p)[0]));
}

AmbientVec Hyperbolic::embed(const Point& p) const {
  const int d = dim();
  const double y = p.x[d - 1];
  const double s = p.x.squaredNorm();
  AmbientVec X(d + 1);
  X[0] = (1.0 + s) / (2.0 * y);
  for (int i = 0; i + 1 < d; ++i) X[i + 1] = p.x[i] / y;
  X[d] = (1.0 - s) / (2.0 * y);
  return X;
}

AmbientMat Hyperbolic::embed_jacobian(const Point& p) const {
  const int d = dim();
  const double y = p.x[d - 1];
  const double s = p.x.squaredNorm();
  AmbientMat E = AmbientMat::Zero(d + 1, d);
  for (int j = 0; j + 1 < d; ++j) {
    E(0, j) = p.x[j] / y;
    E(j + 1, j) = 1.0 / y;
    E(j + 1, d - 1) = -p.x[j] / (y * y);
    E(d, j) = -p.x[j] / y;
  }
  E(0, d - 1) = 1.0 - (1.0 + s) / (2.0 * y * y);
  E(d, d - 1) = -1.0 - (1.0 - s) / (2.0 * y * y);
  return E;
}

Point Hyperbolic::from_ambient(const AmbientVec& X, int) const {
  const int d = dim();
  const double y = 1.0 / (X[0] + X[d]);
  Vec x(d);
  for (int i = 0; i + 1 < d; ++i) x[i] = X[i + 1] * y;
  x[d - 1] = y;
  return Point(std::move(x), 0);
}

// Radial model ----------------------------------------------------------------------

RadialModel::RadialModel(int dim, RadialProfile psi) : Geometry(dim), psi_(std::move(psi)) {}

bool RadialModel::in_domain(const Point& p) const {
  if (p.dim() != dim() || p.chart != 0 || !finite(p.x)) return false;
  const double r = p.x.norm();
  return r == 0.0 || psi_.value(r) > 0.0;
}

Mat RadialModel::metric(const Point& p) const {
  const int d = dim();
  const double r = p.x.norm();
  if (r == 0.0) return Mat::Identity(d, d);
  const Vec xhat = p.x / r;
  const Mat radial = xhat * xhat.transpose();
  const double ratio = psi_.value(r) / r;
  return radial + ratio * ratio * (Mat::Identity(d, d) - radial);
}

std::optional<Mat> RadialModel::ricci_closed_form(const Point& p) const {
  const int d = dim();
  const double r = p.x.norm();
  if (r < 1e-6) return std::nullopt;
  const double psi = psi_.value(r), p1 = psi_.d1(r), p2 = psi_.d2(r);
  const Vec xhat = p.x / r;
  const Mat radial = xhat * xhat.transpose();
  const Mat g = metric(p);
  const double radial_curv = -(d - 1) * p2 / psi;
  const double tangential_curv = -p2 / psi + (d - 2) * (1.0 - p1 * p1) / (psi * psi);
  return radial_curv * radial + tangential_curv * (g - radial);
}

// Custom -----------------------------------------------------------------------------

CustomGeometry::CustomGeometry(int dim, std::string name, MetricFn metric, DomainFn domain)
    : Geometry(dim), name_(std::move(name)), metric_(std::move(metric)), domain_(std::move(domain)) {}

bool CustomGeometry::in_domain(const Point& p) const {
  return p.dim() == dim() && p.chart == 0 && finite(p.x) && domain_(p.x);
}

// Factories --------------------------------------------------------------------------

ManifoldModel euclidean(int d) {
  return {std::make_shared<Euclidean>(d), std::nullopt, ScalarField::constant(0.0)};
}

ManifoldModel sphere(int d, double radius) {
  return {std::make_shared<Sphere>(d, radius), std::nullopt,
          ScalarField::constant((d - 1) / (radius * radius))};
}

ManifoldModel hyperbolic(int d, double scale) {
  return {std::make_shared<Hyperbolic>(d, scale), std::nullopt,
          ScalarField::constant(-(d - 1) / (scale * scale))};
}

ManifoldModel radial_model(int d, RadialProfile psi, ScalarField k) {
  return {std::make_shared<RadialModel>(d, std::move(psi)), std::nullopt, std::move(k)};
}

ManifoldModel custom_model(int d, std::string name, CustomGeometry::MetricFn metric,
                           CustomGeometry::DomainFn domain, ScalarField k) {
  return {std::make_shared<CustomGeometry>(d, std::move(name), std::move(metric), std::move(domain)),
          std::nullopt, std::move(k)};
}

ManifoldModel with_weight(ManifoldModel m, WeightPotential phi) {
  m.weight = std::move(phi);
  return m;
}

ManifoldModel with_lower_bound(ManifoldModel m, ScalarField k) {
  m.ricci_lower_bound = std::move(k);
  return m;
}

}  // namespace mheat
