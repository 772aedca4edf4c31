#include "mheat/bochner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mheat {

DiffOpStencil::DiffOpStencil(const ManifoldModel& m, double h, bool weighted)
    : model_(&m), h_(h), weighted_(weighted && m.weight.has_value()) {
  if (!(h > 0.0)) throw ConfigError("stencil step must be positive");
}

Point DiffOpStencil::shifted(const Point& p, int i, double s) const {
  Point q = p;
  q.x[i] += s;
  if (!model_->geo().in_domain(q)) throw StencilError("stencil leaves the chart domain");
  return q;
}

Point DiffOpStencil::shifted(const Point& p, int i, double si, int j, double sj) const {
  Point q = p;
  q.x[i] += si;
  q.x[j] += sj;
  if (!model_->geo().in_domain(q)) throw StencilError("stencil leaves the chart domain");
  return q;
}

Vec DiffOpStencil::partials(const ScalarField& f, const Point& p) const {
  const int d = p.dim();
  Vec df(d);
  for (int i = 0; i < d; ++i) df[i] = (f(shifted(p, i, h_)) - f(shifted(p, i, -h_))) / (2 * h_);
  return df;
}

Mat DiffOpStencil::second_partials(const ScalarField& f, const Point& p) const {
  const int d = p.dim();
  Mat H(d, d);
  const double f0 = f(p);
  for (int i = 0; i < d; ++i) {
    H(i, i) = (f(shifted(p, i, h_)) - 2 * f0 + f(shifted(p, i, -h_))) / (h_ * h_);
    for (int j = 0; j < i; ++j) {
      const double v = (f(shifted(p, i, h_, j, h_)) - f(shifted(p, i, h_, j, -h_)) -
                        f(shifted(p, i, -h_, j, h_)) + f(shifted(p, i, -h_, j, -h_))) /
                       (4 * h_ * h_);
      H(i, j) = H(j, i) = v;
    }
  }
  return H;
}

Vec DiffOpStencil::gradient(const ScalarField& f, const Point& p) const {
  return model_->geo().metric(p).llt().solve(partials(f, p));
}

double DiffOpStencil::gradient_norm_sq(const ScalarField& f, const Point& p) const {
  const Vec df = partials(f, p);
  return df.dot(model_->geo().metric(p).llt().solve(df));
}

Mat DiffOpStencil::hessian(const ScalarField& f, const Point& p) const {
  return covariant_hessian(model_->geo().christoffel(p), partials(f, p), second_partials(f, p));
}

double DiffOpStencil::laplacian(const ScalarField& f, const Point& p) const {
  const Geometry& geo = model_->geo();
  const Mat g = geo.metric(p);
  const Mat ginv = g.llt().solve(Mat::Identity(p.dim(), p.dim()));
  const Vec df = partials(f, p);
  const Mat hess = covariant_hessian(geo.christoffel(p), df, second_partials(f, p));
  double lap = (ginv.cwiseProduct(hess)).sum();
  if (weighted_) lap -= 2.0 * model_->weight->gradient(p).dot(ginv * df);
  return lap;
}

ScalarField DiffOpStencil::gradient_norm_sq_field(const ScalarField& f) const {
  return ScalarField("|grad " + f.name() + "|^2",
                     [self = *this, f](const Point& p) { return self.gradient_norm_sq(f, p); });
}

ScalarField DiffOpStencil::gradient_norm_field(const ScalarField& f) const {
  return ScalarField("|grad " + f.name() + "|", [self = *this, f](const Point& p) {
    return std::sqrt(std::max(0.0, self.gradient_norm_sq(f, p)));
  });
}

ScalarField DiffOpStencil::laplacian_field(const ScalarField& f) const {
  return ScalarField("lap " + f.name(),
                     [self = *this, f](const Point& p) { return self.laplacian(f, p); });
}

BochnerResidual bochner_identity_residual(const ManifoldModel& m, const ScalarField& f,
                                          const std::vector<Point>& grid, double h) {
  const DiffOpStencil op(m, h);
  const ScalarField grad_sq = op.gradient_norm_sq_field(f);
  const ScalarField lap = op.laplacian_field(f);
  BochnerResidual out;
  out.points.reserve(grid.size());
  for (const Point& p : grid) {
    const Mat g = m.geo().metric(p);
    const Mat ginv = g.llt().solve(Mat::Identity(p.dim(), p.dim()));
    const Vec df = op.partials(f, p);
    const Vec grad = ginv * df;
    const Mat hess = op.hessian(f, p);
    // |Hess f|² = g^{ia} g^{jb} H_ij H_ab.
    const double hess_sq = (ginv * hess * ginv).cwiseProduct(hess).sum();
    const double ric = grad.dot(fast_ricci(m, p) * grad);
    const double lhs = 0.5 * op.laplacian(grad_sq, p) - op.partials(lap, p).dot(grad);
    const double rhs = hess_sq + ric;
    out.points.push_back({p, lhs, rhs, lhs - rhs});
    out.max_residual = std::max(out.max_residual, std::abs(lhs - rhs));
  }
  return out;
}

L1BochnerReport l1_bochner_check(const ManifoldModel& m, const ScalarField& f, const ScalarField& k,
                                 const std::vector<Point>& grid, double h, double tolerance) {
  const DiffOpStencil op(m, h);
  const ScalarField grad_norm = op.gradient_norm_field(f);
  const ScalarField lap = op.laplacian_field(f);
  std::vector<double> norms(grid.size());
  double max_norm = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    norms[i] = grad_norm(grid[i]);
    max_norm = std::max(max_norm, norms[i]);
  }
  L1BochnerReport rep;
  rep.tolerance = tolerance;
  const double floor = kGradientFloor * max_norm;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point& p = grid[i];
    if (!(norms[i] > floor)) {
      ++rep.skipped;
      continue;
    }
    const Vec grad = op.gradient(f, p);
    const double lhs = op.laplacian(grad_norm, p) - op.partials(lap, p).dot(grad) / norms[i];
    const double rhs = k(p) * norms[i];
    const double slack = lhs - rhs;
    if (rep.points.empty() || slack < rep.min_slack) {
      rep.min_slack = slack;
      rep.argmin = rep.points.size();
    }
    rep.violations += slack < -tolerance;
    rep.points.push_back({p, lhs, rhs, slack});
  }
  if (rep.points.empty()) throw EmptyGridError("no grid point above the gradient floor");
  return rep;
}

void write_bochner_csv(std::ostream& os, const std::vector<BochnerPoint>& points) {
  const int d = points.empty() ? 0 : points.front().point.dim();
  for (int i = 0; i < d; ++i) os << 'x' << i + 1 << ',';
  os << "lhs,rhs,slack\n";
  char buf[64];
  for (const auto& bp : points) {
    for (int i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,", bp.point.x[i]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,", bp.lhs);
    os << buf;
    std::snprintf(buf, sizeof buf, "%.17g,", bp.rhs);
    os << buf;
    std::snprintf(buf, sizeof buf, "%.17g\n", bp.slack);
    os << buf;
  }
}

std::vector<Point> chart_grid(const Vec& lo, const Vec& hi, int n) {
  const int d = static_cast<int>(lo.size());
  if (n < 1) throw ConfigError("grid needs at least one point per axis");
  std::vector<Point> pts;
  std::vector<int> idx(d, 0);
  while (true) {
    Vec x(d);
    for (int i = 0; i < d; ++i)
      x[i] = n == 1 ? 0.5 * (lo[i] + hi[i]) : lo[i] + (hi[i] - lo[i]) * idx[i] / (n - 1);
    pts.emplace_back(x, 0);
    int a = 0;
    while (a < d && ++idx[a] == n) idx[a++] = 0;
    if (a == d) break;
  }
  return pts;
}

}  // namespace mheat
