#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mheat/errors.hpp"
#include "mheat/linalg.hpp"
#include "mheat/scalar_field.hpp"

namespace mheat {

/// Sampled geodesic γ: [0,1] → M. Velocities are derivatives with respect to
/// the parameter, so |γ̇|_g equals `length` along a minimizing geodesic.
struct GeodesicPath {
  Point start;
  Point end;
  std::vector<double> params;
  std::vector<Point> points;
  std::vector<Vec> velocities;
  double length = 0.0;
};

enum class ModelKind { euclidean, sphere, hyperbolic, model, custom };

/// Chart-described Riemannian geometry. Built-in models override the
/// closed-form hooks; everything else falls back to finite differences,
/// geodesic ODE integration and shooting.
class Geometry {
 public:
  virtual ~Geometry() = default;

  int dim() const noexcept { return dim_; }
  virtual std::string name() const = 0;
  virtual ModelKind kind() const { return ModelKind::custom; }

  virtual bool in_domain(const Point& p) const = 0;
  virtual Mat metric(const Point& p) const = 0;
  /// ∂_k g_{ij} stored at (k, i, j). Default: central differences with step
  /// 1e-5·(1+|x|).
  virtual Tensor3 metric_derivatives(const Point& p) const;
  /// Γ^k_{ij} stored at (k, i, j).
  virtual Tensor3 christoffel(const Point& p) const;
  /// Exact Ricci (0,2) tensor where the model knows it. Used on hot paths;
  /// `ricci_at` always goes through the Christoffel symbols.
  virtual std::optional<Mat> ricci_closed_form(const Point&) const { return std::nullopt; }

  /// Atlas management. Charts are small integers; a point may be re-expressed
  /// in another chart with the Jacobian of the transition map.
  virtual bool wants_chart_switch(const Point&) const { return false; }
  virtual int preferred_chart(const Point& p) const { return p.chart; }
  virtual Point to_chart(const Point& p, int chart, Mat* jacobian = nullptr) const;
  Point canonical(const Point& p) const { return to_chart(p, 0); }

  /// Reference point and distance from it; drives explosion detection.
  virtual Point origin() const;
  virtual double radial_coordinate(const Point& p) const;

  /// Radial profile ψ of a rotationally symmetric model, when this is one.
  virtual std::optional<RadialProfile> radial_profile() const { return std::nullopt; }
  /// Volume of a geodesic ball of radius r when it is center independent.
  virtual std::optional<double> ball_volume(double r) const;

  virtual Point exp_map(const Point& x, const Vec& v) const;
  virtual GeodesicPath connect(const Point& u, const Point& v, int samples = 65) const;
  virtual double distance(const Point& u, const Point& v) const;
  /// Parallel transport of w ∈ T_uM to T_vM along the minimizing geodesic.
  virtual Vec transport(const Point& u, const Point& v, const Vec& w) const;
  /// γ(r) for each r in `params` on the minimizing geodesic from u to v.
  virtual std::vector<Point> geodesic_points(const Point& u, const Point& v,
                                             std::span<const double> params) const;

 protected:
  explicit Geometry(int dim);

 private:
  int dim_;
};

/// Geometry data plus the optional weight Φ and the curvature lower bound k.
struct ManifoldModel {
  std::shared_ptr<const Geometry> geometry;
  std::optional<WeightPotential> weight;
  ScalarField ricci_lower_bound;

  int dim() const { return geometry->dim(); }
  const Geometry& geo() const { return *geometry; }
};

// Operations on models -------------------------------------------------------

Mat metric_at(const ManifoldModel& m, const Point& x);
Tensor3 christoffel_at(const ManifoldModel& m, const Point& x);
/// Ricci (0,2) tensor contracted from the Riemann tensor of the Christoffel
/// symbols; derivatives of Γ by central differences with step 1e-4·(1+|x|).
Mat ricci_at(const ManifoldModel& m, const Point& x);
/// Bakry–Émery tensor Ric + 2 Hess Φ (plain Ricci when unweighted).
Mat bakry_emery_ricci_at(const ManifoldModel& m, const Point& x);
/// Closed form where available, otherwise `ricci_at`; weighted when Φ is set.
Mat fast_ricci(const ManifoldModel& m, const Point& x);

/// Covariant Hessian ∂_i∂_j f − Γ^k_{ij} ∂_k f from partial derivatives.
Mat covariant_hessian(const Tensor3& gamma, const Vec& grad, const Mat& partials);

Point exp_map(const ManifoldModel& m, const Point& x, const Vec& v);
GeodesicPath geodesic_connect(const ManifoldModel& m, const Point& u, const Point& v);
double distance(const ManifoldModel& m, const Point& u, const Point& v);
/// Solves v̇^k = −Γ^k_{ij} γ̇^i v^j along `path`; result in the chart of path.end.
Vec parallel_transport(const ManifoldModel& m, const GeodesicPath& path, const Vec& v);

/// ψ''/ψ − (d−1)(ψ')²/ψ², the radial curvature expression of a model metric.
double radial_ricci_model(const RadialProfile& psi, int d, double r);

/// g-inner product and norm at p.
double inner(const Mat& g, const Vec& a, const Vec& b);
double norm(const Mat& g, const Vec& a);

/// Modified Gram–Schmidt on the columns of `frame` in the inner product g.
void orthonormalize(const Mat& g, Mat& frame);

// Generic numerics, also usable by models that only override a subset.
namespace numeric {

/// RK4 integration of the geodesic equation for unit parameter time.
GeodesicPath integrate_geodesic(const Geometry& geo, const Point& x, const Vec& v, int steps);
/// Damped-Newton shooting, at most 50 iterations, residual tolerance 1e-10.
GeodesicPath shoot(const Geometry& geo, const Point& u, const Point& v, int samples);
/// Transport along a sampled path by re-integrating the coupled
/// geodesic/transport system with RK4.
Vec transport_along(const Geometry& geo, const GeodesicPath& path, const Vec& w);

}  // namespace numeric

}  // namespace mheat
