#pragma once

#include <functional>
#include <memory>
#include <string>

#include "mheat/geometry.hpp"

namespace mheat {

class Euclidean final : public Geometry {
 public:
  explicit Euclidean(int dim) : Geometry(dim) {}

  std::string name() const override { return "euclidean"; }
  ModelKind kind() const override { return ModelKind::euclidean; }
  bool in_domain(const Point& p) const override;
  Mat metric(const Point& p) const override;
  Tensor3 metric_derivatives(const Point& p) const override;
  Tensor3 christoffel(const Point& p) const override;
  std::optional<Mat> ricci_closed_form(const Point& p) const override;
  std::optional<RadialProfile> radial_profile() const override { return RadialProfile::linear(); }
  std::optional<double> ball_volume(double r) const override;

  Point exp_map(const Point& x, const Vec& v) const override;
  GeodesicPath connect(const Point& u, const Point& v, int samples = 65) const override;
  double distance(const Point& u, const Point& v) const override;
  Vec transport(const Point& u, const Point& v, const Vec& w) const override;
  std::vector<Point> geodesic_points(const Point& u, const Point& v,
                                     std::span<const double> params) const override;
};

/// Constant curvature ±1/scale² realised inside ℝ^{d+1} with the Euclidean
/// (sphere) or Minkowski (hyperboloid) form η. Geodesics, distances and
/// transport use closed forms on the unit model.
class SpaceForm : public Geometry {
 public:
  double scale() const noexcept { return scale_; }
  /// +1 for the sphere, −1 for hyperbolic space.
  int sign() const noexcept { return sign_; }

  std::optional<Mat> ricci_closed_form(const Point& p) const override;
  std::optional<RadialProfile> radial_profile() const override;
  double radial_coordinate(const Point& p) const override;

  Point exp_map(const Point& x, const Vec& v) const override;
  GeodesicPath connect(const Point& u, const Point& v, int samples = 65) const override;
  double distance(const Point& u, const Point& v) const override;
  Vec transport(const Point& u, const Point& v, const Vec& w) const override;
  std::vector<Point> geodesic_points(const Point& u, const Point& v,
                                     std::span<const double> params) const override;

  /// Unit-model embedding and its Jacobian ∂X/∂x.
  virtual AmbientVec embed(const Point& p) const = 0;
  virtual AmbientMat embed_jacobian(const Point& p) const = 0;
  /// Chart point of an ambient unit-model point; `chart_hint` is kept when it
  /// is a good chart for the point.
  virtual Point from_ambient(const AmbientVec& y, int chart_hint) const = 0;

  double eta(const AmbientVec& a, const AmbientVec& b) const;
  /// Chart components of the ambient tangent vector V at p.
  Vec pull_back(const Point& p, const AmbientVec& V) const;

 protected:
  SpaceForm(int dim, int sign, double scale);

  struct Chord {
    double angle;    // unit-model distance
    AmbientVec p;    // start
    AmbientVec w;    // unit initial direction, zero when the points coincide
  };
  Chord chord(const Point& u, const Point& v) const;
  double cs(double x) const { return sign_ > 0 ? std::cos(x) : std::cosh(x); }
  double sn(double x) const { return sign_ > 0 ? std::sin(x) : std::sinh(x); }

 private:
  int sign_;
  double scale_;
};

/// S^d of radius R in hyperspherical coordinates. Chart c expresses the
/// point through the ambient axes cyclically shifted by c, so that the
/// singular set of one chart is interior to another.
class Sphere final : public SpaceForm {
 public:
  Sphere(int dim, double radius);

  std::string name() const override { return "sphere"; }
  ModelKind kind() const override { return ModelKind::sphere; }
  bool in_domain(const Point& p) const override;
  Mat metric(const Point& p) const override;
  Tensor3 christoffel(const Point& p) const override;

  bool wants_chart_switch(const Point& p) const override;
  int preferred_chart(const Point& p) const override;
  Point to_chart(const Point& p, int chart, Mat* jacobian = nullptr) const override;
  Point origin() const override;

  AmbientVec embed(const Point& p) const override;
  AmbientMat embed_jacobian(const Point& p) const override;
  Point from_ambient(const AmbientVec& y, int chart_hint) const override;

 private:
  Point coordinates(const AmbientVec& y, int chart) const;
  double last_ring_sq(const AmbientVec& y, int chart) const;
  double switch_threshold_;
};

/// Upper half-space model with metric scale²·|dx|²/x_d².
class Hyperbolic final : public SpaceForm {
 public:
  Hyperbolic(int dim, double scale);

  std::string name() const override { return "hyperbolic"; }
  ModelKind kind() const override { return ModelKind::hyperbolic; }
  bool in_domain(const Point& p) const override;
  Mat metric(const Point& p) const override;
  Tensor3 christoffel(const Point& p) const override;
  Point origin() const override;
  double radial_coordinate(const Point& p) const override;

  AmbientVec embed(const Point& p) const override;
  AmbientMat embed_jacobian(const Point& p) const override;
  Point from_ambient(const AmbientVec& y, int chart_hint) const override;
};

/// Rotationally symmetric model dr² + ψ(r)² dθ² in Cartesian coordinates.
/// Derivatives of g by finite differences, geodesics by shooting.
class RadialModel final : public Geometry {
 public:
  RadialModel(int dim, RadialProfile psi);

  std::string name() const override { return "model(" + psi_.name + ")"; }
  ModelKind kind() const override { return ModelKind::model; }
  bool in_domain(const Point& p) const override;
  Mat metric(const Point& p) const override;
  std::optional<Mat> ricci_closed_form(const Point& p) const override;
  std::optional<RadialProfile> radial_profile() const override { return psi_; }

 private:
  RadialProfile psi_;
};

/// User-supplied metric on a single chart.
class CustomGeometry final : public Geometry {
 public:
  using MetricFn = std::function<Mat(const Vec&)>;
  using DomainFn = std::function<bool(const Vec&)>;

  CustomGeometry(int dim, std::string name, MetricFn metric, DomainFn domain);

  std::string name() const override { return name_; }
  bool in_domain(const Point& p) const override;
  Mat metric(const Point& p) const override { return metric_(p.x); }

 private:
  std::string name_;
  MetricFn metric_;
  DomainFn domain_;
};

// Factories. The curvature lower bound defaults to the exact constant for
// space forms and to the radial-direction infimum reported by the caller for
// other models (zero when not given).
ManifoldModel euclidean(int d);
ManifoldModel sphere(int d, double radius = 1.0);
ManifoldModel hyperbolic(int d, double scale = 1.0);
ManifoldModel radial_model(int d, RadialProfile psi, ScalarField k = ScalarField::constant(0.0));
ManifoldModel custom_model(int d, std::string name, CustomGeometry::MetricFn metric,
                           CustomGeometry::DomainFn domain,
                           ScalarField k = ScalarField::constant(0.0));
ManifoldModel with_weight(ManifoldModel m, WeightPotential phi);
ManifoldModel with_lower_bound(ManifoldModel m, ScalarField k);

}  // namespace mheat
