#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mheat/linalg.hpp"

namespace mheat {

class Geometry;

/// A point given by coordinates in one chart of a manifold's atlas. Single
/// chart models only ever use chart 0.
struct Point {
  Vec x;
  int chart = 0;

  Point() = default;
  Point(Vec coords, int chart_id = 0) : x(std::move(coords)), chart(chart_id) {}
  int dim() const { return static_cast<int>(x.size()); }
};

Point make_point(std::initializer_list<double> coords, int chart = 0);

/// Tangent vector with components in the chart basis of its base point.
struct TangentVector {
  Point base;
  Vec v;
};

/// Real function on a manifold. When the function is constant the value is
/// recorded so that hot loops can skip evaluation.
class ScalarField {
 public:
  using Fn = std::function<double(const Point&)>;

  ScalarField() : ScalarField(constant(0.0)) {}
  ScalarField(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  static ScalarField constant(double c);
  /// Wraps a function of canonical (chart 0) coordinates so that it can be
  /// evaluated at points expressed in any chart of `geometry`.
  static ScalarField on_canonical(std::string name, std::shared_ptr<const Geometry> geometry,
                                  std::function<double(const Vec&)> fn);

  double operator()(const Point& p) const { return constant_ ? *constant_ : fn_(p); }
  const std::string& name() const noexcept { return name_; }
  std::optional<double> constant_value() const noexcept { return constant_; }

  ScalarField scaled(double q) const;
  ScalarField abs() const;
  /// Negative part max(-f, 0).
  ScalarField negative_part() const;

 private:
  std::string name_;
  Fn fn_;
  std::optional<double> constant_;
};

/// Bounded test function f with optional analytic derivative data.
struct TestFunction {
  std::string name;
  ScalarField value;
  /// Covector ∂_i f in the chart of the argument.
  std::function<Vec(const Point&)> gradient;
  /// |∇f|_g, chart independent.
  std::function<double(const Point&)> gradient_norm;
  /// ‖f‖_∞ (finite for bounded f).
  double sup_norm = 0.0;

  double operator()(const Point& p) const { return value(p); }
};

/// ψ on (0, ∞) with first and second derivatives.
struct RadialProfile {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;

  static RadialProfile linear();                 // ψ(r) = r
  static RadialProfile power(double c, double a);  // ψ(r) = c r^a
  static RadialProfile sinh(double scale = 1.0);   // ψ(r) = scale·sinh(r/scale)
  static RadialProfile sin(double scale = 1.0);    // ψ(r) = scale·sin(r/scale)
  /// Natural cubic spline through (r_i, ψ_i); linear extrapolation outside.
  static RadialProfile table(std::vector<double> r, std::vector<double> psi);
  /// Arbitrary ψ; derivatives by central differences with step h.
  static RadialProfile from_function(std::string name, std::function<double(double)> psi,
                                     double h = 1e-6);
  RadialProfile scaled(double c) const;
};

/// Weight potential Φ of a weighted manifold (measure e^{-2Φ} vol).
struct WeightPotential {
  std::string name;
  ScalarField value;
  /// ∂_i Φ in the chart of the argument.
  std::function<Vec(const Point&)> gradient;
  /// ∂_i ∂_j Φ in the chart of the argument.
  std::function<Mat(const Point&)> hessian;

  /// Φ(x) = a |x|²/2 in chart coordinates.
  static WeightPotential quadratic(double a);
  /// Gradient and Hessian from central differences of `phi`.
  static WeightPotential from_function(std::string name, ScalarField phi, double h = 1e-4);
};

/// Central-difference covector ∂_i f at p, step h·(1+|x|).
Vec fd_gradient(const ScalarField& f, const Point& p, double h = 1e-5);
/// Central-difference matrix ∂_i ∂_j f at p, step h·(1+|x|).
Mat fd_hessian(const ScalarField& f, const Point& p, double h = 1e-4);

}  // namespace mheat
