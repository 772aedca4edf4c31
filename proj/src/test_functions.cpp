#include "mheat/test_functions.hpp"

#include <cmath>

namespace mheat::functions {

namespace {

double covector_norm(const Geometry& geo, const Point& p, const Vec& df) {
  const Mat g = geo.metric(p);
  return std::sqrt(std::max(0.0, df.dot(g.llt().solve(df))));
}

const SpaceForm& space_form(const ManifoldModel& m) {
  const auto* sf = dynamic_cast<const SpaceForm*>(m.geometry.get());
  if (!sf) throw DomainError("ambient test functions need a sphere or hyperbolic model");
  return *sf;
}

}  // namespace

TestFunction from_chart(const ManifoldModel& m, std::string name, std::function<double(const Vec&)> f,
                        std::function<Vec(const Vec&)> grad, double sup_norm) {
  auto geo = m.geometry;
  TestFunction tf;
  tf.name = name;
  tf.value = ScalarField::on_canonical(name, geo, f);
  tf.gradient = [geo, grad](const Point& p) -> Vec {
    if (p.chart == 0) return grad(p.x);
    Mat jac;
    const Point c = geo->to_chart(p, 0, &jac);
    // ∂_i f in chart p = (∂x^0/∂x^p)ᵀ ∂f in chart 0.
    return jac.transpose() * grad(c.x);
  };
  tf.gradient_norm = [geo, g = tf.gradient](const Point& p) {
    return covector_norm(*geo, p, g(p));
  };
  tf.sup_norm = sup_norm;
  return tf;
}

TestFunction sine(const ManifoldModel& m, int axis) {
  return from_chart(
      m, "sin(x" + std::to_string(axis + 1) + ")", [axis](const Vec& x) { return std::sin(x[axis]); },
      [axis](const Vec& x) -> Vec {
        Vec g = Vec::Zero(x.size());
        g[axis] = std::cos(x[axis]);
        return g;
      },
      1.0);
}

TestFunction gaussian(const ManifoldModel& m, const Vec& center, double width) {
  const double w2 = width * width;
  return from_chart(
      m, "gaussian",
      [center, w2](const Vec& x) { return std::exp(-(x - center).squaredNorm() / (2 * w2)); },
      [center, w2](const Vec& x) -> Vec {
        const double v = std::exp(-(x - center).squaredNorm() / (2 * w2));
        return -(v / w2) * (x - center);
      },
      1.0);
}

TestFunction tanh_step(const ManifoldModel& m, int axis, double width) {
  return from_chart(
      m, "tanh_step", [axis, width](const Vec& x) { return std::tanh(x[axis] / width); },
      [axis, width](const Vec& x) -> Vec {
        Vec g = Vec::Zero(x.size());
        const double c = std::cosh(x[axis] / width);
        g[axis] = 1.0 / (width * c * c);
        return g;
      },
      1.0);
}

TestFunction compact_bump(const ManifoldModel& m, double radius) {
  const double r2 = radius * radius;
  return from_chart(
      m, "compact_bump",
      [r2](const Vec& x) {
        const double s = 1.0 - x.squaredNorm() / r2;
        return s > 0.0 ? s * s * s : 0.0;
      },
      [r2](const Vec& x) -> Vec {
        const double s = 1.0 - x.squaredNorm() / r2;
        if (s <= 0.0) return Vec::Zero(x.size());
        return (-6.0 * s * s / r2) * x;
      },
      1.0);
}

TestFunction ambient(const ManifoldModel& m, std::string name,
                     std::function<double(const AmbientVec&)> h,
                     std::function<AmbientVec(const AmbientVec&)> grad, double sup_norm) {
  const SpaceForm& sf = space_form(m);
  auto geo = m.geometry;
  TestFunction tf;
  tf.name = name;
  tf.value = ScalarField(name, [&sf, geo, h](const Point& p) { return h(sf.embed(p)); });
  tf.gradient = [&sf, geo, grad](const Point& p) -> Vec {
    return sf.embed_jacobian(p).transpose() * grad(sf.embed(p));
  };
  tf.gradient_norm = [geo, g = tf.gradient](const Point& p) {
    return covector_norm(*geo, p, g(p));
  };
  tf.sup_norm = sup_norm;
  return tf;
}

TestFunction spherical_linear(const ManifoldModel& m, const AmbientVec& a) {
  return ambient(
      m, "linear", [a](const AmbientVec& y) { return a.dot(y); },
      [a](const AmbientVec&) { return a; }, a.norm());
}

TestFunction ambient_exp(const ManifoldModel& m, const AmbientVec& a) {
  return ambient(
      m, "exp_linear", [a](const AmbientVec& y) { return std::exp(a.dot(y)); },
      [a](const AmbientVec& y) -> AmbientVec { return std::exp(a.dot(y)) * a; },
      std::exp(a.norm()));
}

TestFunction ambient_square(const ManifoldModel& m, const AmbientVec& a) {
  return ambient(
      m, "square_linear", [a](const AmbientVec& y) { return a.dot(y) * a.dot(y); },
      [a](const AmbientVec& y) -> AmbientVec { return 2.0 * a.dot(y) * a; }, a.squaredNorm());
}

TestFunction constant(const ManifoldModel& m, double c) {
  TestFunction tf;
  tf.name = "constant";
  tf.value = ScalarField::constant(c);
  const int d = m.dim();
  tf.gradient = [d](const Point&) -> Vec { return Vec::Zero(d); };
  tf.gradient_norm = [](const Point&) { return 0.0; };
  tf.sup_norm = std::abs(c);
  return tf;
}

}  // namespace mheat::functions
