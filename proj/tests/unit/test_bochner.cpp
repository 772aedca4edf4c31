#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mheat/bochner.hpp"
#include "mheat/models.hpp"
#include "mheat/test_functions.hpp"

using namespace mheat;

namespace {

constexpr double kPi = std::numbers::pi;

AmbientVec axis(int n, int i) {
  AmbientVec a = AmbientVec::Zero(n);
  a[i] = 1.0;
  return a;
}

// (1/√g) ∂_i(√g g^{ij} ∂_j f) with nested central differences.
double divergence_laplacian(const ManifoldModel& m, const ScalarField& f, const Point& p, double h) {
  const int d = p.dim();
  auto flux = [&](const Point& q, int i) {
    const Mat g = m.geo().metric(q);
    const Mat ginv = g.inverse();
    Vec df(d);
    for (int j = 0; j < d; ++j) {
      Point a = q, b = q;
      a.x[j] += h;
      b.x[j] -= h;
      df[j] = (f(a) - f(b)) / (2 * h);
    }
    return std::sqrt(g.determinant()) * (ginv * df)[i];
  };
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    Point a = p, b = p;
    a.x[i] += h;
    b.x[i] -= h;
    s += (flux(a, i) - flux(b, i)) / (2 * h);
  }
  return s / std::sqrt(m.geo().metric(p).determinant());
}

}  // namespace

TEST_CASE("stencil operators") {
  const auto e = euclidean(3);
  const DiffOpStencil op(e, 1e-3);
  const ScalarField affine("affine", [](const Point& p) { return 2 * p.x[0] - p.x[1] + 0.5 * p.x[2] + 3; });
  const Point p = make_point({0.3, -0.7, 1.1});
  CHECK(std::abs(op.laplacian(affine, p)) < 1e-8);
  CHECK((op.gradient(affine, p) - make_point({2.0, -1.0, 0.5}).x).norm() < 1e-9);
  CHECK(op.hessian(affine, p).norm() < 1e-8);

  const auto s = sphere(2);
  const DiffOpStencil os(s, 1e-3);
  const ScalarField y1 = functions::spherical_linear(s, axis(3, 0)).value;
  for (const Point& q : {make_point({0.4, 0.2}), make_point({1.3, 2.5}), make_point({2.6, 4.0})}) {
    // Y₁ is a degree-one spherical harmonic: ΔY₁ = −2Y₁.
    CHECK(os.laplacian(y1, q) == doctest::Approx(-2 * y1(q)).scale(1.0).epsilon(1e-5));
    CHECK(os.laplacian(y1, q) == doctest::Approx(divergence_laplacian(s, y1, q, 1e-4)).scale(1.0).epsilon(1e-5));
  }

  const auto h = hyperbolic(3);
  const DiffOpStencil oh(h, 1e-3);
  const ScalarField g = functions::gaussian(h, Vec{{0.0, 0.0, 1.0}}, 1.0).value;
  const Point q = make_point({0.2, -0.1, 0.8});
  CHECK(oh.laplacian(g, q) == doctest::Approx(divergence_laplacian(h, g, q, 1e-4)).scale(1.0).epsilon(1e-5));

  const DiffOpStencil edge(s, 0.1);
  CHECK_THROWS_AS(edge.laplacian(y1, make_point({0.05, 1.0})), StencilError);
  CHECK_THROWS_AS(DiffOpStencil(s, 0.0), ConfigError);
}

TEST_CASE("bochner identity residuals") {
  const auto e = euclidean(2);
  const auto grid = chart_grid(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 5);
  const ScalarField sq("|x|^2", [](const Point& p) { return p.x.squaredNorm(); });
  const BochnerResidual rq = bochner_identity_residual(e, sq, grid);
  CHECK(rq.points.size() == 25);
  CHECK(rq.max_residual < 1e-5);
  // 4d on each side.
  for (const auto& bp : rq.points) CHECK(bp.rhs == doctest::Approx(8.0).epsilon(1e-6));

  CHECK(bochner_identity_residual(e, functions::sine(e, 0).value, grid).max_residual <= 1e-4);

  const auto s = sphere(2);
  const auto sg = chart_grid(Vec::Constant(2, 0.3), Vec{{kPi - 0.3, 2 * kPi - 0.1}}, 7);
  const ScalarField y1 = functions::spherical_linear(s, axis(3, 0)).value;
  const BochnerResidual ry = bochner_identity_residual(s, y1, sg);
  CHECK(ry.max_residual <= 1e-3);
  // |Hess Y₁|² + |∇Y₁|² = 2Y₁² + 1 − Y₁² on the unit sphere.
  for (const auto& bp : ry.points) {
    const double v = y1(bp.point);
    CHECK(bp.rhs == doctest::Approx(1.0 + v * v).epsilon(1e-5));
  }

  const auto ou = with_weight(euclidean(2), WeightPotential::quadratic(0.5));
  CHECK(bochner_identity_residual(ou, functions::gaussian(ou, Vec::Zero(2), 1.0).value, grid).max_residual <= 1e-3);

  const auto s3 = sphere(3);
  const auto g3 = chart_grid(Vec::Constant(3, 0.6), Vec{{2.4, 2.4, 5.0}}, 3);
  CHECK(bochner_identity_residual(s3, functions::spherical_linear(s3, axis(4, 3)).value, g3).max_residual <= 1e-3);
}

TEST_CASE("stencil convergence") {
  const auto e = euclidean(2);
  const auto grid = chart_grid(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 5);
  const ScalarField f = functions::sine(e, 0).value;
  const double r1 = bochner_identity_residual(e, f, grid, 0.04).max_residual;
  const double r2 = bochner_identity_residual(e, f, grid, 0.02).max_residual;
  CHECK(r1 >= 3 * r2);

  const auto s = sphere(2);
  const auto sg = chart_grid(Vec::Constant(2, 0.5), Vec{{kPi - 0.5, 5.0}}, 4);
  const ScalarField y1 = functions::spherical_linear(s, axis(3, 2)).value;
  CHECK(bochner_identity_residual(s, y1, sg, 0.04).max_residual >=
        3 * bochner_identity_residual(s, y1, sg, 0.02).max_residual);
}

TEST_CASE("l1 bochner inequality") {
  const auto e = euclidean(2);
  const ScalarField zero = ScalarField::constant(0.0);

  // Away from the zeros of cos x₁ the inequality is an equality.
  const auto strip = chart_grid(Vec{{-1.2, -1.0}}, Vec{{1.2, 1.0}}, 7);
  const L1BochnerReport s = l1_bochner_check(e, functions::sine(e, 0).value, zero, strip);
  CHECK(s.min_slack >= -1e-3);
  CHECK(s.violations == 0);
  CHECK(s.skipped == 0);

  const ScalarField affine("affine", [](const Point& p) { return p.x[0] + 2 * p.x[1]; });
  const L1BochnerReport a = l1_bochner_check(e, affine, zero, strip);
  for (const auto& bp : a.points) {
    CHECK(std::abs(bp.lhs) < 1e-6);
    CHECK(bp.rhs == 0.0);
  }

  // Constant curvature makes k ≡ 1 sharp for Y₁ on S².
  const auto sp = sphere(2);
  const auto sg = chart_grid(Vec::Constant(2, 0.3), Vec{{kPi - 0.3, 2 * kPi - 0.1}}, 9);
  const ScalarField y1 = functions::spherical_linear(sp, axis(3, 0)).value;
  const L1BochnerReport sharp = l1_bochner_check(sp, y1, ScalarField::constant(1.0), sg);
  CHECK(sharp.violations == 0);
  CHECK(sharp.min_slack >= -sharp.tolerance);
  const L1BochnerReport wrong = l1_bochner_check(sp, y1, ScalarField::constant(1.5), sg);
  CHECK(wrong.violations > 0);
  CHECK(wrong.min_slack < -wrong.tolerance);
  CHECK(wrong.points[wrong.argmin].slack == wrong.min_slack);
  // slack(k) = slack(1) − (k − 1)|∇f| pointwise.
  REQUIRE(sharp.points.size() == wrong.points.size());
  for (std::size_t i = 0; i < sharp.points.size(); ++i)
    CHECK(wrong.points[i].slack == doctest::Approx(sharp.points[i].slack - 0.5 * sharp.points[i].rhs));

  const ScalarField flat = ScalarField::constant(4.0);
  CHECK_THROWS_AS(l1_bochner_check(e, flat, zero, strip), EmptyGridError);
}

TEST_CASE("bochner csv and grids") {
  const auto grid = chart_grid(Vec{{0.0, 1.0}}, Vec{{1.0, 2.0}}, 3);
  CHECK(grid.size() == 9);
  CHECK(grid.front().x == Vec{{0.0, 1.0}});
  CHECK(grid.back().x == Vec{{1.0, 2.0}});
  CHECK(chart_grid(Vec{{0.0}}, Vec{{2.0}}, 1).front().x[0] == 1.0);
  CHECK_THROWS_AS(chart_grid(Vec{{0.0}}, Vec{{1.0}}, 0), ConfigError);

  const auto e = euclidean(2);
  const BochnerResidual r = bochner_identity_residual(
      e, ScalarField("x1", [](const Point& p) { return p.x[0]; }), grid);
  std::ostringstream os;
  write_bochner_csv(os, r.points);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x1,x2,lhs,rhs,slack");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 9);
}
