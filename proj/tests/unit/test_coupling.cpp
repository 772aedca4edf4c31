#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "mheat/coupling.hpp"
#include "mheat/models.hpp"

using namespace mheat;

namespace {

constexpr double kPi = std::numbers::pi;

SimConfig config(double dt, double horizon, std::int64_t n, std::uint64_t seed) {
  SimConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.n_paths = n;
  c.seed = seed;
  return c;
}

double height(const ManifoldModel& s, const Point& p) { return std::cos(s.geo().canonical(p).x[0]); }

}  // namespace

TEST_CASE("kappa average") {
  const auto line = euclidean(1);
  const ScalarField lin("x", [](const Point& p) { return p.x[0]; });
  CHECK(kappa_average(line, lin, make_point({0.0}), make_point({1.0})) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(kappa_average(line, ScalarField::constant(2.5), make_point({0.0}), make_point({7.0})) == 2.5);

  const auto s = sphere(2);
  const ScalarField wavy = ScalarField::on_canonical("wavy", s.geometry, [](const Vec& x) {
    return 1.0 + 0.5 * std::sin(3 * x[0]) * std::cos(x[1]);
  });
  const Point u = make_point({0.8, 0.3}), v = make_point({2.1, 1.9});
  CHECK(std::abs(kappa_average(s, wavy, u, u) - wavy(u)) < 1e-12);
  const double kuv = kappa_average(s, wavy, u, v);
  CHECK(std::abs(kuv - kappa_average(s, wavy, v, u)) < 1e-10);
  const GeodesicPath g = geodesic_connect(s, u, v);
  double lo = 1e300;
  for (const Point& p : g.points) lo = std::min(lo, wavy(p));
  CHECK(kuv >= lo);
  // Trapezoid average along the sampled geodesic as an independent estimate.
  double trap = 0.0;
  for (std::size_t i = 0; i + 1 < g.points.size(); ++i)
    trap += 0.5 * (wavy(g.points[i]) + wavy(g.points[i + 1])) * (g.params[i + 1] - g.params[i]);
  CHECK(kuv == doctest::Approx(trap).epsilon(1e-3));
}

TEST_CASE("merge radius") {
  CHECK(merge_radius(euclidean(2), 1e-2) == doctest::Approx(1.0));
  CHECK(merge_radius(sphere(2), 1e-2) == doctest::Approx(0.1 * kPi));
  CHECK(merge_radius(sphere(2), 1e-4) == doctest::Approx(0.1));
}

TEST_CASE("euclidean coupling is a translation") {
  const auto e = euclidean(2);
  const CouplingSample s = simulate_parallel_coupling(e, make_point({0.0, 0.0}), make_point({3.0, 4.0}),
                                                      config(1e-3, 1.0, 1, 1), 0);
  CHECK(s.times.size() == 1001);
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    CHECK(std::abs(s.distances[i] - 5.0) <= 10 * 1e-3);
    CHECK((s.points_y[i].x - s.points_x[i].x - make_point({3.0, 4.0}).x).norm() < 1e-9);
  }
  CHECK(std::isinf(s.coupling_time));
  const ContractionReport r = verify_pathwise_contraction(s);
  CHECK(r.violations == 0);
  CHECK(r.pairs == 1000LL * 1001 / 2);
}

TEST_CASE("sphere coupling merges and stays merged") {
  const auto s = sphere(2);
  const Point x = make_point({kPi / 2, 0.0}), y = make_point({kPi / 2, 1.0});
  int merged = 0;
  for (std::uint64_t id = 0; id < 50; ++id) {
    const CouplingSample c = simulate_parallel_coupling(s, x, y, config(1e-3, 2.0, 1, 2), id);
    bool seen = false;
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      CHECK(c.distances[i] >= 0.0);
      // k ≡ 1 on the unit sphere: the κ integral is t.
      CHECK(c.kappa_integrals[i] == doctest::Approx(c.times[i]).epsilon(1e-12));
      if (c.coupled[i]) {
        seen = true;
        CHECK(c.distances[i] == 0.0);
        CHECK(c.points_x[i].x == c.points_y[i].x);
      } else {
        CHECK_FALSE(seen);
      }
    }
    merged += seen;
  }
  CHECK(merged > 0);
  CHECK_THROWS_AS(simulate_parallel_coupling(s, make_point({kPi / 2, 0.0}), make_point({kPi / 2, kPi}),
                                             config(1e-3, 1.0, 1, 1), 0),
                  CutLocusError);
}

TEST_CASE("each marginal of the coupling is a Brownian motion") {
  // E[cos θ(Z_t)] = e^{−t} cos θ(z) for Brownian motion on the unit sphere.
  const auto s = sphere(2);
  const Point x = make_point({1.0, 0.0}), y = make_point({1.0, 0.8});
  const double t = 0.5;
  RunningStats hx, hy;
  for (std::uint64_t id = 0; id < 4000; ++id) {
    const CouplingSample c = simulate_parallel_coupling(s, x, y, config(1e-2, t, 1, 3), id);
    hx.add(height(s, c.points_x.back()));
    hy.add(height(s, c.points_y.back()));
  }
  const double want = std::exp(-t) * std::cos(1.0);
  CHECK(std::abs(hx.mean() - want) < 3 * hx.std_error() + 2e-3);
  CHECK(std::abs(hy.mean() - want) < 3 * hy.std_error() + 2e-3);
  CHECK(hy.variance() == doctest::Approx(hx.variance()).epsilon(0.1));
}

TEST_CASE("coupling csv") {
  const auto e = euclidean(1);
  const CouplingSample c = simulate_parallel_coupling(e, make_point({0.0}), make_point({1.0}), config(0.5, 1.0, 1, 1), 0);
  std::ostringstream os;
  write_coupling_csv(os, c);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,rho,kappa_cum,coupled");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("index form bound") {
  const auto e = euclidean(2);
  const IndexFormBound be = index_form_ricci_bound(e, ScalarField::constant(0.0), make_point({0.0, 0.0}),
                                                   make_point({1.0, 2.0}));
  CHECK(be.ricci_bound == 0.0);
  CHECK(be.kappa_bound == 0.0);
  CHECK(be.consistent);

  const auto s = sphere(2);
  const IndexFormBound bs = index_form_ricci_bound(s, ScalarField::constant(1.0), make_point({kPi / 2, 0.0}),
                                                   make_point({kPi / 2, kPi / 2}));
  CHECK(bs.ricci_bound == doctest::Approx(-kPi / 2).epsilon(1e-8));
  CHECK(bs.kappa_bound == doctest::Approx(-kPi / 2).epsilon(1e-12));
  CHECK(bs.consistent);

  const auto h = hyperbolic(2);
  const Point u = make_point({0.0, 1.0}), v = make_point({0.0, std::exp(1.0)});
  const IndexFormBound bh = index_form_ricci_bound(h, ScalarField::constant(-1.0), u, v);
  CHECK(bh.ricci_bound == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(bh.kappa_bound == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bh.consistent);
  CHECK_FALSE(index_form_ricci_bound(h, ScalarField::constant(0.0), u, v).consistent);
  CHECK_THROWS_AS(index_form_ricci_bound(h, ScalarField::constant(-1.0), u, u), DomainError);
}

TEST_CASE("pathwise contraction check") {
  SUBCASE("merged segments are not counted") {
    CouplingSample c;
    c.dt = 0.1;
    c.times = {0.0, 0.1, 0.2, 0.3};
    c.distances = {1.0, 0.9, 0.0, 0.0};
    c.kappa_integrals = {0.0, 0.1, 0.2, 0.3};
    c.coupled = {false, false, true, true};
    const ContractionReport r = verify_pathwise_contraction(c);
    CHECK(r.pairs == 1);
    CHECK(r.violations == 0);
    // ρ_1 e^{K_1/2} / (ρ_0 (1 + 3√(dt·dt))).
    CHECK(r.worst_ratio == doctest::Approx(0.9 * std::exp(0.05) / 1.3));
  }
  SUBCASE("growth beyond the tolerance is a violation") {
    CouplingSample c;
    c.dt = 0.01;
    c.times = {0.0, 0.01};
    c.distances = {1.0, 1.1};
    c.kappa_integrals = {0.0, 0.0};
    c.coupled = {false, false};
    CHECK(verify_pathwise_contraction(c).violations == 1);
    CHECK(verify_pathwise_contraction(c, 20.0).violations == 0);
  }
  SUBCASE("sphere ensemble, true and too strong curvature bounds") {
    const auto s = sphere(2);
    const Point x = make_point({kPi / 2, 0.0}), y = make_point({kPi / 2, 1.0});
    const SimConfig c = config(1e-3, 1.0, 200, 4);
    const ContractionReport ok = contraction_ensemble(s, ScalarField::constant(1.0), x, y, c);
    CHECK(ok.couplings == 200);
    CHECK(ok.violation_fraction() < 0.01);
    const ContractionReport bad = contraction_ensemble(s, ScalarField::constant(5.0), x, y, c);
    CHECK(bad.violation_fraction() > 0.1);
    const auto j = nlohmann::json::parse(to_json(ok));
    CHECK(j["pairs"].get<std::int64_t>() == ok.pairs);
    CHECK(j.contains("worst_ratio"));
    CHECK(j["dt"].get<double>() == 1e-3);
  }
}
