#include "mheat/coupling.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "mheat/models.hpp"
#include "mheat/parallel.hpp"
#include "mheat/quadrature.hpp"

namespace mheat {

namespace {

constexpr std::uint64_t kIndependentTag = 0xC07E;

bool same_point(const Geometry& geo, const Point& u, const Point& v) {
  if (u.chart == v.chart) return u.x == v.x;
  return geo.to_chart(v, u.chart).x == u.x;
}

}  // namespace

double kappa_average(const ManifoldModel& m, const ScalarField& k, const Point& u, const Point& v) {
  if (const auto c = k.constant_value()) return *c;
  const Geometry& geo = m.geo();
  if (same_point(geo, u, v)) return k(u);
  static const GaussLegendre rule(16);
  const auto on01 = rule.on(0.0, 1.0);
  const auto pts = geo.geodesic_points(u, v, on01.first);
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) s += on01.second[i] * k(pts[i]);
  return s;
}

double merge_radius(const ManifoldModel& m, double dt) {
  double r = 10.0 * std::sqrt(dt);
  if (m.geo().kind() == ModelKind::sphere)
    r = std::min(r, 0.1 * std::numbers::pi * static_cast<const SpaceForm&>(m.geo()).scale());
  return r;
}

CouplingSample simulate_parallel_coupling(const ManifoldModel& m, const Point& x, const Point& y,
                                          const SimConfig& cfg, std::uint64_t pair_id) {
  return simulate_parallel_coupling(m, x, y, cfg, pair_id, m.ricci_lower_bound);
}

CouplingSample simulate_parallel_coupling(const ManifoldModel& m, const Point& x, const Point& y,
                                          const SimConfig& cfg, std::uint64_t pair_id,
                                          const ScalarField& k) {
  validate(cfg);
  const Geometry& geo = m.geo();
  const int d = geo.dim();
  const int n = cfg.steps();
  const double h = cfg.step_size();

  CouplingSample s;
  s.dt = h;
  s.seed = cfg.seed;
  s.pair_id = pair_id;
  s.merge_radius = merge_radius(m, h);

  const StreamId id{cfg.seed, pair_id};
  RandomStream noise(id);
  RandomStream independent(id.child(kIndependentTag));
  const StreamId bridge_x = id.child(0xB51D6E), bridge_y = id.child(0xB51D6F);
  const TrackOptions opts{false, false};
  PathStepper px(m, x, h, opts, cfg.explosion_radius);
  PathStepper py(m, y, h, opts, cfg.explosion_radius);

  double rho = geo.distance(x, y);
  double kcum = 0.0;
  bool coupled = false;
  auto record = [&](double t) {
    s.times.push_back(t);
    s.points_x.push_back(px.point());
    s.points_y.push_back(coupled ? px.point() : py.point());
    s.distances.push_back(coupled ? 0.0 : rho);
    s.kappa_integrals.push_back(kcum);
    s.coupled.push_back(coupled);
  };
  if (rho <= s.merge_radius) {
    coupled = true;
    s.coupling_time = 0.0;
  }
  record(0.0);

  for (int i = 0; i < n; ++i) {
    const Point xn = px.point();
    const Point yn = coupled ? xn : py.point();
    kcum += h * (coupled ? k(xn) : kappa_average(m, k, xn, yn));

    Vec dB(d);
    for (int j = 0; j < d; ++j) dB[j] = noise.normal() * std::sqrt(h);
    const Vec xi = coupled ? Vec() : Vec(px.sigma() * dB);
    RandomStream bx(bridge_x.child(i));
    if (!px.step_with(dB, bx)) break;

    if (!coupled) {
      Vec dBy(d);
      try {
        // σ_Y dB_Y = P_{X→Y}(σ_X dB), i.e. dB_Y = Lᵀ P(σ_X dB) with g_Y = L Lᵀ.
        const Vec eta = geo.transport(xn, yn, xi);
        const Eigen::LLT<Mat> llt(geo.metric(yn));
        dBy = llt.matrixU() * eta;
      } catch (const CutLocusError&) {
        ++s.cut_locus_events;
        for (int j = 0; j < d; ++j) dBy[j] = independent.normal() * std::sqrt(h);
      }
      RandomStream by(bridge_y.child(i));
      if (!py.step_with(dBy, by)) break;
      rho = geo.distance(px.point(), py.point());
      if (rho <= s.merge_radius) {
        coupled = true;
        s.coupling_time = (i + 1) * h;
      }
    }
    record((i + 1) * h);
  }
  return s;
}

void write_coupling_csv(std::ostream& os, const CouplingSample& s) {
  os << "t,rho,kappa_cum,coupled\n";
  char buf[128];
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", s.times[i], s.distances[i],
                  s.kappa_integrals[i], s.coupled[i] ? 1 : 0);
    os << buf;
  }
}

IndexFormBound index_form_ricci_bound(const ManifoldModel& m, const ScalarField& k, const Point& u,
                                      const Point& v) {
  const Geometry& geo = m.geo();
  if (same_point(geo, u, v)) throw DomainError("index form bound needs distinct points");
  constexpr int kSamples = 129;
  const GeodesicPath path = geo.connect(u, v, kSamples);
  const double len = path.length;
  // Simpson in the path parameter; |γ̇| = len, so the unit-speed integrand is
  // Ric(γ̇, γ̇)/len² and ds = len dr.
  const int n = static_cast<int>(path.points.size()) - 1;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const Vec& vel = path.velocities[i];
    const double ric = vel.dot(fast_ricci(m, path.points[i]) * vel);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * ric;
  }
  s *= 1.0 / (3.0 * n) / len;
  IndexFormBound b;
  b.ricci_bound = -s;
  b.kappa_bound = -len * kappa_average(m, k, u, v);
  b.consistent = b.ricci_bound <= b.kappa_bound + 1e-8;
  return b;
}

void ContractionReport::merge(const ContractionReport& o) {
  pairs += o.pairs;
  violations += o.violations;
  worst_ratio = std::max(worst_ratio, o.worst_ratio);
  couplings += o.couplings;
  cut_locus_events += o.cut_locus_events;
  if (dt == 0.0) dt = o.dt;
}

ContractionReport verify_pathwise_contraction(const CouplingSample& s, double c_tol) {
  ContractionReport r;
  r.dt = s.dt;
  r.couplings = 1;
  r.cut_locus_events = s.cut_locus_events;
  int last = 0;  // last index with ρ > 0
  while (last + 1 < static_cast<int>(s.distances.size()) && s.distances[last + 1] > 0.0) ++last;
  if (s.distances.empty() || s.distances[0] <= 0.0) return r;

  // a_n = log ρ_n + K_n/2; violation when a_t − a_s > log tol(t − s).
  std::vector<double> a(last + 1), log_tol(last + 1);
  for (int i = 0; i <= last; ++i) {
    a[i] = std::log(s.distances[i]) + 0.5 * s.kappa_integrals[i];
    log_tol[i] = std::log1p(c_tol * std::sqrt(s.dt * (s.times[i] - s.times[0])));
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 1; t <= last; ++t) {
    for (int u = 0; u < t; ++u) {
      const double excess = a[t] - a[u] - log_tol[t - u];
      worst = std::max(worst, excess);
      r.violations += excess > 0.0;
    }
  }
  r.pairs = static_cast<std::int64_t>(last) * (last + 1) / 2;
  r.worst_ratio = last > 0 ? std::exp(worst) : 0.0;
  return r;
}

ContractionReport contraction_ensemble(const ManifoldModel& m, const ScalarField& k, const Point& x,
                                       const Point& y, const SimConfig& cfg, double c_tol) {
  validate(cfg);
  const int n = static_cast<int>(cfg.n_paths);
  std::vector<ContractionReport> parts(n);
  parallel_for(n, resolve_workers(cfg.workers), [&](int i) {
    parts[i] = verify_pathwise_contraction(
        simulate_parallel_coupling(m, x, y, cfg, static_cast<std::uint64_t>(i), k), c_tol);
  });
  ContractionReport total;
  for (const auto& p : parts) total.merge(p);
  total.dt = cfg.step_size();
  return total;
}

std::string to_json(const ContractionReport& r) {
  nlohmann::ordered_json j;
  j["pairs"] = r.pairs;
  j["violations"] = r.violations;
  j["worst_ratio"] = r.worst_ratio;
  j["dt"] = r.dt;
  j["couplings"] = r.couplings;
  j["violation_fraction"] = r.violation_fraction();
  j["cut_locus_events"] = r.cut_locus_events;
  return j.dump(2);
}

}  // namespace mheat
