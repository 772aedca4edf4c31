#include "mheat/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mheat/parallel.hpp"

namespace mheat {

namespace {

void check_time(double t, const SimConfig& cfg) {
  validate(cfg);
  if (t < 0.0) throw ConfigError("time must be nonnegative");
  if (t > cfg.horizon * (1.0 + 1e-12)) throw ConfigError("t exceeds horizon");
}

/// Runs every path to time t. `visit` sees the final stepper and the
/// trapezoid integral of k (0 when k is null) for each path.
template <class Visit>
StatBank run_to(const ManifoldModel& m, const Point& x, double t, const SimConfig& cfg,
                TrackOptions opts, const ScalarField* k, int n_stats, Visit&& visit) {
  const SimConfig c = cfg.with_horizon(t);
  const int n = c.steps();
  const double h = c.step_size();
  const std::optional<double> k_const = k ? k->constant_value() : std::optional<double>(0.0);
  return run_ensemble(c.n_paths, n_stats, c.workers, [&](std::int64_t id, StatBank& acc) {
    PathStepper p(m, x, c, static_cast<std::uint64_t>(id), opts);
    double k_int = 0.0;
    double k_prev = k && !k_const ? (*k)(p.point()) : 0.0;
    for (int i = 0; i < n; ++i) {
      if (!p.step()) break;
      if (k && !k_const) {
        const double k_next = (*k)(p.point());
        k_int += 0.5 * h * (k_prev + k_next);
        k_prev = k_next;
      }
    }
    if (k_const) k_int = *k_const * p.time();
    visit(p, k_int, acc);
  });
}

Mat initial_frame(const ManifoldModel& m, const Point& x) {
  SimConfig c;
  PathStepper p(m, x, c, 0, {true, false});
  return p.frame();
}

Vec to_frame(const ManifoldModel& m, const Point& x, const Mat& f0, const Vec& xi) {
  return f0.transpose() * (m.geo().metric(x) * xi);
}

VectorEstimate to_vector(const StatBank& bank, std::size_t first, int count, const SimConfig& cfg,
                         double t) {
  VectorEstimate v;
  v.value.resize(count);
  v.std_error.resize(count);
  for (int i = 0; i < count; ++i) {
    v.value[i] = bank[first + i].mean();
    v.std_error[i] = bank[first + i].std_error();
  }
  v.n_paths = bank[first].count();
  v.seed = cfg.seed;
  v.dt = cfg.with_horizon(t).step_size();
  return v;
}

Estimate estimate_of(const RunningStats& s, const SimConfig& cfg, double t) {
  return make_estimate(s, cfg.seed, cfg.with_horizon(t).step_size());
}

}  // namespace

Estimate heat_semigroup_mc(const ManifoldModel& m, const TestFunction& f, const Point& x, double t,
                           const SimConfig& cfg) {
  check_time(t, cfg);
  const StatBank bank =
      run_to(m, x, t, cfg, {false, false}, nullptr, 1, [&](const PathStepper& p, double, StatBank& acc) {
        acc[0].add(p.alive() ? f(p.point()) : 0.0);
      });
  return estimate_of(bank[0], cfg, t);
}

VectorEstimate bel_gradient_frame(const ManifoldModel& m, const TestFunction& f, const Point& x,
                                  double t, const SimConfig& cfg) {
  if (!(t > 0.0)) throw ZeroTimeError("gradient formula needs t > 0");
  check_time(t, cfg);
  const int d = m.dim();
  const StatBank bank =
      run_to(m, x, t, cfg, {true, true}, nullptr, d, [&](const PathStepper& p, double, StatBank& acc) {
        const double fx = p.alive() ? f(p.point()) : 0.0;
        for (int b = 0; b < d; ++b) acc[b].add(fx * p.bel_accumulator()[b] / t);
      });
  return to_vector(bank, 0, d, cfg, t);
}

Estimate bel_gradient(const ManifoldModel& m, const TestFunction& f, const Point& x, const Vec& xi,
                      double t, const SimConfig& cfg) {
  if (!(t > 0.0)) throw ZeroTimeError("gradient formula needs t > 0");
  check_time(t, cfg);
  const Vec xf = to_frame(m, x, initial_frame(m, x), xi);
  const StatBank bank =
      run_to(m, x, t, cfg, {true, true}, nullptr, 1, [&](const PathStepper& p, double, StatBank& acc) {
        const double fx = p.alive() ? f(p.point()) : 0.0;
        acc[0].add(fx * xf.dot(p.bel_accumulator()) / t);
      });
  return estimate_of(bank[0], cfg, t);
}

std::vector<std::vector<Estimate>> bel_batch(const ManifoldModel& m,
                                             const std::vector<TestFunction>& fs, const Point& x,
                                             const std::vector<Vec>& directions, double t,
                                             const SimConfig& cfg) {
  if (!(t > 0.0)) throw ZeroTimeError("gradient formula needs t > 0");
  check_time(t, cfg);
  const Mat f0 = initial_frame(m, x);
  std::vector<Vec> xf;
  for (const Vec& xi : directions) xf.push_back(to_frame(m, x, f0, xi));
  const int per = 1 + static_cast<int>(directions.size());
  const int n_stats = per * static_cast<int>(fs.size());
  const StatBank bank = run_to(m, x, t, cfg, {true, true}, nullptr, n_stats,
                               [&](const PathStepper& p, double, StatBank& acc) {
                                 for (std::size_t i = 0; i < fs.size(); ++i) {
                                   const double fx = p.alive() ? fs[i](p.point()) : 0.0;
                                   acc[i * per].add(fx);
                                   for (std::size_t j = 0; j < xf.size(); ++j)
                                     acc[i * per + 1 + j].add(fx * xf[j].dot(p.bel_accumulator()) / t);
                                 }
                               });
  std::vector<std::vector<Estimate>> out(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (int j = 0; j < per; ++j) out[i].push_back(estimate_of(bank[i * per + j], cfg, t));
  return out;
}

Estimate fd_directional_mc(const ManifoldModel& m, const TestFunction& f, const Point& x,
                           const Vec& xi, double h, double t, const SimConfig& cfg) {
  check_time(t, cfg);
  const Point plus = exp_map(m, x, h * xi);
  const Point minus = exp_map(m, x, -h * xi);
  const SimConfig c = cfg.with_horizon(t);
  const int n = c.steps();
  const StatBank bank = run_ensemble(c.n_paths, 1, c.workers, [&](std::int64_t id, StatBank& acc) {
    PathStepper a(m, plus, c, static_cast<std::uint64_t>(id), {false, false});
    PathStepper b(m, minus, c, static_cast<std::uint64_t>(id), {false, false});
    for (int i = 0; i < n; ++i) {
      a.step();
      b.step();
      if (a.alive() && b.alive()) b.adopt_chart(a.point().chart);
    }
    const double fa = a.alive() ? f(a.point()) : 0.0;
    const double fb = b.alive() ? f(b.point()) : 0.0;
    acc[0].add((fa - fb) / (2.0 * h));
  });
  return estimate_of(bank[0], cfg, t);
}

Estimate schrodinger_fk(const ManifoldModel& m, const TestFunction& f, const ScalarField& k,
                        const Point& x, double t, const SimConfig& cfg) {
  check_time(t, cfg);
  const StatBank bank =
      run_to(m, x, t, cfg, {false, false}, &k, 1, [&](const PathStepper& p, double k_int, StatBank& acc) {
        const double fx = p.alive() ? f(p.point()) : 0.0;
        acc[0].add(std::exp(-0.5 * k_int) * fx);
      });
  return estimate_of(bank[0], cfg, t);
}

AnchorSup exp_integrability_Ct(const ManifoldModel& m, const ScalarField& k, double t,
                               const std::vector<Point>& anchors, const SimConfig& cfg) {
  if (anchors.empty()) throw ConfigError("anchor set is empty");
  check_time(t, cfg);
  const ScalarField kminus = k.negative_part();
  AnchorSup out;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const StatBank bank = run_to(m, anchors[a], t, cfg, {false, false}, &kminus, 1,
                                 [&](const PathStepper& p, double k_int, StatBank& acc) {
                                   acc[0].add(p.alive() ? std::exp(0.5 * k_int) : 0.0);
                                 });
    out.per_anchor.push_back(estimate_of(bank[0], cfg, t));
    if (a == 0 || out.per_anchor.back().value > out.value) {
      out.value = out.per_anchor.back().value;
      out.argmax = a;
    }
  }
  return out;
}

L1GradientCheck l1_gradient_check(const ManifoldModel& m, const TestFunction& f,
                                  const ScalarField& k, const Point& x, double t,
                                  const SimConfig& cfg) {
  if (!(t > 0.0)) throw ZeroTimeError("gradient estimate needs t > 0");
  if (!f.gradient_norm) throw ConfigError("L1 gradient check needs an analytic gradient");
  check_time(t, cfg);
  const int d = m.dim();
  const StatBank bank = run_to(m, x, t, cfg, {true, true}, &k, d + 1,
                               [&](const PathStepper& p, double k_int, StatBank& acc) {
                                 const double fx = p.alive() ? f(p.point()) : 0.0;
                                 for (int b = 0; b < d; ++b)
                                   acc[b].add(fx * p.bel_accumulator()[b] / t);
                                 const double gn = p.alive() ? f.gradient_norm(p.point()) : 0.0;
                                 acc[d].add(std::exp(-0.5 * k_int) * gn);
                               });
  L1GradientCheck out;
  double sq = 0.0, var = 0.0;
  for (int b = 0; b < d; ++b) sq += bank[b].mean() * bank[b].mean();
  out.lhs = std::sqrt(sq);
  for (int b = 0; b < d; ++b) {
    const double w = out.lhs > 0.0 ? bank[b].mean() / out.lhs : 1.0;
    var += w * w * bank[b].std_error() * bank[b].std_error();
  }
  out.lhs_error = std::sqrt(var);
  out.rhs = bank[d].mean();
  out.rhs_error = bank[d].std_error();
  out.pass = out.lhs <= out.rhs + 3.0 * combined_error(out.lhs_error, out.rhs_error);
  return out;
}

LipschitzBound lipschitz_smoothing_bound(const ManifoldModel& m, const ScalarField& k, double t,
                                         const std::vector<Point>& anchors, const SimConfig& cfg) {
  if (!(t > 0.0)) throw ZeroTimeError("smoothing bound needs t > 0");
  LipschitzBound out;
  out.ct = exp_integrability_Ct(m, k, t, anchors, cfg);
  out.bound = std::sqrt(8.0) / std::sqrt(t) * out.ct.value;
  return out;
}

QuotientCheck lipschitz_quotient_check(const ManifoldModel& m, const TestFunction& f, double t,
                                       double bound,
                                       const std::vector<std::pair<Point, Point>>& pairs,
                                       const SimConfig& cfg) {
  if (!(t > 0.0)) throw ZeroTimeError("smoothing check needs t > 0");
  check_time(t, cfg);
  const SimConfig c = cfg.with_horizon(t);
  const int n = c.steps();
  const double limit = bound * f.sup_norm;
  QuotientCheck out;
  for (const auto& [u, v] : pairs) {
    const double rho = distance(m, u, v);
    if (!(rho > 0.0)) continue;
    const StatBank bank = run_ensemble(c.n_paths, 1, c.workers, [&](std::int64_t id, StatBank& acc) {
      PathStepper a(m, u, c, static_cast<std::uint64_t>(id), {false, false});
      PathStepper b(m, v, c, static_cast<std::uint64_t>(id), {false, false});
      for (int i = 0; i < n; ++i) {
        a.step();
        b.step();
        if (a.alive() && b.alive()) b.adopt_chart(a.point().chart);
      }
      acc[0].add((a.alive() ? f(a.point()) : 0.0) - (b.alive() ? f(b.point()) : 0.0));
    });
    const double q = std::abs(bank[0].mean()) / rho;
    ++out.pairs;
    out.max_quotient = std::max(out.max_quotient, q);
    if (limit > 0.0) out.worst_ratio = std::max(out.worst_ratio, q / limit);
    if (q > limit + 3.0 * bank[0].std_error() / rho) ++out.violations;
  }
  return out;
}

QuadratureGrid box_grid(const ManifoldModel& m, const Vec& lo, const Vec& hi, int n) {
  const int d = m.dim();
  if (n < 2) throw QuadratureError("grid needs at least two points per axis");
  QuadratureGrid grid;
  std::vector<int> idx(d, 0);
  const Vec step = (hi - lo) / (n - 1);
  while (true) {
    Vec x(d);
    double w = 1.0;
    bool edge = false;
    for (int i = 0; i < d; ++i) {
      x[i] = lo[i] + idx[i] * step[i];
      const bool end = idx[i] == 0 || idx[i] == n - 1;
      w *= step[i] * (end ? 0.5 : 1.0);
      edge = edge || end;
    }
    Point p(x, 0);
    if (m.geo().in_domain(p)) {
      w *= std::sqrt(m.geo().metric(p).determinant());
      grid.points.push_back(p);
      grid.weights.push_back(w);
      grid.boundary.push_back(edge);
    }
    int axis = 0;
    while (axis < d && ++idx[axis] == n) idx[axis++] = 0;
    if (axis == d) break;
  }
  return grid;
}

double grid_lp_norm(const QuadratureGrid& grid, const std::vector<double>& values, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += grid.weights[i] * std::pow(std::abs(values[i]), p);
  return std::pow(s, 1.0 / p);
}

LpReport lp_operator_check(const ManifoldModel& m, const ScalarField& k, const TestFunction& f,
                           const LpInputs& in, const QuadratureGrid& grid, const SimConfig& cfg) {
  if (!(in.p > 1.0)) throw ConfigError("p must exceed 1");
  if (grid.points.empty()) throw QuadratureError("quadrature grid is empty");
  check_time(in.t, cfg);
  const double sup = std::max(f.sup_norm, 1e-300);
  for (std::size_t i = 0; i < grid.points.size(); ++i)
    if (grid.boundary[i] && std::abs(f(grid.points[i])) > 1e-10 * sup)
      throw QuadratureError("grid does not cover the support of f");

  const double q = in.p / (in.p - 1.0);
  const bool with_field = static_cast<bool>(in.field);
  const ScalarField kminus = k.negative_part();
  const std::size_t n = grid.points.size();
  std::vector<double> fv(n), sv(n), se(n), ev(n, 0.0);
  double cq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& x = grid.points[i];
    fv[i] = f(x);
    Vec vf;
    if (with_field) vf = to_frame(m, x, initial_frame(m, x), in.field(x));
    const StatBank bank = run_to(
        m, x, in.t, cfg, {with_field, with_field}, &k, 1 + with_field,
        [&](const PathStepper& p, double k_int, StatBank& acc) {
          const double fx = p.alive() ? f(p.point()) : 0.0;
          acc[0].add(std::exp(-0.5 * k_int) * fx);
          if (with_field) acc[1].add(fx * vf.dot(p.bel_accumulator()));
        });
    sv[i] = bank[0].mean();
    se[i] = bank[0].std_error();
    if (with_field) {
      ev[i] = bank[1].mean();
      const AnchorSup c = exp_integrability_Ct(m, kminus.scaled(-q), in.t, {x}, cfg);
      cq = std::max(cq, c.value);
    }
  }
  LpReport r;
  r.p = in.p;
  r.t = in.t;
  r.norm_f = grid_lp_norm(grid, fv, in.p);
  if (!(r.norm_f > 0.0)) throw QuadratureError("f vanishes on the grid");
  r.norm_s = grid_lp_norm(grid, sv, in.p);
  r.ratio = r.norm_s / r.norm_f;
  double var = 0.0;
  if (r.norm_s > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dn = std::pow(r.norm_s, 1.0 - in.p) * grid.weights[i] *
                        std::pow(std::abs(sv[i]), in.p - 1.0);
      var += dn * dn * se[i] * se[i];
    }
  }
  r.ratio_error = std::sqrt(var) / r.norm_f;
  r.bound = in.delta * std::exp(in.c * in.t);
  r.pass = r.ratio <= r.bound + 3.0 * r.ratio_error;
  if (with_field) {
    r.e_ratio = grid_lp_norm(grid, ev, in.p) / r.norm_f;
    r.e_bound = std::sqrt(8.0 * q * in.t) * std::pow(cq, (in.p - 1.0) / in.p) * in.field_sup;
    double mx = 0.0;
    for (double e : ev) mx = std::max(mx, std::abs(e));
    r.e_max_abs = mx;
    r.e_pass = *r.e_ratio <= *r.e_bound + 1e-12;
  }
  return r;
}

std::vector<Point> halton_anchors(const ManifoldModel& m, int n, const Vec& lo, const Vec& hi) {
  static constexpr int kPrimes[kMaxDim] = {2, 3, 5, 7};
  const int d = m.dim();
  std::vector<Point> out;
  for (int i = 1; static_cast<int>(out.size()) < n && i < 100 * n; ++i) {
    Vec x(d);
    for (int a = 0; a < d; ++a) {
      double f = 1.0, r = 0.0;
      for (int k = i; k > 0; k /= kPrimes[a]) {
        f /= kPrimes[a];
        r += f * (k % kPrimes[a]);
      }
      x[a] = lo[a] + r * (hi[a] - lo[a]);
    }
    Point p(x, 0);
    if (m.geo().in_domain(p)) out.push_back(p);
  }
  return out;
}

std::vector<Point> default_anchors(const ManifoldModel& m, int n) {
  const int d = m.dim();
  Vec lo = Vec::Constant(d, -2.0), hi = Vec::Constant(d, 2.0);
  switch (m.geo().kind()) {
    case ModelKind::sphere:
      lo.setConstant(0.2);
      hi.setConstant(std::numbers::pi - 0.2);
      lo[d - 1] = 0.0;
      hi[d - 1] = 2.0 * std::numbers::pi;
      break;
    case ModelKind::hyperbolic:
      lo[d - 1] = 0.25;
      hi[d - 1] = 4.0;
      break;
    default:
      break;
  }
  return halton_anchors(m, n, lo, hi);
}

}  // namespace mheat
