#include "mheat/kato.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mheat/models.hpp"
#include "mheat/parallel.hpp"
#include "mheat/quadrature.hpp"

namespace mheat {

const char* to_string(KatoVerdict v) {
  switch (v) {
    case KatoVerdict::kato:
      return "kato";
    case KatoVerdict::not_kato_at_resolution:
      return "not-kato-at-resolution";
    default:
      return "inconclusive";
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct AnchorRun {
  StatBank bank;  // [0, nt): ∫|v|, [nt, 2nt): exp(∫|v|) 1_{t<ζ}
};

/// One ensemble from `x` up to max(t_grid), recording the time integral of
/// |v| at every grid time by linear interpolation between steps.
AnchorRun run_anchor(const ManifoldModel& m, const ScalarField& v_abs, const std::vector<double>& t_grid,
                     const Point& x, const SimConfig& cfg) {
  const int nt = static_cast<int>(t_grid.size());
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  AnchorRun run;
  if (t_max <= 0.0) {
    run.bank.assign(2 * nt, RunningStats{});
    for (int k = 0; k < nt; ++k) {
      run.bank[k].add(0.0);
      run.bank[nt + k].add(1.0);
    }
    return run;
  }
  const SimConfig c = cfg.with_horizon(t_max);
  const int n = c.steps();
  const double h = c.step_size();
  const std::optional<double> v_const = v_abs.constant_value();
  run.bank = run_ensemble(c.n_paths, 2 * nt, c.workers, [&](std::int64_t id, StatBank& acc) {
    PathStepper p(m, x, c, static_cast<std::uint64_t>(id), {false, false});
    std::vector<double> cum(n + 1, 0.0);
    double prev = v_const ? *v_const : v_abs(p.point());
    for (int i = 0; i < n; ++i) {
      if (!p.step()) {
        for (int j = i + 1; j <= n; ++j) cum[j] = cum[i];
        break;
      }
      const double next = v_const ? *v_const : v_abs(p.point());
      cum[i + 1] = cum[i] + 0.5 * h * (prev + next);
      prev = next;
    }
    for (int k = 0; k < nt; ++k) {
      const double s = std::clamp(t_grid[k] / h, 0.0, static_cast<double>(n));
      const int i = std::min(static_cast<int>(s), n - 1);
      const double integral = cum[i] + (s - i) * (cum[i + 1] - cum[i]);
      acc[k].add(integral);
      acc[nt + k].add(p.lifetime() > t_grid[k] ? std::exp(integral) : 0.0);
    }
  });
  return run;
}

std::vector<AnchorRun> anchor_runs(const ManifoldModel& m, const ScalarField& v,
                                   const std::vector<double>& t_grid,
                                   const std::vector<Point>& anchors, const SimConfig& cfg) {
  validate(cfg);
  if (anchors.empty()) throw ConfigError("anchor set is empty");
  if (t_grid.empty()) throw ConfigError("time grid is empty");
  const ScalarField v_abs = v.abs();
  std::vector<AnchorRun> runs;
  runs.reserve(anchors.size());
  for (const Point& x : anchors) runs.push_back(run_anchor(m, v_abs, t_grid, x, cfg));
  return runs;
}

std::vector<KatoQuantity> curve_of(const std::vector<AnchorRun>& runs, int nt) {
  std::vector<KatoQuantity> out(nt);
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (int k = 0; k < nt; ++k) {
      const RunningStats& s = runs[a].bank[k];
      if (a == 0 || s.mean() > out[k].value) out[k] = {s.mean(), s.std_error(), a};
    }
  }
  return out;
}

KhasminskiiFit fit_of(const std::vector<AnchorRun>& runs, const std::vector<double>& t_grid, double delta) {
  const int nt = static_cast<int>(t_grid.size());
  KhasminskiiFit fit;
  fit.delta = delta;
  fit.t = t_grid;
  fit.sup_moment.assign(nt, 0.0);
  for (const AnchorRun& run : runs)
    for (int k = 0; k < nt; ++k) {
      // An overflowing exponential turns the running mean into inf or NaN.
      const double mean = run.bank[nt + k].mean();
      fit.sup_moment[k] = std::max(fit.sup_moment[k], std::isfinite(mean) ? mean : kInf);
    }
  // Compared in logs: both sides overflow long before C reaches its cap.
  auto holds = [&](double c) {
    for (int k = 0; k < nt; ++k)
      if (!(std::log(fit.sup_moment[k]) <= std::log(delta) + c * t_grid[k])) return false;
    return true;
  };
  if (!holds(kKhasminskiiCMax)) {
    fit.c = kKhasminskiiCMax;
    fit.pass = false;
    return fit;
  }
  double lo = 0.0, hi = kKhasminskiiCMax;
  if (holds(0.0)) {
    hi = 0.0;
  } else {
    while (hi - lo > 1e-3) {
      const double mid = 0.5 * (lo + hi);
      (holds(mid) ? hi : lo) = mid;
    }
  }
  fit.c = hi;
  fit.pass = true;
  return fit;
}

void check_delta(double delta) {
  if (!(delta > 1.0)) throw ConfigError("Khasminskii delta must exceed 1");
}

}  // namespace

std::vector<KatoQuantity> kato_curve(const ManifoldModel& m, const ScalarField& v,
                                     const std::vector<double>& t_grid,
                                     const std::vector<Point>& anchors, const SimConfig& cfg) {
  return curve_of(anchor_runs(m, v, t_grid, anchors, cfg), static_cast<int>(t_grid.size()));
}

KatoQuantity kato_quantity(const ManifoldModel& m, const ScalarField& v, double t,
                           const std::vector<Point>& anchors, const SimConfig& cfg) {
  return kato_curve(m, v, {t}, anchors, cfg).front();
}

KhasminskiiFit khasminskii_fit(const ManifoldModel& m, const ScalarField& v, double delta,
                               const std::vector<double>& t_grid,
                               const std::vector<Point>& anchors, const SimConfig& cfg) {
  check_delta(delta);
  return fit_of(anchor_runs(m, v, t_grid, anchors, cfg), t_grid, delta);
}

KatoReport kato_report(const ManifoldModel& m, const ScalarField& v, double delta,
                       const std::vector<double>& t_grid, const std::vector<Point>& anchors,
                       const SimConfig& cfg) {
  KatoReport r;
  r.t_grid = t_grid;
  std::sort(r.t_grid.begin(), r.t_grid.end(), std::greater<>());
  check_delta(delta);
  const auto runs = anchor_runs(m, v, r.t_grid, anchors, cfg);
  for (const auto& q : curve_of(runs, static_cast<int>(r.t_grid.size()))) {
    r.sup_estimates.push_back(q.value);
    r.sup_errors.push_back(q.std_error);
  }
  r.khasminskii = fit_of(runs, r.t_grid, delta);
  r.n_anchors = anchors.size();
  r.anchor_note = "sup over " + std::to_string(anchors.size()) + " anchors (lower estimate)";

  const int nt = static_cast<int>(r.t_grid.size());
  const int use = std::min(3, nt);
  double num = 0.0, den = 0.0;
  for (int k = nt - use; k < nt; ++k) {
    num += r.t_grid[k] * r.sup_estimates[k];
    den += r.t_grid[k] * r.t_grid[k];
  }
  r.slope_fit = den > 0.0 ? num / den : 0.0;

  const double top = *std::max_element(r.sup_estimates.begin(), r.sup_estimates.end());
  if (top <= 1e-14) {
    r.verdict = KatoVerdict::kato;
    return r;
  }
  // Log-log slope on the smallest times.
  std::vector<double> lx, ly;
  for (int k = nt - use; k < nt; ++k)
    if (r.sup_estimates[k] > 0.0 && r.t_grid[k] > 0.0) {
      lx.push_back(std::log(r.t_grid[k]));
      ly.push_back(std::log(r.sup_estimates[k]));
    }
  if (lx.size() < 2) {
    r.verdict = KatoVerdict::inconclusive;
    return r;
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  r.decay_exponent = sxx > 0.0 ? sxy / sxx : 0.0;
  if (r.decay_exponent >= 0.25)
    r.verdict = KatoVerdict::kato;
  else if (r.decay_exponent < 0.05)
    r.verdict = KatoVerdict::not_kato_at_resolution;
  else
    r.verdict = KatoVerdict::inconclusive;
  return r;
}

// Radial L^p splits --------------------------------------------------------------------

namespace {

constexpr int kPanelsPerDecade = 16;

/// ∫_{a}^{b} F(r) dr with log-spaced Gauss–Legendre panels.
template <class F>
double log_integral(F&& f, double a, double b) {
  const double la = std::log(a), lb = std::log(b);
  const int panels = std::max(4, static_cast<int>(std::ceil((lb - la) / std::log(10.0) * kPanelsPerDecade)));
  return integrate_composite([&](double s) {
    const double r = std::exp(s);
    return f(r) * r;
  }, la, lb, panels);
}

template <class F>
double log_grid_max(F&& f, double a, double b, int per_decade) {
  const int n = std::max(2, static_cast<int>(std::log10(b / a) * per_decade) + 1);
  double mx = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
    mx = std::max(mx, f(r));
  }
  return mx;
}

/// Largest r ≤ r_max (by halving) at which ψ^{d−1} stays representable.
double finite_volume_cap(const std::function<double(double)>& psi, int d, double r_max) {
  while (r_max > 1.0 && !(std::pow(psi(r_max), d - 1) < 1e300)) r_max *= 0.5;
  return r_max;
}

bool converged(double prev, double cur) {
  if (!std::isfinite(cur) || !std::isfinite(prev)) return false;
  return std::abs(cur - prev) <= 1e-2 * std::max(std::abs(cur), 1e-300) || (cur == 0.0 && prev == 0.0);
}

}  // namespace

SplitReport radial_split(const std::function<double(double)>& v, const std::function<double(double)>& weight,
                         double p, double r_max) {
  auto vabs = [&](double r) {
    const double x = std::abs(v(r));
    return std::isfinite(x) ? x : kInf;
  };
  constexpr double kInner[] = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  const double outer[] = {r_max / 8, r_max / 4, r_max / 2, r_max};

  // Median of the nonzero |v| over a reference log grid.
  std::vector<double> samples;
  for (int i = 0; i <= 600; ++i) {
    const double r = 1e-3 * std::pow(r_max / 1e-3, i / 600.0);
    const double x = vabs(r);
    if (x > 0.0 && std::isfinite(x)) samples.push_back(x);
  }
  SplitReport rep;
  if (samples.empty()) {
    rep.pass = true;
    rep.bounded_candidate = true;
    return rep;
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  const double median = samples[samples.size() / 2];

  auto norm_for = [&](double lambda, double a, double b) {
    const double s = log_integral([&](double r) {
      const double x = vabs(r);
      return x > lambda ? std::pow(x, p) * weight(r) : 0.0;
    }, a, b);
    return std::pow(s, 1.0 / p);
  };
  auto check = [&](double lambda, double& norm_out) {
    double prev = norm_for(lambda, kInner[0], r_max);
    for (std::size_t i = 1; i < std::size(kInner); ++i) {
      const double cur = norm_for(lambda, kInner[i], r_max);
      if (i + 1 == std::size(kInner) && !converged(prev, cur)) return false;
      prev = cur;
    }
    double prev_outer = norm_for(lambda, kInner[std::size(kInner) - 1], outer[0]);
    for (std::size_t i = 1; i < std::size(outer); ++i) {
      const double cur = norm_for(lambda, kInner[std::size(kInner) - 1], outer[i]);
      if (i + 1 == std::size(outer) && !converged(prev_outer, cur)) return false;
      prev_outer = cur;
    }
    norm_out = prev;
    return std::isfinite(prev);
  };

  // Candidate λ = sup|v|, admissible only when the sup is stable under refinement.
  // It is tried first, then the grid from the top.
  std::vector<double> lambdas;
  const double sup_coarse = log_grid_max(vabs, kInner[4], r_max, 200);
  const double sup_fine = log_grid_max(vabs, kInner[5], r_max, 400);
  if (std::isfinite(sup_fine) && sup_fine <= sup_coarse * 1.01) {
    rep.bounded_candidate = true;
    lambdas.push_back(sup_fine);
  }
  for (int i = 15; i >= 0; --i) lambdas.push_back(median * std::pow(10.0, -3.0 + 6.0 * i / 15.0));

  for (double lambda : lambdas) {
    ++rep.thresholds_tried;
    double norm = 0.0;
    if (check(lambda, norm)) {
      rep.pass = true;
      rep.lambda = lambda;
      rep.lp_norm = norm;
      return rep;
    }
  }
  rep.pass = false;
  return rep;
}

DecompositionReport decomposition_check(const ManifoldModel& m, const ScalarField& v, double p) {
  const Geometry& geo = m.geo();
  const int d = geo.dim();
  if (!(p > 0.5 * d)) throw ConfigError("decomposition check needs p > d/2");
  const auto psi = geo.radial_profile();
  const auto vol = geo.ball_volume(1.0);
  if (!psi || !vol) throw QuadratureError("decomposition check needs a rotationally symmetric model");

  const Point o = geo.origin();
  const Mat g0 = geo.metric(o);
  Vec e = Vec::Zero(d);
  e[0] = 1.0 / std::sqrt(g0(0, 0));
  const bool cartesian = geo.kind() == ModelKind::euclidean || geo.kind() == ModelKind::model;
  auto v_radial = [&](double r) {
    if (cartesian) {
      Vec x = Vec::Zero(d);
      x[0] = r;
      return v(Point(x, 0));
    }
    return v(geo.exp_map(o, r * e));
  };

  const double r_max = geo.kind() == ModelKind::sphere
                           ? std::numbers::pi * static_cast<const SpaceForm&>(geo).scale() * (1 - 1e-9)
                           : finite_volume_cap(psi->value, d, 1e3);
  DecompositionReport rep;
  rep.xi = 1.0 / *vol;
  const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
  auto weight = [&](double r) { return rep.xi * area * std::pow(psi->value(r), d - 1); };
  rep.split = radial_split(v_radial, weight, p, r_max);
  rep.pass = rep.split.pass;
  return rep;
}

// Example criteria for model metrics -------------------------------------------------

namespace {

constexpr double kFdStep = 1e-6;

struct Derivs {
  double v, d1, d2;
};

Derivs central(const std::function<double(double)>& f, double r) {
  const double h = std::min(kFdStep, 0.25 * r);
  const double fp = f(r + h), f0 = f(r), fm = f(r - h);
  return {f0, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)};
}

double radial_expression(const Derivs& p, int d) {
  return p.d2 / p.v - (d - 1) * (p.d1 * p.d1) / (p.v * p.v);
}

/// Smallest eigenvalue of the Ricci tensor of dr² + ψ² dθ².
double model_ricci_min(const Derivs& p, int d) {
  const double radial = -(d - 1) * p.d2 / p.v;
  const double tangential = -p.d2 / p.v + (d - 2) * (1 - p.d1 * p.d1) / (p.v * p.v);
  return std::min(radial, tangential);
}

std::vector<double> exa_grid() {
  std::vector<double> r;
  const int n = 6 * 100;
  for (int i = 0; i <= n; ++i) r.push_back(1e-3 * std::pow(10.0, 6.0 * i / n));
  return r;
}

bool stable_bound(double full, double inner) { return full >= inner - 0.1 * (1.0 + std::abs(inner)); }

}  // namespace

ExaReport example_exa_check(const RadialProfile& psi, const RadialProfile& psi0, int d, double p) {
  if (d < 2) throw ConfigError("model manifolds need d >= 2");
  if (!(p > 0.5 * d)) throw ConfigError("example check needs p > d/2");
  ExaReport rep;

  const double r0 = 1e-4;
  const Derivs a = central(psi0.value, r0);
  rep.a_value = a.v - r0 * a.d1;
  rep.a_slope = a.d1;
  rep.a_curvature = a.d2;
  rep.a = std::abs(rep.a_value) <= 1e-6 && std::abs(rep.a_slope - 1.0) <= 1e-3 &&
          std::abs(rep.a_curvature) <= 1e-2;

  double b_full = kInf, b_inner = b_full;
  double ric_full = b_full, ric_inner = b_full;
  double c_full = 1.0, c_inner = 1.0;
  for (double r : exa_grid()) {
    const double pv = psi.value(r);
    if (std::isfinite(pv) && pv <= 0.0) throw DomainError("psi must be positive on (0, inf)");
    const Derivs q = central(psi0.value, r);
    const double e = radial_expression(q, d);
    const double ric = model_ricci_min(q, d);
    const double ratio = pv / q.v;
    if (!std::isfinite(e) || !std::isfinite(ric) || !std::isfinite(ratio) || ratio <= 0.0) {
      ++rep.skipped_points;
      continue;
    }
    const double c = std::max(ratio, 1.0 / ratio);
    const bool inner = r >= 1e-2 * (1 - 1e-12) && r <= 1e2 * (1 + 1e-12);
    b_full = std::min(b_full, e);
    ric_full = std::min(ric_full, ric);
    c_full = std::max(c_full, c);
    if (inner) {
      b_inner = std::min(b_inner, e);
      ric_inner = std::min(ric_inner, ric);
      c_inner = std::max(c_inner, c);
    }
  }
  rep.b_min_full = b_full;
  rep.b_min_inner = b_inner;
  rep.b = std::isfinite(b_full) && stable_bound(b_full, b_inner);
  rep.b_discrepancy = !rep.b && std::isfinite(ric_full) && stable_bound(ric_full, ric_inner);
  rep.c_constant = c_full;
  rep.c = c_full <= 1.1 * c_inner;

  auto negative_part = [&](double r) {
    const double e = radial_expression(central(psi.value, r), d);
    return std::isfinite(e) ? std::max(-e, 0.0) : kInf;
  };
  auto weight = [&](double r) { return std::pow(psi.value(r), d - 1); };
  rep.lp_split = radial_split(negative_part, weight, p, finite_volume_cap(psi.value, d, 1e3));
  rep.lp = rep.lp_split.pass;
  rep.overall = rep.a && rep.b && rep.c && rep.lp;
  return rep;
}

}  // namespace mheat
