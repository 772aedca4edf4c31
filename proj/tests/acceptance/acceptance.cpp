// Acceptance checks. Usage: acceptance [criterion ...]; no argument runs all.
// Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mheat/bochner.hpp"
#include "mheat/coupling.hpp"
#include "mheat/estimators.hpp"
#include "mheat/kato.hpp"
#include "mheat/models.hpp"
#include "mheat/parallel.hpp"
#include "mheat/test_functions.hpp"

using namespace mheat;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned budgets and tolerances.
constexpr std::int64_t kPaths = 100000;
constexpr double kDt = 1e-3;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

SimConfig sim(double dt, double horizon, std::int64_t n, std::uint64_t seed) {
  SimConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.n_paths = n;
  c.seed = seed;
  c.workers = resolve_workers(0);
  return c;
}

AmbientVec axis(int dim, int i) {
  AmbientVec a = AmbientVec::Zero(dim);
  a[i] = 1.0;
  return a;
}

// 1 ----------------------------------------------------------------------------------
Outcome eigenfunction_semigroup() {
  Outcome o;
  const auto m = euclidean(2);
  const double t = 0.5;
  const Estimate e = heat_semigroup_mc(m, functions::sine(m, 0), make_point({kPi / 2, 0.0}), t,
                                       sim(kDt, t, kPaths, 1));
  const double exact = std::exp(-0.25);
  o.require(std::abs(e.value - exact) <= 3 * e.std_error,
            fmt("P_t sin = %.5f vs %.5f (3se = %.5f)", e.value, exact, 3 * e.std_error));
  o.require(e.std_error < 0.005, fmt("se %.5f < 0.005", e.std_error));
  return o;
}

// 2 ----------------------------------------------------------------------------------
Outcome bel_vs_fd() {
  Outcome o;
  int worst_case = 0;
  double worst = 0.0;
  int checked = 0, failures = 0;
  auto compare = [&](const ManifoldModel& m, const std::vector<TestFunction>& fs,
                     const std::vector<Point>& points, const SimConfig& cfg, double t, double h) {
    for (const Point& x : points) {
      const Mat g = m.geo().metric(x);
      Vec xi = Vec::Zero(m.dim());
      xi[0] = 1.0 / std::sqrt(g(0, 0));
      const auto bel = bel_batch(m, fs, x, {xi}, t, cfg);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const Estimate fd = fd_directional_mc(m, fs[i], x, xi, h, t, cfg);
        const Estimate& b = bel[i][1];
        const double z = std::abs(b.value - fd.value) / combined_error(b.std_error, fd.std_error);
        ++checked;
        if (z > 3.0) ++failures;
        if (z > worst) {
          worst = z;
          worst_case = checked;
        }
      }
    }
  };
  {
    const auto m = euclidean(2);
    const double t = 0.5;
    compare(m,
            {functions::sine(m, 0), functions::gaussian(m, Vec::Zero(2), 1.0),
             functions::tanh_step(m, 0, 0.8)},
            {make_point({0.3, 0.1}), make_point({1.0, -0.5}), make_point({-0.7, 0.4})},
            sim(t, t, kPaths, 2), t, 1e-3);
  }
  {
    const auto m = sphere(2);
    const double t = 0.3;
    compare(m,
            {functions::spherical_linear(m, axis(3, 0)), functions::ambient_exp(m, 0.7 * axis(3, 2)),
             functions::ambient_square(m, axis(3, 1))},
            {make_point({1.2, 0.4}), make_point({0.7, 2.0}), make_point({2.3, 4.0})},
            sim(kDt, t, kPaths, 3), t, 1e-3);
  }
  o.require(failures == 0, fmt("%g of %g comparisons beyond 3 combined se (worst z = %.2f, case %g)", failures,
                               checked, worst, worst_case));
  return o;
}

// 3 ----------------------------------------------------------------------------------
Outcome q_process() {
  Outcome o;
  constexpr int kQPaths = 1000;
  const double t_max = 1.0;
  {
    const auto m = sphere(2);
    const SimConfig cfg = sim(kDt, t_max, kQPaths, 4);
    int exact = 0;
    double worst = 0.0;
    for (int i = 0; i < kQPaths; ++i) {
      const PathSample s = simulate_bm(m, make_point({1.0, 0.5}), cfg, i, {true, true});
      bool ok = s.alive_steps() == cfg.steps() + 1;
      for (int n = 0; n < s.alive_steps(); ++n) {
        const double target = std::exp(-0.5 * s.times[n]);
        const double err = (s.q_mats[n] - target * Mat::Identity(2, 2)).norm();
        worst = std::max(worst, err);
        ok = ok && err <= 5 * kDt;
      }
      exact += ok;
    }
    o.require(exact == kQPaths, fmt("S2: %g/%g paths with |Q_t - e^{-t/2} I| <= 5dt (worst %.2e)", exact, kQPaths,
                                    worst));
  }
  for (const auto& m : {sphere(2), hyperbolic(2)}) {
    const SimConfig cfg = sim(kDt, t_max, kQPaths, 5);
    const ScalarField k = m.ricci_lower_bound;
    const Point x = m.geo().kind() == ModelKind::sphere ? make_point({1.0, 0.5}) : make_point({0.0, 1.0});
    int ok_paths = 0;
    for (int i = 0; i < kQPaths; ++i) {
      const PathSample s = simulate_bm(m, x, cfg, i, {true, true});
      bool ok = true;
      double integral = 0.0;
      for (int n = 0; n < s.alive_steps(); ++n) {
        if (n > 0) integral += 0.5 * (s.times[n] - s.times[n - 1]) * (k(s.points[n - 1]) + k(s.points[n]));
        const double op = Eigen::JacobiSVD<Mat>(s.q_mats[n]).singularValues()[0];
        ok = ok && op <= std::exp(-0.5 * integral) * (1 + 10 * kDt);
      }
      ok_paths += ok;
    }
    o.require(ok_paths == kQPaths, m.geo().name() + fmt(": Gronwall bound on %g/%g paths", ok_paths, kQPaths));
  }
  return o;
}

// 4 ----------------------------------------------------------------------------------
Outcome stochastic_completeness() {
  Outcome o;
  const double t = 4.0;
  const std::vector<std::pair<ManifoldModel, Point>> cases = {
      {euclidean(2), make_point({0.0, 0.0})},
      {sphere(2), make_point({1.0, 0.5})},
      {hyperbolic(2), make_point({0.0, 1.0})},
  };
  for (const auto& [m, x] : cases) {
    const Estimate s = survival_probability(m, x, t, sim(kDt, t, kPaths, 6));
    o.require(s.value == 1.0, m.geo().name() + fmt(": survival %.6f (%g deaths)", s.value,
                                                    std::round((1 - s.value) * kPaths)));
  }
  return o;
}

// 5 ----------------------------------------------------------------------------------
Outcome lipschitz_smoothing() {
  Outcome o;
  const auto m = euclidean(2);
  const double t = 1.0;
  const auto anchors = default_anchors(m, 8);
  const LipschitzBound b = lipschitz_smoothing_bound(m, ScalarField::constant(0.0), t, anchors, sim(t, t, 1000, 7));
  o.require(b.bound == std::sqrt(8.0), fmt("bound %.4f", b.bound));

  constexpr int kPairs = 10000;
  RandomStream rs(StreamId{7, 99});
  std::vector<std::pair<Point, Point>> pairs;
  for (int i = 0; i < kPairs; ++i) {
    Vec u(2), v(2);
    for (int j = 0; j < 2; ++j) {
      u[j] = 4 * rs.uniform() - 2;
      v[j] = u[j] + (rs.uniform() - 0.5);
    }
    pairs.emplace_back(Point(u), Point(v));
  }
  const TestFunction f = functions::compact_bump(m, 1.0);
  const QuotientCheck q = lipschitz_quotient_check(m, f, t, b.bound, pairs, sim(t, t, 2000, 8));
  o.require(q.violations == 0, fmt("%g violations over %g pairs, max quotient %.4f", q.violations, q.pairs,
                                   q.max_quotient));
  return o;
}

// 6 ----------------------------------------------------------------------------------
Outcome kato_constant() {
  Outcome o;
  const auto m = euclidean(2);
  const double c = -1.5;
  const std::vector<double> grid = {1.0, 0.5, 0.25, 0.125};
  const auto anchors = default_anchors(m, 8);
  const SimConfig cfg = sim(1e-2, 1.0, 2000, 9);
  const ScalarField v = ScalarField::constant(c);
  const auto curve = kato_curve(m, v, grid, anchors, cfg);
  double worst = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double err = std::abs(curve[i].value - std::abs(c) * grid[i]);
    worst = std::max(worst, err);
    ok = ok && err <= 3 * curve[i].std_error + 1e-12;
  }
  o.require(ok, fmt("kato_quantity = |c| t on the grid (max error %.2e)", worst));
  const KhasminskiiFit fit = khasminskii_fit(m, v, 2.0, grid, anchors, cfg);
  o.require(fit.pass && fit.c <= std::abs(c) + 0.05, fmt("Khasminskii C = %.4f <= |c| + 0.05", fit.c));
  for (double q : {1.0, 2.0, 4.0}) {
    const KhasminskiiFit fq = khasminskii_fit(m, v.scaled(q), 2.0, grid, anchors, cfg);
    o.require(fq.pass, fmt("q = %g: C = %.4f", q, fq.c));
  }
  return o;
}

// 7 ----------------------------------------------------------------------------------
Outcome coupling_contraction() {
  Outcome o;
  {
    const auto m = euclidean(2);
    const SimConfig cfg = sim(kDt, 1.0, 100, 10);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const CouplingSample s = simulate_parallel_coupling(m, make_point({0, 0}), make_point({1, 0}), cfg, i);
      for (double r : s.distances) worst = std::max(worst, std::abs(r - 1.0));
    }
    o.require(worst <= 10 * kDt, fmt("Euclidean max |rho_t - rho_0| = %.2e", worst));
  }
  const auto m = sphere(2);
  const Point x = make_point({kPi / 2, 0.0}), y = make_point({kPi / 2, 1.0});
  constexpr int kCouplings = 10000;
  double previous = 1.0;
  for (double dt : {1e-3, 5e-4}) {
    const ContractionReport r =
        contraction_ensemble(m, ScalarField::constant(1.0), x, y, sim(dt, 1.0, kCouplings, 11));
    const double frac = r.violation_fraction();
    if (dt == 1e-3) o.require(frac < 0.01, fmt("S2 dt=%g: violation fraction %.5f < 1%%", dt, frac));
    else o.require(frac < previous, fmt("S2 dt=%g: violation fraction %.5f decreases", dt, frac));
    previous = frac;
  }
  return o;
}

// 8 ----------------------------------------------------------------------------------
Outcome kappa_checks() {
  Outcome o;
  const auto line = euclidean(1);
  const ScalarField k("x", [](const Point& p) { return p.x[0]; });
  const double half = kappa_average(line, k, make_point({0.0}), make_point({1.0}));
  o.require(std::abs(half - 0.5) <= 1e-10, fmt("kappa(0,1) = %.15f", half));
  const auto s2 = sphere(2);
  const ScalarField ks("cos", [](const Point& p) { return std::cos(p.x[0]) + 2.0; });
  const Point u = make_point({0.9, 1.7});
  const double diag = kappa_average(s2, ks, u, u);
  o.require(std::abs(diag - ks(u)) <= 1e-12, fmt("kappa(u,u) - k(u) = %.1e", diag - ks(u)));
  return o;
}

// 9 ----------------------------------------------------------------------------------
Outcome bochner_checks() {
  Outcome o;
  const double h = 1e-3;
  auto residual = [&](const ManifoldModel& m, const ScalarField& f, const std::vector<Point>& grid,
                      const std::string& label) {
    const double r = bochner_identity_residual(m, f, grid, h).max_residual;
    o.require(r <= 1e-3, label + fmt(": residual %.2e", r));
  };
  {
    const auto m = euclidean(2);
    const auto grid = chart_grid(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 7);
    residual(m, ScalarField("|x|^2", [](const Point& p) { return p.x.squaredNorm(); }), grid, "R2 |x|^2");
    residual(m, functions::sine(m, 0).value, grid, "R2 sin");
  }
  const auto s2 = sphere(2);
  const auto s2_grid = chart_grid(Vec::Constant(2, 0.3), Vec{{kPi - 0.3, 2 * kPi - 0.1}}, 9);
  const ScalarField y1 = functions::spherical_linear(s2, axis(3, 0)).value;
  residual(s2, y1, s2_grid, "S2 Y1");
  {
    const auto h2 = hyperbolic(2);
    const auto grid = chart_grid(Vec{{-1.0, 0.5}}, Vec{{1.0, 2.0}}, 7);
    residual(h2, functions::gaussian(h2, Vec{{0.0, 1.0}}, 1.0).value, grid, "H2 gaussian");
  }
  {
    const auto md = radial_model(2, RadialProfile::sinh());
    const auto grid = chart_grid(Vec::Constant(2, 0.3), Vec::Constant(2, 1.2), 5);
    residual(md, functions::gaussian(md, Vec::Zero(2), 1.0).value, grid, "model(sinh) gaussian");
  }
  const L1BochnerReport sharp = l1_bochner_check(s2, y1, ScalarField::constant(1.0), s2_grid, h);
  const L1BochnerReport wrong = l1_bochner_check(s2, y1, ScalarField::constant(1.5), s2_grid, h);
  o.require(sharp.min_slack >= -sharp.tolerance && wrong.min_slack < -wrong.tolerance,
            fmt("S2 Y1 min slack %.2e (k=1) vs %.2e (k=1.5)", sharp.min_slack, wrong.min_slack));
  return o;
}

// 10 ---------------------------------------------------------------------------------
Outcome schrodinger_lp() {
  Outcome o;
  const double k = -2.0;
  const auto m = euclidean(2);
  const QuadratureGrid grid = box_grid(m, Vec::Constant(2, -2.5), Vec::Constant(2, 2.5), 21);
  const TestFunction f = functions::compact_bump(m, 1.0);
  for (double t : {0.25, 0.5, 1.0}) {
    LpInputs in;
    in.p = 2.0;
    in.t = t;
    in.delta = 1.0;
    in.c = -0.5 * k;
    // Flat paths are exact in law; the potential is constant.
    const LpReport r = lp_operator_check(m, ScalarField::constant(k), f, in, grid, sim(t, t, 2000, 12));
    o.require(r.ratio <= std::exp(t) * 1.05, fmt("t=%g: ratio %.4f <= %.4f", t, r.ratio, std::exp(t) * 1.05));
  }
  return o;
}

// 11 ---------------------------------------------------------------------------------
Outcome reproducibility() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "mheat_acceptance_repro";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cfg_text =
      "[manifold]\nkind = sphere\ndim = 2\n[numeric]\nN = 2000\nseed = 7\ndt = 0.01\nT = 0.5\npairs = 50\n";
  std::ofstream(root / "run.cfg") << cfg_text;
  std::vector<std::string> outputs;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string(MHEAT_TOOL) + " report-all --config " + (root / "run.cfg").string() +
                            " --out " + (root / run).string() + " > " + (root / run).string() + ".log 2>&1";
    const int rc = std::system(cmd.c_str());
    o.require(rc == 0, fmt("report-all run exit status %g", rc));
  }
  int files = 0, identical = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    std::ifstream fa(entry.path(), std::ios::binary), fb(root / "b" / entry.path().filename(), std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    identical += fb && sa.str() == sb.str();
  }
  o.require(files > 0 && identical == files, fmt("%g/%g artifacts byte-identical", identical, files));
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "eigenfunction_semigroup", eigenfunction_semigroup},
      {2, "bel_vs_finite_differences", bel_vs_fd},
      {3, "q_process_exactness", q_process},
      {4, "stochastic_completeness", stochastic_completeness},
      {5, "lipschitz_smoothing", lipschitz_smoothing},
      {6, "kato_diagnostics", kato_constant},
      {7, "coupling_contraction", coupling_contraction},
      {8, "kappa_correctness", kappa_checks},
      {9, "bochner", bochner_checks},
      {10, "schrodinger_lp_bound", schrodinger_lp},
      {11, "reproducibility", reproducibility},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  bool all_pass = true;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s %s: %s [%.1fs]\n", c.id, out.pass ? "PASS" : "FAIL", c.name, out.detail.c_str(),
                secs);
    std::fflush(stdout);
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
