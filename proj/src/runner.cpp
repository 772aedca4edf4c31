#include "mheat/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mheat/bochner.hpp"
#include "mheat/coupling.hpp"
#include "mheat/estimators.hpp"
#include "mheat/kato.hpp"
#include "mheat/models.hpp"
#include "mheat/test_functions.hpp"

namespace mheat {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

bool RunResult::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

ManifoldModel build_model(const ManifoldSpec& s) {
  ManifoldModel m;
  if (s.kind == "euclidean") {
    m = euclidean(s.dim);
  } else if (s.kind == "sphere") {
    m = sphere(s.dim, s.radius);
  } else if (s.kind == "hyperbolic") {
    m = hyperbolic(s.dim, s.scale);
  } else if (s.kind == "model") {
    RadialProfile psi = s.psi == "sinh"    ? RadialProfile::sinh(s.scale)
                        : s.psi == "sin"   ? RadialProfile::sin(s.scale)
                        : s.psi == "power" ? RadialProfile::power(s.psi_coefficient, s.psi_exponent)
                                           : RadialProfile::linear();
    m = radial_model(s.dim, std::move(psi));
  } else {
    throw ConfigError("unknown manifold kind '" + s.kind + "'");
  }
  if (s.weight == "quadratic") m = with_weight(std::move(m), WeightPotential::quadratic(s.weight_strength));
  return m;
}

namespace {

/// Shared state of one run.
struct Context {
  const ExperimentConfig& cfg;
  ManifoldModel model;
  SimConfig sim;
  std::string hash;
  fs::path dir;
  std::ostream& log;
  RunResult result;

  void check(const std::string& name, bool pass, const std::string& detail) {
    log << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    result.checks.push_back({name, pass, detail});
  }

  json header(const char* experiment) const {
    json j;
    j["experiment"] = experiment;
    j["config_hash"] = hash;
    j["seed"] = cfg.numeric.seed;
    j["manifold"] = model.geo().name();
    j["dim"] = model.dim();
    return j;
  }

  void write_json(const std::string& name, const json& j) {
    if (!cfg.output.json) return;
    std::ofstream(dir / name) << j.dump(2) << "\n";
    result.files.push_back(name);
  }

  /// Opens a CSV artifact whose first line records the hash and seed.
  std::optional<std::ofstream> csv(const std::string& name) {
    if (!cfg.output.csv) return std::nullopt;
    std::ofstream os(dir / name);
    os << "# config_hash=" << hash << " seed=" << cfg.numeric.seed << "\n";
    result.files.push_back(name);
    return os;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

json to_json(const Estimate& e) { return {{"value", e.value}, {"std_error", e.std_error}}; }

Point base_point(const Context& c) {
  const int d = c.model.dim();
  if (c.cfg.experiment.point) return Point(Eigen::Map<const Vec>(c.cfg.experiment.point->data(), d), 0);
  switch (c.model.geo().kind()) {
    case ModelKind::euclidean:
    case ModelKind::model:
      return Point(Vec::Constant(d, 0.5), 0);
    default:
      return c.model.geo().origin();
  }
}

/// Partner point for couplings: at distance one (in units of the model
/// scale) along the first chart axis unless configured.
Point partner_point(const Context& c, const Point& x) {
  const int d = c.model.dim();
  if (c.cfg.experiment.point_y) return Point(Eigen::Map<const Vec>(c.cfg.experiment.point_y->data(), d), 0);
  const Mat g = c.model.geo().metric(x);
  Vec v = Vec::Zero(d);
  const double unit = c.model.geo().kind() == ModelKind::sphere ? c.cfg.manifold.radius
                      : c.model.geo().kind() == ModelKind::hyperbolic ? c.cfg.manifold.scale
                                                                      : 1.0;
  v[0] = unit / std::sqrt(g(0, 0));
  return exp_map(c.model, x, v);
}

TestFunction test_function(const Context& c, const Point& center) {
  const ManifoldModel& m = c.model;
  std::string name = c.cfg.experiment.function;
  const ModelKind kind = m.geo().kind();
  const bool space_form = kind == ModelKind::sphere || kind == ModelKind::hyperbolic;
  if (name == "auto") name = kind == ModelKind::euclidean ? "sine" : kind == ModelKind::sphere ? "linear" : "gaussian";
  AmbientVec e0 = AmbientVec::Zero(m.dim() + 1);
  e0[0] = 1.0;
  if (name == "sine") return functions::sine(m, 0);
  if (name == "gaussian") return functions::gaussian(m, m.geo().canonical(center).x, 1.0);
  if (name == "tanh") return functions::tanh_step(m, 0, 1.0);
  if (name == "bump") return functions::compact_bump(m, 1.0);
  if (!space_form) throw ConfigError("function '" + name + "' needs a sphere or hyperbolic model");
  if (name == "linear") {
    if (kind != ModelKind::sphere) throw ConfigError("function 'linear' is bounded only on the sphere");
    return functions::spherical_linear(m, e0);
  }
  if (kind != ModelKind::sphere) throw ConfigError("function 'exp_linear' is bounded only on the sphere");
  return functions::ambient_exp(m, 0.5 * e0);
}

/// Compactly supported bump (1 − |x − c|²/r²)³ in chart-0 coordinates.
TestFunction bump_at(const ManifoldModel& m, const Vec& center, double r) {
  const double r2 = r * r;
  return functions::from_chart(
      m, "bump",
      [center, r2](const Vec& x) {
        const double s = 1.0 - (x - center).squaredNorm() / r2;
        return s > 0.0 ? s * s * s : 0.0;
      },
      [center, r2](const Vec& x) -> Vec {
        const double s = 1.0 - (x - center).squaredNorm() / r2;
        if (s <= 0.0) return Vec::Zero(x.size());
        return (-6.0 * s * s / r2) * (x - center);
      },
      1.0);
}

double k_level(const Context& c) {
  if (c.cfg.experiment.k) return *c.cfg.experiment.k;
  if (const auto v = c.model.ricci_lower_bound.constant_value()) return *v;
  return 0.0;
}

/// The curvature bound k of the checks: the configured constant, else the
/// model's own bound.
ScalarField curvature_bound(const Context& c) {
  if (c.cfg.experiment.k) return ScalarField::constant(*c.cfg.experiment.k);
  return c.model.ricci_lower_bound;
}

ScalarField potential(const Context& c) {
  const double level = k_level(c);
  const auto geo = c.model.geometry;
  const std::string& kind = c.cfg.experiment.potential;
  if (kind == "indicator")
    return ScalarField("indicator", [geo, level](const Point& p) {
      return geo->radial_coordinate(p) < 1.0 ? level : 0.0;
    });
  if (kind == "inverse_radius")
    return ScalarField("inverse_radius", [geo, level](const Point& p) {
      const double r = geo->radial_coordinate(p);
      return r < 1.0 ? level / r : 0.0;
    });
  if (!c.cfg.experiment.k && !c.model.ricci_lower_bound.constant_value()) return c.model.ricci_lower_bound;
  return ScalarField::constant(level);
}

std::vector<double> time_grid(const Context& c, std::initializer_list<double> fractions) {
  if (!c.cfg.experiment.times.empty()) return c.cfg.experiment.times;
  std::vector<double> t;
  for (double f : fractions) t.push_back(f * c.cfg.numeric.horizon);
  return t;
}

/// Midpoint grid covering the whole sphere; chart 0 misses only a null set.
QuadratureGrid whole_sphere_grid(const ManifoldModel& m, int n) {
  const int d = m.dim();
  QuadratureGrid grid;
  std::vector<int> idx(d, 0);
  const double dpolar = std::numbers::pi / n, dazimuth = 2.0 * std::numbers::pi / (2 * n);
  while (true) {
    Vec x(d);
    double cell = 1.0;
    for (int i = 0; i < d; ++i) {
      const double step = i + 1 < d ? dpolar : dazimuth;
      x[i] = (idx[i] + 0.5) * step;
      cell *= step;
    }
    const Point p(x, 0);
    grid.points.push_back(p);
    grid.weights.push_back(cell * std::sqrt(m.geo().metric(p).determinant()));
    grid.boundary.push_back(false);
    int a = 0;
    while (a < d && ++idx[a] == (a + 1 < d ? n : 2 * n)) idx[a++] = 0;
    if (a == d) break;
  }
  return grid;
}

// Experiments ---------------------------------------------------------------------------

void run_simulate(Context& c) {
  const Point x = base_point(c);
  const TestFunction f = test_function(c, x);
  const double T = c.sim.horizon;
  const Estimate surv = survival_probability(c.model, x, T, c.sim);
  const Estimate heat = heat_semigroup_mc(c.model, f, x, T, c.sim);
  const int n_write = static_cast<int>(std::min<std::int64_t>(c.sim.n_paths, 4));
  for (int i = 0; i < n_write; ++i) {
    if (auto os = c.csv("path_" + std::to_string(i) + ".csv"))
      write_path_csv(*os, simulate_bm(c.model, x, c.sim, static_cast<std::uint64_t>(i)));
  }
  json j = c.header("simulate");
  j["t"] = T;
  j["dt"] = c.sim.step_size();
  j["n_paths"] = c.sim.n_paths;
  j["survival"] = to_json(surv);
  j["heat"] = to_json(heat);
  j["function"] = f.name;
  c.write_json("simulate.json", j);
  const ModelKind kind = c.model.geo().kind();
  if (kind == ModelKind::euclidean || kind == ModelKind::sphere || kind == ModelKind::hyperbolic)
    c.check("simulate.stochastic_completeness", surv.value >= 1.0 - 1e-3,
            fmt("survival %.6f at t=%g", surv.value, T));
  c.log << "     P_t f(x) = " << heat.value << " +- " << heat.std_error << "\n";
}

void run_gradient(Context& c) {
  const Point x = base_point(c);
  const TestFunction f = test_function(c, x);
  const int d = c.model.dim();
  const double T = c.sim.horizon;
  const Mat g = c.model.geo().metric(x);
  std::vector<Vec> dirs;
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = 1.0 / std::sqrt(g(i, i));
    dirs.push_back(e);
  }
  const auto bel = bel_batch(c.model, {f}, x, dirs, T, c.sim);
  json j = c.header("gradient");
  j["t"] = T;
  j["function"] = f.name;
  j["heat"] = to_json(bel[0][0]);
  json rows = json::array();
  bool ok = true;
  double worst = 0.0;
  for (int i = 0; i < d; ++i) {
    const Estimate fd = fd_directional_mc(c.model, f, x, dirs[i], c.cfg.numeric.h, T, c.sim);
    const Estimate& b = bel[0][1 + i];
    const double err = combined_error(b.std_error, fd.std_error);
    const double z = err > 0.0 ? std::abs(b.value - fd.value) / err : 0.0;
    worst = std::max(worst, z);
    ok = ok && std::abs(b.value - fd.value) <= 3.0 * err + 1e-12;
    rows.push_back({{"direction", i}, {"bel", to_json(b)}, {"fd", to_json(fd)}, {"z", z}});
  }
  j["directions"] = rows;
  c.write_json("gradient.json", j);
  c.check("gradient.bel_vs_fd", ok, fmt("max |bel-fd|/err = %.3f over %g directions", worst, d));
}

void run_kato(Context& c) {
  const ScalarField v = potential(c);
  const auto anchors = default_anchors(c.model, c.cfg.numeric.anchors);
  const auto times = time_grid(c, {1.0, 0.5, 0.25, 0.125});
  const KatoReport r = kato_report(c.model, v, c.cfg.experiment.delta, times, anchors, c.sim);
  json j = c.header("kato");
  j["potential"] = v.name();
  j["t_grid"] = r.t_grid;
  j["sup_estimates"] = r.sup_estimates;
  j["sup_errors"] = r.sup_errors;
  j["slope_fit"] = r.slope_fit;
  j["decay_exponent"] = r.decay_exponent;
  j["khasminskii"] = {{"delta", r.khasminskii.delta}, {"C", r.khasminskii.c}, {"pass", r.khasminskii.pass}};
  j["verdict"] = to_string(r.verdict);
  j["anchors"] = r.n_anchors;
  j["anchor_note"] = r.anchor_note;
  if (c.model.geo().radial_profile() && c.cfg.experiment.p > 0.5 * c.model.dim()) {
    const auto dec = decomposition_check(c.model, v, c.cfg.experiment.p);
    j["decomposition"] = {{"p", c.cfg.experiment.p}, {"pass", dec.pass}, {"lambda", dec.split.lambda},
                          {"lp_norm", dec.split.lp_norm}, {"xi", dec.xi}};
  }
  c.write_json("kato.json", j);
  if (auto os = c.csv("kato.csv")) {
    *os << "t,sup_estimate,std_error\n";
    for (std::size_t i = 0; i < r.t_grid.size(); ++i)
      *os << fmt("%.17g,%.17g,%.17g\n", r.t_grid[i], r.sup_estimates[i], r.sup_errors[i]);
  }
  c.check("kato.verdict", r.verdict == KatoVerdict::kato,
          std::string("verdict ") + to_string(r.verdict) + fmt(", Khasminskii C=%.4g (delta=%g)", r.khasminskii.c,
                                                                r.khasminskii.delta));
}

void run_coupling(Context& c) {
  const Point x = base_point(c);
  const Point y = partner_point(c, x);
  const ScalarField k = curvature_bound(c);
  SimConfig sim = c.sim;
  sim.n_paths = c.cfg.numeric.pairs;
  const ContractionReport r = contraction_ensemble(c.model, k, x, y, sim);
  json j = c.header("coupling");
  j["rho0"] = c.model.geo().distance(x, y);
  j["report"] = json::parse(to_json(r));
  c.write_json("coupling.json", j);
  if (auto os = c.csv("coupling.csv")) write_coupling_csv(*os, simulate_parallel_coupling(c.model, x, y, sim, 0, k));
  c.check("coupling.contraction", r.violation_fraction() < 0.01,
          fmt("violation fraction %.5f over %.0f grid pairs, worst ratio %.4f", r.violation_fraction(),
              static_cast<double>(r.pairs), r.worst_ratio));
}

std::vector<Point> bochner_grid(const Context& c) {
  const int d = c.model.dim();
  const int n = c.cfg.numeric.grid;
  Vec lo = Vec::Constant(d, -1.0), hi = Vec::Constant(d, 1.0);
  switch (c.model.geo().kind()) {
    case ModelKind::sphere:
      lo.setConstant(0.3);
      hi.setConstant(std::numbers::pi - 0.3);
      lo[d - 1] = 0.1;
      hi[d - 1] = 2.0 * std::numbers::pi - 0.1;
      break;
    case ModelKind::hyperbolic:
      lo[d - 1] = 0.5;
      hi[d - 1] = 2.0;
      break;
    case ModelKind::model:
      lo.setConstant(0.3);
      hi.setConstant(1.2);
      break;
    default:
      break;
  }
  return chart_grid(lo, hi, n);
}

void run_bochner(Context& c) {
  const Point x = base_point(c);
  const TestFunction f = test_function(c, x);
  const ScalarField k = curvature_bound(c);
  const auto grid = bochner_grid(c);
  const double h = c.cfg.numeric.h;
  const BochnerResidual res = bochner_identity_residual(c.model, f.value, grid, h);
  const L1BochnerReport l1 = l1_bochner_check(c.model, f.value, k, grid, h);
  json j = c.header("bochner");
  j["function"] = f.name;
  j["h"] = h;
  j["grid_points"] = grid.size();
  j["max_identity_residual"] = res.max_residual;
  j["l1"] = {{"min_slack", l1.min_slack}, {"violations", l1.violations}, {"skipped", l1.skipped},
             {"tolerance", l1.tolerance}};
  c.write_json("bochner.json", j);
  if (auto os = c.csv("bochner.csv")) write_bochner_csv(*os, l1.points);
  c.check("bochner.identity", res.max_residual <= 1e-3, fmt("max residual %.3e at h=%g", res.max_residual, h));
  c.check("bochner.l1", l1.violations == 0,
          fmt("min slack %.3e, %g violations", l1.min_slack, l1.violations));
}

void run_schrodinger(Context& c) {
  const ManifoldModel& m = c.model;
  const int d = m.dim();
  const int n = c.cfg.numeric.grid;
  const ScalarField k = potential(c);
  const auto times = time_grid(c, {0.25, 0.5, 1.0});

  QuadratureGrid grid;
  TestFunction f;
  switch (m.geo().kind()) {
    case ModelKind::sphere:
      grid = whole_sphere_grid(m, n);
      f = test_function(c, m.geo().origin());
      break;
    case ModelKind::hyperbolic: {
      Vec lo = Vec::Constant(d, -1.0), hi = Vec::Constant(d, 1.0);
      lo[d - 1] = 0.4;
      hi[d - 1] = 1.6;
      grid = box_grid(m, lo, hi, n);
      f = bump_at(m, m.geo().origin().x, 0.5);
      break;
    }
    default:
      grid = box_grid(m, Vec::Constant(d, -2.0), Vec::Constant(d, 2.0), n);
      f = bump_at(m, Vec::Zero(d), 1.0);
      break;
  }

  // Khasminskii constants of ½k⁻: exact for constants, fitted otherwise.
  double delta = 1.0, cst = 0.0;
  if (const auto kc = k.constant_value()) {
    cst = std::max(0.0, -0.5 * *kc);
  } else {
    const auto fit = khasminskii_fit(m, k.negative_part().scaled(0.5), c.cfg.experiment.delta, times,
                                     default_anchors(m, c.cfg.numeric.anchors), c.sim);
    delta = fit.delta;
    cst = fit.c;
  }

  SimConfig sim = c.sim;
  sim.n_paths = std::max<std::int64_t>(256, c.sim.n_paths / 8);
  json j = c.header("schrodinger");
  j["p"] = c.cfg.experiment.p;
  j["delta"] = delta;
  j["C"] = cst;
  j["paths_per_point"] = sim.n_paths;
  json rows = json::array();
  for (double t : times) {
    LpInputs in;
    in.p = c.cfg.experiment.p;
    in.t = t;
    in.delta = delta;
    in.c = cst;
    const LpReport r = lp_operator_check(m, k, f, in, grid, sim);
    rows.push_back({{"t", t}, {"ratio", r.ratio}, {"ratio_error", r.ratio_error}, {"bound", r.bound}, {"pass", r.pass}});
    c.check(fmt("schrodinger.lp_bound(t=%g)", t), r.pass,
            fmt("ratio %.5f +- %.5f vs bound %.5f", r.ratio, r.ratio_error, r.bound));
  }
  j["times"] = rows;
  const Point x = base_point(c);
  j["fk_at_point"] = to_json(schrodinger_fk(m, f, k, x, c.sim.horizon, sim));
  c.write_json("schrodinger.json", j);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  validate(cfg);
  Context c{cfg, build_model(cfg.manifold), cfg.sim(), config_hash(cfg), fs::path(cfg.output.directory), log, {}};
  fs::create_directories(c.dir);
  log << "manifold-heat " << to_string(cfg.experiment.kind) << " on " << c.model.geo().name() << " (d=" << c.model.dim()
      << "), config " << c.hash << ", seed " << cfg.numeric.seed << "\n";
  switch (cfg.experiment.kind) {
    case ExperimentKind::simulate: run_simulate(c); break;
    case ExperimentKind::gradient: run_gradient(c); break;
    case ExperimentKind::kato: run_kato(c); break;
    case ExperimentKind::coupling: run_coupling(c); break;
    case ExperimentKind::bochner: run_bochner(c); break;
    case ExperimentKind::schrodinger: run_schrodinger(c); break;
    case ExperimentKind::report_all:
      run_simulate(c);
      run_gradient(c);
      run_kato(c);
      run_coupling(c);
      run_bochner(c);
      run_schrodinger(c);
      break;
  }
  json summary = c.header(to_string(cfg.experiment.kind));
  json checks = json::array();
  for (const auto& ch : c.result.checks) checks.push_back({{"name", ch.name}, {"pass", ch.pass}, {"detail", ch.detail}});
  summary["checks"] = checks;
  summary["pass"] = c.result.pass();
  c.write_json("summary.json", summary);
  return std::move(c.result);
}

}  // namespace mheat
