#include "mheat/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mheat/parallel.hpp"

namespace mheat {

namespace {

constexpr int kMaxRefinement = 4;
constexpr std::uint64_t kBridgeTag = 0xB51D6E;
constexpr std::uint64_t kExitTag = 0xE817;

// σ = U⁻¹ for the Cholesky factor g = UᵀU, by back substitution.
Mat metric_sqrt_inverse(const Mat& g) {
  const int d = static_cast<int>(g.rows());
  const Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
  const Mat u = llt.matrixU();
  Mat inv = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    inv(j, j) = 1.0 / u(j, j);
    for (int i = j - 1; i >= 0; --i) {
      double s = 0.0;
      for (int k = i + 1; k <= j; ++k) s += u(i, k) * inv(k, j);
      inv(i, j) = -s / u(i, i);
    }
  }
  return inv;
}

}  // namespace

int SimConfig::steps() const {
  if (horizon <= 0.0) return 0;
  return std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-9)));
}

double SimConfig::step_size() const {
  const int n = steps();
  return n > 0 ? horizon / n : dt;
}

SimConfig SimConfig::with_horizon(double t) const {
  SimConfig c = *this;
  c.horizon = t;
  if (t > 0.0 && c.dt > t) c.dt = t;
  return c;
}

void validate(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(cfg.horizon >= 0.0)) throw ConfigError("horizon must be nonnegative");
  if (cfg.horizon > 0.0 && cfg.dt > cfg.horizon * (1.0 + 1e-12))
    throw ConfigError("dt exceeds horizon");
  if (cfg.n_paths < 1) throw ConfigError("path count must be at least 1");
  if (!(cfg.explosion_radius > 0.0)) throw ConfigError("explosion radius must be positive");
}

// PathStepper ------------------------------------------------------------------------

PathStepper::PathStepper(const ManifoldModel& m, const Point& x, const SimConfig& cfg,
                         std::uint64_t path_id, TrackOptions opts)
    : model_(&m),
      dt_(cfg.step_size()),
      explosion_radius_(cfg.explosion_radius),
      opts_(opts),
      noise_(StreamId{cfg.seed, path_id}),
      bridge_id_(StreamId{cfg.seed, path_id}.child(kBridgeTag)) {
  init(x, opts);
}

PathStepper::PathStepper(const ManifoldModel& m, const Point& x, double dt, TrackOptions opts,
                         double explosion_radius)
    : model_(&m),
      dt_(dt),
      explosion_radius_(explosion_radius),
      opts_(opts),
      noise_(StreamId{}),
      bridge_id_(StreamId{}.child(kBridgeTag)) {
  init(x, opts);
}

void PathStepper::init(const Point& x, TrackOptions opts) {
  const Geometry& geo = model_->geo();
  if (!geo.in_domain(x)) throw DomainError("start point outside chart domain");
  if (opts.q_process) opts_.frames = true;
  flat_ = geo.kind() == ModelKind::euclidean && !model_->weight;
  const int d = geo.dim();
  x_ = x;
  frame_ = Mat::Identity(d, d);
  if (!flat_) orthonormalize(geo.metric(x), frame_);
  q_ = Mat::Identity(d, d);
  dW_ = Vec::Zero(d);
  bel_ = Vec::Zero(d);
}

Mat PathStepper::sigma() const {
  const int d = model_->dim();
  if (flat_) return Mat::Identity(d, d);
  return metric_sqrt_inverse(model_->geo().metric(x_));
}

Vec PathStepper::draw_increment() {
  const int d = model_->dim();
  const double s = std::sqrt(dt_);
  Vec dB(d);
  for (int i = 0; i < d; ++i) dB[i] = s * noise_.normal();
  return dB;
}

bool PathStepper::adopt_chart(int chart) {
  if (chart == x_.chart) return true;
  if (flat_) return false;
  try {
    Mat jac;
    Point next = model_->geo().to_chart(x_, chart, &jac);
    frame_ = jac * frame_;
    x_ = std::move(next);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

bool PathStepper::step() {
  if (!alive_) return false;
  const Vec dB = draw_increment();
  RandomStream bridge(bridge_id_.child(static_cast<std::uint64_t>(n_)));
  return step_with(dB, bridge);
}

bool PathStepper::step_with(const Vec& dB, RandomStream& bridge) {
  if (!alive_) return false;
  dW_.setZero();
  bool ok = false;
  try {
    ok = advance(dB, dt_, bridge, 0);
  } catch (const StencilError&) {
  } catch (const DomainError&) {
  }
  ++n_;
  if (!ok) {
    kill();
    return false;
  }
  const Geometry& geo = model_->geo();
  if (geo.kind() != ModelKind::sphere && geo.radial_coordinate(x_) > explosion_radius_) {
    kill();
    return false;
  }
  return true;
}

void PathStepper::kill() {
  alive_ = false;
  lifetime_ = time();
}

bool PathStepper::advance(const Vec& dB, double h, RandomStream& bridge, int depth) {
  const Geometry& geo = model_->geo();
  const int d = geo.dim();

  if (flat_) {
    Point next(x_.x + dB, x_.chart);
    if (!next.x.allFinite()) return false;
    x_ = std::move(next);
    dW_ += dB;
    bel_ += dB;
    return true;
  }

  const Mat g = geo.metric(x_);
  const Mat sig = metric_sqrt_inverse(g);
  const Tensor3 gamma = geo.christoffel(x_);
  const Mat ginv = sig * sig.transpose();

  // Itô drift −½ g^{ij} Γ^k_{ij}, plus −g^{kl} ∂_l Φ when weighted.
  Vec drift = Vec::Zero(d);
  for (int k = 0; k < d; ++k) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += ginv(i, j) * gamma(k, i, j);
    drift[k] = -0.5 * s;
  }
  if (model_->weight) drift -= ginv * model_->weight->gradient(x_);

  const Vec mart = sig * dB;
  const Vec dx = mart + h * drift;
  Point next(x_.x + dx, x_.chart);

  if (!geo.in_domain(next)) {
    if (depth >= kMaxRefinement) return false;
    // Brownian bridge split of the increment into two half steps.
    Vec first(d);
    const double s = std::sqrt(0.25 * h);
    for (int i = 0; i < d; ++i) first[i] = 0.5 * dB[i] + s * bridge.normal();
    return advance(first, 0.5 * h, bridge, depth + 1) &&
           advance(dB - first, 0.5 * h, bridge, depth + 1);
  }

  const Vec dW = frame_.transpose() * (g * mart);
  if (opts_.q_process) {
    const Mat ric = fast_ricci(*model_, x_);
    const Mat pulled = frame_.transpose() * ric * frame_;
    bel_ += q_.transpose() * dW;
    q_ = q_ * q_step_factor(pulled, h);
  }
  if (opts_.frames) {
    // Heun step for the Stratonovich transport dF = −Γ(dX, F).
    const Mat a1 = gamma.contract_first(dx);
    const Mat predictor = frame_ - a1 * frame_;
    const Mat a2 = geo.christoffel(next).contract_first(dx);
    frame_ = frame_ - 0.5 * (a1 * frame_ + a2 * predictor);
    orthonormalize(geo.metric(next), frame_);
  }
  dW_ += dW;
  if (!opts_.q_process) bel_ += dW;

  if (geo.wants_chart_switch(next)) {
    Mat jac;
    next = geo.to_chart(next, geo.preferred_chart(next), &jac);
    frame_ = jac * frame_;
  }
  x_ = std::move(next);
  return true;
}

Mat q_step_factor(const Mat& A, double h) {
  const Eigen::SelfAdjointEigenSolver<Mat> eig(A);
  const Vec scaled = (-0.5 * h * eig.eigenvalues().array()).exp().matrix();
  return eig.eigenvectors() * scaled.asDiagonal() * eig.eigenvectors().transpose();
}

// Path samples -------------------------------------------------------------------------

PathSample simulate_bm(const ManifoldModel& m, const Point& x, const SimConfig& cfg,
                       std::uint64_t path_id, TrackOptions opts) {
  validate(cfg);
  PathStepper stepper(m, x, cfg, path_id, opts);
  const int n = cfg.steps();
  const double h = cfg.step_size();
  PathSample s;
  s.seed = cfg.seed;
  s.path_id = path_id;
  s.times.reserve(n + 1);
  for (int i = 0; i <= n; ++i) s.times.push_back(i * h);
  auto record = [&] {
    s.points.push_back(stepper.point());
    s.frames.push_back(stepper.frame());
    if (opts.q_process) s.q_mats.push_back(stepper.q());
  };
  record();
  for (int i = 0; i < n; ++i) {
    if (!stepper.step()) break;
    s.anti_dev.push_back(stepper.last_increment());
    record();
  }
  s.alive = stepper.alive();
  s.lifetime = stepper.lifetime();
  return s;
}

Vec stochastic_parallel_transport(const ManifoldModel& m, const PathSample& sample, const Vec& v,
                                  std::optional<int> step) {
  const int idx = step.value_or(static_cast<int>(sample.times.size()) - 1);
  if (idx < 0 || idx >= sample.alive_steps())
    throw DeadPathError("path is not alive at the requested step");
  const Mat& f0 = sample.frames.front();
  const Vec in_frame = f0.transpose() * (m.geo().metric(sample.points.front()) * v);
  return sample.frames[idx] * in_frame;
}

std::vector<Mat> integrate_Q(const ManifoldModel& m, const PathSample& sample,
                             std::optional<int> until_step) {
  const int until = until_step.value_or(static_cast<int>(sample.times.size()) - 1);
  if (until >= sample.alive_steps()) throw DeadPathError("path died before the requested step");
  const int d = m.dim();
  std::vector<Mat> q;
  q.reserve(until + 1);
  q.push_back(Mat::Identity(d, d));
  for (int n = 0; n < until; ++n) {
    const double h = sample.times[n + 1] - sample.times[n];
    const Mat& f = sample.frames[n];
    const Mat pulled = f.transpose() * fast_ricci(m, sample.points[n]) * f;
    q.push_back(q.back() * q_step_factor(pulled, h));
  }
  return q;
}

// Ensemble statistics --------------------------------------------------------------------

Estimate survival_probability(const ManifoldModel& m, const Point& x, double t,
                              const SimConfig& cfg) {
  validate(cfg);
  if (t > cfg.horizon * (1.0 + 1e-12)) throw ConfigError("t exceeds horizon");
  if (t <= 0.0) return {1.0, 0.0, cfg.n_paths, cfg.seed, cfg.dt};
  const SimConfig c = cfg.with_horizon(t);
  const int n = c.steps();
  const StatBank bank = run_ensemble(c.n_paths, 1, c.workers, [&](std::int64_t id, StatBank& acc) {
    PathStepper p(m, x, c, static_cast<std::uint64_t>(id), {false, false});
    for (int i = 0; i < n && p.step(); ++i) {
    }
    acc[0].add(p.alive() ? 1.0 : 0.0);
  });
  return make_estimate(bank[0], c.seed, c.step_size());
}

ExitTimeTable exit_time_tail(const ManifoldModel& m, const Point& x, double eps,
                             const std::vector<double>& t_grid, const SimConfig& cfg) {
  validate(cfg);
  if (!(eps > 0.0)) throw ConfigError("exit radius must be positive");
  if (t_grid.empty()) throw ConfigError("exit-time grid is empty");
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  const SimConfig c = cfg.with_horizon(t_max);
  const int n = c.steps();
  const double h = c.step_size();
  const Geometry& geo = m.geo();
  const int nt = static_cast<int>(t_grid.size());

  const StatBank bank = run_ensemble(c.n_paths, nt, c.workers, [&](std::int64_t id, StatBank& acc) {
    PathStepper p(m, x, c, static_cast<std::uint64_t>(id), {false, false});
    // Exits between grid points are sampled from the Brownian-bridge
    // crossing probability of the nearest boundary, exp(−2 a b / h).
    RandomStream crossing(StreamId{c.seed, static_cast<std::uint64_t>(id)}.child(kExitTag));
    double tau = kNever;
    double r_prev = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!p.step()) {
        tau = p.lifetime();
        break;
      }
      const double r = geo.distance(x, p.point());
      const double u = crossing.uniform();
      if (r >= eps || u < std::exp(-2.0 * (eps - r_prev) * (eps - r) / h)) {
        tau = p.time();
        break;
      }
      r_prev = r;
    }
    for (int k = 0; k < nt; ++k) acc[k].add(tau <= t_grid[k] + 1e-12 ? 1.0 : 0.0);
  });

  ExitTimeTable table;
  table.n_paths = c.n_paths;
  table.t = t_grid;
  bool any = false;
  for (int k = 0; k < nt; ++k) {
    table.probability.push_back(bank[k].mean());
    table.std_error.push_back(bank[k].std_error());
    any = any || bank[k].mean() > 0.0;
  }
  if (!any) throw InsufficientSamples("no exits observed on the time grid");

  std::vector<int> order(nt);
  for (int k = 0; k < nt; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return t_grid[a] < t_grid[b]; });
  double num = 0.0, den = 0.0;
  int used = 0;
  for (int k : order) {
    const double prob = table.probability[k];
    if (prob <= 0.0 || prob >= 1.0) continue;
    num += -std::log(prob) / t_grid[k];
    den += 1.0 / (t_grid[k] * t_grid[k]);
    if (++used == 3) break;
  }
  table.c_fit = den > 0.0 ? num / den : 0.0;
  return table;
}

void write_path_csv(std::ostream& os, const PathSample& s) {
  const int d = s.points.empty() ? 0 : s.points.front().dim();
  const bool with_q = !s.q_mats.empty();
  os << "t";
  for (int i = 0; i < d; ++i) os << ",x_" << i + 1;
  os << ",alive";
  if (with_q)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) os << ",q_" << i + 1 << j + 1;
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t n = 0; n < s.times.size(); ++n) {
    const bool alive = static_cast<int>(n) < s.alive_steps();
    put(s.times[n]);
    for (int i = 0; i < d; ++i) {
      os << ',';
      put(alive ? s.points[n].x[i] : std::nan(""));
    }
    os << ',' << (alive ? 1 : 0);
    if (with_q)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          os << ',';
          put(alive ? s.q_mats[n](i, j) : std::nan(""));
        }
    os << '\n';
  }
}

}  // namespace mheat
