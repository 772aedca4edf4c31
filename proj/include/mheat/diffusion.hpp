#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "mheat/geometry.hpp"
#include "mheat/rng.hpp"
#include "mheat/stats.hpp"

namespace mheat {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct SimConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  double explosion_radius = 1e6;
  std::uint64_t seed = 0;
  std::int64_t n_paths = 1000;
  int workers = 1;

  /// Grid with uniform steps of at most dt covering [0, horizon].
  int steps() const;
  double step_size() const;
  SimConfig with_horizon(double t) const;
};

/// Throws ConfigError unless dt > 0, horizon ≥ 0, dt ≤ horizon (when the
/// horizon is positive) and n_paths ≥ 1.
void validate(const SimConfig& cfg);

struct TrackOptions {
  bool frames = true;
  bool q_process = false;
};

/// One Euler–Maruyama path advanced step by step. Holds the state at the
/// current grid time; nothing is stored, so ensembles stream through it.
class PathStepper {
 public:
  PathStepper(const ManifoldModel& m, const Point& x, const SimConfig& cfg, std::uint64_t path_id,
              TrackOptions opts = {});
  /// Shared-noise construction: the caller supplies the Brownian increment.
  PathStepper(const ManifoldModel& m, const Point& x, double dt, TrackOptions opts,
              double explosion_radius = 1e6);

  /// Advances one step with fresh noise; returns whether the path is alive.
  bool step();
  /// Advances one step with chart-frame Brownian increment ΔB (σΔB is the
  /// martingale part of ΔX). `bridge` supplies randomness for substeps when
  /// the step has to be refined.
  bool step_with(const Vec& dB, RandomStream& bridge);

  bool alive() const noexcept { return alive_; }
  int step_index() const noexcept { return n_; }
  double time() const noexcept { return n_ * dt_; }
  double dt() const noexcept { return dt_; }
  /// Time of death, kNever while alive.
  double lifetime() const noexcept { return lifetime_; }

  const Point& point() const noexcept { return x_; }
  /// g-orthonormal frame at the current point (columns).
  const Mat& frame() const noexcept { return frame_; }
  const Mat& q() const noexcept { return q_; }
  /// Anti-development increment ΔW of the last step.
  const Vec& last_increment() const noexcept { return dW_; }
  /// Σ Q_sᵀ ΔW_s over all completed steps (Q at the left endpoint).
  const Vec& bel_accumulator() const noexcept { return bel_; }

  /// σ with σσᵀ = g⁻¹ at the current point.
  Mat sigma() const;
  /// Next chart-frame increment drawn from this path's stream.
  Vec draw_increment();
  /// Re-expresses the state in another chart. Used to keep paths that share
  /// noise in the same chart; returns false when the point is singular there.
  bool adopt_chart(int chart);

 private:
  void init(const Point& x, TrackOptions opts);
  bool advance(const Vec& dB, double h, RandomStream& bridge, int depth);
  void kill();

  const ManifoldModel* model_;
  double dt_;
  double explosion_radius_;
  TrackOptions opts_;
  RandomStream noise_;
  StreamId bridge_id_;
  bool flat_;

  Point x_;
  Mat frame_;
  Mat q_;
  Vec dW_;
  Vec bel_;
  int n_ = 0;
  bool alive_ = true;
  double lifetime_ = kNever;
};

struct PathSample {
  std::vector<double> times;   // full grid t_0..t_n
  std::vector<Point> points;   // alive steps only
  std::vector<Mat> frames;     // alive steps only
  std::vector<Vec> anti_dev;   // increment over [t_i, t_{i+1}] for alive steps
  std::vector<Mat> q_mats;     // alive steps; empty unless requested
  bool alive = true;
  double lifetime = kNever;
  std::uint64_t seed = 0;
  std::uint64_t path_id = 0;

  /// Number of grid points at which the path is alive.
  int alive_steps() const { return static_cast<int>(points.size()); }
};

PathSample simulate_bm(const ManifoldModel& m, const Point& x, const SimConfig& cfg,
                       std::uint64_t path_id, TrackOptions opts = {true, true});

/// ∥_t v = F_t F_0⁻¹ v at grid index `step` (default: last grid point).
Vec stochastic_parallel_transport(const ManifoldModel& m, const PathSample& sample, const Vec& v,
                                  std::optional<int> step = std::nullopt);

/// Q along the stored path, Q_{n+1} = Q_n exp(−½ F_nᵀ Ric F_n dt).
std::vector<Mat> integrate_Q(const ManifoldModel& m, const PathSample& sample,
                             std::optional<int> until_step = std::nullopt);

/// exp(−½ A h) for symmetric A.
Mat q_step_factor(const Mat& A, double h);

Estimate survival_probability(const ManifoldModel& m, const Point& x, double t,
                              const SimConfig& cfg);

struct ExitTimeTable {
  std::vector<double> t;
  std::vector<double> probability;
  std::vector<double> std_error;
  /// Fitted c in log P ≈ −c/t on the three smallest t with nonzero counts.
  double c_fit = 0.0;
  std::int64_t n_paths = 0;
};

/// P[τ_ε ≤ t] for the exit time τ_ε of the geodesic ball B_ε(x).
ExitTimeTable exit_time_tail(const ManifoldModel& m, const Point& x, double eps,
                             const std::vector<double>& t_grid, const SimConfig& cfg);

void write_path_csv(std::ostream& os, const PathSample& sample);

}  // namespace mheat
