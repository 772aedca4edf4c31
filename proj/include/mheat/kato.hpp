#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mheat/diffusion.hpp"

namespace mheat {

enum class KatoVerdict { kato, not_kato_at_resolution, inconclusive };
const char* to_string(KatoVerdict v);

/// Anchor-max of ∫_0^t E[|v(X_r)| 1_{r<ζ}] dr.
struct KatoQuantity {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t argmax = 0;
};

/// Kato quantity at every time of `t_grid` (one simulation per anchor).
std::vector<KatoQuantity> kato_curve(const ManifoldModel& m, const ScalarField& v,
                                     const std::vector<double>& t_grid,
                                     const std::vector<Point>& anchors, const SimConfig& cfg);

KatoQuantity kato_quantity(const ManifoldModel& m, const ScalarField& v, double t,
                           const std::vector<Point>& anchors, const SimConfig& cfg);

struct KhasminskiiFit {
  double delta = 2.0;
  double c = 0.0;
  bool pass = false;
  std::vector<double> t;
  /// Anchor-sup of E[exp(∫_0^t |v|) 1_{t<ζ}] at each t.
  std::vector<double> sup_moment;
};

inline constexpr double kKhasminskiiCMax = 1e3;

/// Smallest C (bisection to 1e-3 on [0, 10³]) with sup moment ≤ δ e^{Ct} on
/// the whole grid.
KhasminskiiFit khasminskii_fit(const ManifoldModel& m, const ScalarField& v, double delta,
                               const std::vector<double>& t_grid,
                               const std::vector<Point>& anchors, const SimConfig& cfg);

struct KatoReport {
  std::vector<double> t_grid;         // decreasing
  std::vector<double> sup_estimates;  // aligned with t_grid
  std::vector<double> sup_errors;
  /// Least-squares slope through the origin on the three smallest t.
  double slope_fit = 0.0;
  /// Log-log slope on the three smallest t.
  double decay_exponent = 0.0;
  KhasminskiiFit khasminskii;
  KatoVerdict verdict = KatoVerdict::inconclusive;
  std::size_t n_anchors = 0;
  std::string anchor_note;
};

KatoReport kato_report(const ManifoldModel& m, const ScalarField& v, double delta,
                       const std::vector<double>& t_grid, const std::vector<Point>& anchors,
                       const SimConfig& cfg);

/// Split of |v| into a part above λ (tested for finite L^p norm) and a part
/// bounded by λ.
struct SplitReport {
  bool pass = false;
  double lambda = 0.0;
  double lp_norm = 0.0;            // of the part above λ, finest grid
  bool bounded_candidate = false;  // λ = sup|v| was admissible
  int thresholds_tried = 0;
};

/// L^p of |v|·1_{|v|>λ} against the radial density `weight` on
/// (0, r_max), with grid refinement at both ends.
SplitReport radial_split(const std::function<double(double)>& v, const std::function<double(double)>& weight,
                         double p, double r_max);

struct DecompositionReport {
  SplitReport split;
  double xi = 0.0;  // 1 / m[B_1]
  bool pass = false;
};

/// Is |v| in L^p_Ξ + L^∞ for a radial v on a rotationally symmetric model?
/// v is sampled along the first coordinate ray from the origin.
DecompositionReport decomposition_check(const ManifoldModel& m, const ScalarField& v, double p);

struct ExaReport {
  bool a = false;
  bool b = false;
  bool c = false;
  bool lp = false;
  bool overall = false;
  double a_value = 0.0, a_slope = 0.0, a_curvature = 0.0;  // ψ₀(0), ψ₀'(0), ψ₀''(0)
  double b_min_full = 0.0;   // min of the radial expression on [1e-3, 1e3]
  double b_min_inner = 0.0;  // min on [1e-2, 1e2]
  /// The radial expression fails b while the Ricci curvature of the model
  /// metric built from ψ₀ is bounded below on the same grid.
  bool b_discrepancy = false;
  double c_constant = 0.0;
  SplitReport lp_split;
  int skipped_points = 0;
};

ExaReport example_exa_check(const RadialProfile& psi, const RadialProfile& psi0, int d, double p);

}  // namespace mheat
