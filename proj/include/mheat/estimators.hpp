#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mheat/diffusion.hpp"

namespace mheat {

/// P_t f(x) = E[f(X_t) 1_{t<ζ}].
Estimate heat_semigroup_mc(const ManifoldModel& m, const TestFunction& f, const Point& x, double t,
                           const SimConfig& cfg);

/// Frame components of ∇P_t f(x) from the Bismut–Elworthy–Li formula,
/// (1/t) E[f(X_t) Σ Q_sᵀ ΔW_s]. Component b is ⟨∇P_t f(x), F_0 e_b⟩.
VectorEstimate bel_gradient_frame(const ManifoldModel& m, const TestFunction& f, const Point& x,
                                  double t, const SimConfig& cfg);

/// ⟨∇P_t f(x), ξ⟩ with ξ in chart components at x.
Estimate bel_gradient(const ManifoldModel& m, const TestFunction& f, const Point& x, const Vec& xi,
                      double t, const SimConfig& cfg);

/// Heat semigroup and BEL directional derivatives for several functions and
/// directions from one ensemble. Result [i] holds the heat estimate of f_i
/// followed by one entry per direction.
std::vector<std::vector<Estimate>> bel_batch(const ManifoldModel& m,
                                             const std::vector<TestFunction>& fs, const Point& x,
                                             const std::vector<Vec>& directions, double t,
                                             const SimConfig& cfg);

/// Central difference (P_t f(exp(x, hξ)) − P_t f(exp(x, −hξ)))/(2h) with
/// common random numbers; the error is that of the per-path difference.
Estimate fd_directional_mc(const ManifoldModel& m, const TestFunction& f, const Point& x,
                           const Vec& xi, double h, double t, const SimConfig& cfg);

/// S_t f(x) = E[exp(−½∫_0^t k(X_r) dr) f(X_t) 1_{t<ζ}], trapezoid in time.
Estimate schrodinger_fk(const ManifoldModel& m, const TestFunction& f, const ScalarField& k,
                        const Point& x, double t, const SimConfig& cfg);

struct AnchorSup {
  double value = 0.0;
  std::size_t argmax = 0;
  std::vector<Estimate> per_anchor;
  /// The sup over M is replaced by a max over the anchors.
  bool lower_estimate = true;
};

/// C_t = sup_x E[exp(½∫_0^t k⁻(X_r) dr) 1_{t<ζ}] over the anchors.
AnchorSup exp_integrability_Ct(const ManifoldModel& m, const ScalarField& k, double t,
                               const std::vector<Point>& anchors, const SimConfig& cfg);

struct L1GradientCheck {
  double lhs = 0.0;
  double lhs_error = 0.0;
  double rhs = 0.0;
  double rhs_error = 0.0;
  bool pass = false;
};

/// |∇P_t f(x)| against E[exp(−½∫k) |∇f|(X_t) 1_{t<ζ}] from one ensemble.
L1GradientCheck l1_gradient_check(const ManifoldModel& m, const TestFunction& f,
                                  const ScalarField& k, const Point& x, double t,
                                  const SimConfig& cfg);

struct LipschitzBound {
  double bound = 0.0;  // √8 t^{−1/2} C_t
  AnchorSup ct;
};

LipschitzBound lipschitz_smoothing_bound(const ManifoldModel& m, const ScalarField& k, double t,
                                         const std::vector<Point>& anchors, const SimConfig& cfg);

struct QuotientCheck {
  int pairs = 0;
  int violations = 0;
  double worst_ratio = 0.0;  // max quotient / (bound ‖f‖_∞)
  double max_quotient = 0.0;
};

/// Difference quotients |P_t f(u) − P_t f(v)| / ρ(u, v) with common random
/// numbers. A pair violates when the quotient exceeds bound·‖f‖_∞ by more
/// than three standard errors of the quotient.
QuotientCheck lipschitz_quotient_check(const ManifoldModel& m, const TestFunction& f, double t,
                                       double bound,
                                       const std::vector<std::pair<Point, Point>>& pairs,
                                       const SimConfig& cfg);

/// Points with quadrature weights (√det g included) and a boundary mask.
struct QuadratureGrid {
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<bool> boundary;
};

/// Tensor trapezoid grid on the chart box [lo, hi] with n points per axis.
QuadratureGrid box_grid(const ManifoldModel& m, const Vec& lo, const Vec& hi, int n);

double grid_lp_norm(const QuadratureGrid& grid, const std::vector<double>& values, double p);

struct LpReport {
  double p = 2.0;
  double t = 0.0;
  double norm_f = 0.0;
  double norm_s = 0.0;
  double ratio = 0.0;        // ‖S_t f‖_p / ‖f‖_p
  double ratio_error = 0.0;
  double bound = 0.0;        // δ e^{Ct}
  bool pass = false;
  // Only filled when a vector field V is given.
  std::optional<double> e_ratio;      // ‖E_t^V f‖_p / ‖f‖_p
  std::optional<double> e_bound;      // √(8qt) C_q^{(p−1)/p} ‖V‖_∞
  std::optional<double> e_max_abs;    // max_x |E_t^V f(x)|
  bool e_pass = true;
};

struct LpInputs {
  double p = 2.0;
  double t = 1.0;
  double delta = 1.0;  // Khasminskii constants of the FK exponent
  double c = 0.0;
  /// Vector field V in chart components for the E_t^V operator.
  std::function<Vec(const Point&)> field;
  double field_sup = 0.0;
};

/// Grid L^p norms of S_t f (and E_t^V f) against the semigroup bounds.
LpReport lp_operator_check(const ManifoldModel& m, const ScalarField& k, const TestFunction& f,
                           const LpInputs& in, const QuadratureGrid& grid, const SimConfig& cfg);

/// `n` Halton points in the chart-0 box [lo, hi].
std::vector<Point> halton_anchors(const ManifoldModel& m, int n, const Vec& lo, const Vec& hi);
/// Default 32-point anchor set for a model (box documented per model kind).
std::vector<Point> default_anchors(const ManifoldModel& m, int n = 32);

}  // namespace mheat
