#pragma once

#include <iosfwd>
#include <vector>

#include "mheat/geometry.hpp"

namespace mheat {

/// Central-difference differential operators in chart coordinates, one step
/// h shared by every operator. Stencil points leaving the chart domain raise
/// StencilError. With a weight Φ the Laplacian is the drift Laplacian
/// Δ − 2⟨∇Φ, ∇·⟩.
class DiffOpStencil {
 public:
  DiffOpStencil(const ManifoldModel& m, double h = 1e-3, bool weighted = true);

  double h() const noexcept { return h_; }

  /// ∂_i f.
  Vec partials(const ScalarField& f, const Point& p) const;
  /// ∂_i ∂_j f.
  Mat second_partials(const ScalarField& f, const Point& p) const;
  /// Chart components g^{ij} ∂_j f.
  Vec gradient(const ScalarField& f, const Point& p) const;
  double gradient_norm_sq(const ScalarField& f, const Point& p) const;
  /// Covariant Hessian ∂_i∂_j f − Γ^k_{ij} ∂_k f.
  Mat hessian(const ScalarField& f, const Point& p) const;
  double laplacian(const ScalarField& f, const Point& p) const;

  /// |∇f|², |∇f| and Δf as scalar fields built on this stencil.
  ScalarField gradient_norm_sq_field(const ScalarField& f) const;
  ScalarField gradient_norm_field(const ScalarField& f) const;
  ScalarField laplacian_field(const ScalarField& f) const;

 private:
  Point shifted(const Point& p, int i, double s) const;
  Point shifted(const Point& p, int i, double si, int j, double sj) const;

  const ManifoldModel* model_;
  double h_;
  bool weighted_;
};

struct BochnerPoint {
  Point point;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // lhs − rhs
};

struct BochnerResidual {
  double max_residual = 0.0;
  std::vector<BochnerPoint> points;  // lhs: ½Δ|∇f|² − ⟨∇Δf, ∇f⟩, rhs: |Hess f|² + Ric(∇f, ∇f)
};

/// ½Δ|∇f|² − ⟨∇Δf, ∇f⟩ − |Hess f|² − Ric(∇f, ∇f) on `grid`; Bakry–Émery
/// Ricci and the drift Laplacian when the model is weighted.
BochnerResidual bochner_identity_residual(const ManifoldModel& m, const ScalarField& f,
                                          const std::vector<Point>& grid, double h = 1e-3);

inline constexpr double kGradientFloor = 1e-4;
inline constexpr double kL1BochnerTolerance = 1e-4;

struct L1BochnerReport {
  double min_slack = 0.0;
  std::size_t argmin = 0;  // index into points
  int violations = 0;      // slack < −tolerance
  int skipped = 0;         // below the gradient floor
  double tolerance = kL1BochnerTolerance;
  std::vector<BochnerPoint> points;  // lhs: Δ|∇f| − ⟨∇Δf, ∇f⟩/|∇f|, rhs: k|∇f|
};

/// L¹-Bochner inequality on the grid points with |∇f| above
/// kGradientFloor · max |∇f|. EmptyGridError when no point qualifies.
L1BochnerReport l1_bochner_check(const ManifoldModel& m, const ScalarField& f, const ScalarField& k,
                                 const std::vector<Point>& grid, double h = 1e-3,
                                 double tolerance = kL1BochnerTolerance);

/// CSV columns x1..xd, lhs, rhs, slack.
void write_bochner_csv(std::ostream& os, const std::vector<BochnerPoint>& points);

/// Tensor grid of n points per axis on the chart-0 box [lo, hi].
std::vector<Point> chart_grid(const Vec& lo, const Vec& hi, int n);

}  // namespace mheat
