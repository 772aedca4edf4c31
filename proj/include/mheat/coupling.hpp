#pragma once

#include <iosfwd>
#include <vector>

#include "mheat/diffusion.hpp"

namespace mheat {

/// κ(u, v): average of k along the minimizing geodesic, 16-node
/// Gauss–Legendre. κ(u, u) = k(u).
double kappa_average(const ManifoldModel& m, const ScalarField& k, const Point& u, const Point& v);

struct CouplingSample {
  std::vector<double> times;
  std::vector<Point> points_x;
  std::vector<Point> points_y;
  std::vector<double> distances;
  /// ∫_0^t κ(X_r, Y_r) dr, left-endpoint rule.
  std::vector<double> kappa_integrals;
  std::vector<bool> coupled;
  double coupling_time = kNever;
  double merge_radius = 0.0;
  /// Steps where the pair sat on the cut locus and moved independently.
  int cut_locus_events = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t pair_id = 0;
};

/// Merge radius 10√dt, capped at a tenth of the injectivity radius on the
/// sphere.
double merge_radius(const ManifoldModel& m, double dt);

/// Coupling by parallel displacement: Y is driven by the increments of X
/// transported along the minimizing geodesic from X to Y. Paths are glued
/// once ρ ≤ merge_radius. `k` enters only the κ integral.
CouplingSample simulate_parallel_coupling(const ManifoldModel& m, const Point& x, const Point& y,
                                          const SimConfig& cfg, std::uint64_t pair_id,
                                          const ScalarField& k);
CouplingSample simulate_parallel_coupling(const ManifoldModel& m, const Point& x, const Point& y,
                                          const SimConfig& cfg, std::uint64_t pair_id = 0);

/// CSV columns t, rho, kappa_cum, coupled.
void write_coupling_csv(std::ostream& os, const CouplingSample& s);

struct IndexFormBound {
  double ricci_bound = 0.0;  // −∫_0^ρ Ric(γ̇, γ̇) ds, unit speed
  double kappa_bound = 0.0;  // −ρ κ(u, v)
  bool consistent = false;   // ricci_bound ≤ kappa_bound + 1e-8
};

IndexFormBound index_form_ricci_bound(const ManifoldModel& m, const ScalarField& k, const Point& u,
                                      const Point& v);

/// Default factor c in the tolerance 1 + c √(dt (t − s)).
inline constexpr double kContractionTolerance = 3.0;

struct ContractionReport {
  std::int64_t pairs = 0;  // grid pairs s < t checked before merging
  std::int64_t violations = 0;
  double worst_ratio = 0.0;  // max ρ_t e^{(K_t − K_s)/2} / (ρ_s · tolerance)
  double dt = 0.0;
  int couplings = 0;
  int cut_locus_events = 0;

  double violation_fraction() const { return pairs ? static_cast<double>(violations) / pairs : 0.0; }
  void merge(const ContractionReport& o);
};

/// ρ_t ≤ e^{−(K_t − K_s)/2} ρ_s (1 + c √(dt (t − s))) for every grid pair
/// s < t with ρ_s > 0; pairs inside the merged segment hold trivially and
/// are not counted.
ContractionReport verify_pathwise_contraction(const CouplingSample& s,
                                              double c_tol = kContractionTolerance);

/// `n_pairs` couplings from (x, y), pair ids 0..n_pairs−1, checked pathwise.
ContractionReport contraction_ensemble(const ManifoldModel& m, const ScalarField& k, const Point& x,
                                       const Point& y, const SimConfig& cfg,
                                       double c_tol = kContractionTolerance);

/// {"pairs", "violations", "worst_ratio", "dt", ...} as a JSON object.
std::string to_json(const ContractionReport& r);

}  // namespace mheat
