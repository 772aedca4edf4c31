#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace mheat {

/// Welford mean/variance accumulator with Chan et al. pairwise merge.
class RunningStats {
 public:
  void add(double x) noexcept;
  void merge(const RunningStats& other) noexcept;

  std::int64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;
  double std_error() const noexcept;

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Monte Carlo estimate of a scalar functional.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
};

/// Monte Carlo estimate of a vector functional (componentwise errors).
struct VectorEstimate {
  Eigen::VectorXd value;
  Eigen::VectorXd std_error;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
};

Estimate make_estimate(const RunningStats& s, std::uint64_t seed, double dt);

/// sqrt(a² + b²), the error of a difference of independent estimates.
double combined_error(double a, double b) noexcept;

}  // namespace mheat
