#pragma once

#include <Eigen/Dense>
#include <array>
#include <cassert>

namespace mheat {

/// Largest manifold dimension supported by the fixed-capacity types below.
/// Vectors and matrices are stack-allocated so the per-step path kernel never
/// touches the heap.
inline constexpr int kMaxDim = 4;
inline constexpr int kMaxAmbient = kMaxDim + 1;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using AmbientVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using AmbientMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxDim>;

/// Rank-3 array indexed as (k, i, j); used for Christoffel symbols
/// Γ^k_{ij} and for metric derivatives ∂_k g_{ij}.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int dim) : dim_(dim) { data_.fill(0.0); }

  int dim() const noexcept { return dim_; }
  double& operator()(int k, int i, int j) {
    assert(k < dim_ && i < dim_ && j < dim_);
    return data_[(k * kMaxDim + i) * kMaxDim + j];
  }
  double operator()(int k, int i, int j) const {
    assert(k < dim_ && i < dim_ && j < dim_);
    return data_[(k * kMaxDim + i) * kMaxDim + j];
  }

  /// Γ^k_{ij} a^i b^j for every k.
  Vec contract(const Vec& a, const Vec& b) const {
    Vec out = Vec::Zero(dim_);
    for (int k = 0; k < dim_; ++k) {
      double s = 0.0;
      for (int i = 0; i < dim_; ++i) {
        double row = 0.0;
        for (int j = 0; j < dim_; ++j) row += (*this)(k, i, j) * b[j];
        s += a[i] * row;
      }
      out[k] = s;
    }
    return out;
  }

  /// (Γ^k_{ij} a^i) as a matrix acting on the j index.
  Mat contract_first(const Vec& a) const {
    Mat out = Mat::Zero(dim_, dim_);
    for (int k = 0; k < dim_; ++k)
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) out(k, j) += (*this)(k, i, j) * a[i];
    return out;
  }

 private:
  int dim_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

}  // namespace mheat
