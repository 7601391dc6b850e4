#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace harmap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Dense (0,4) tensor on an n-dimensional space, row-major in (i,j,k,l).
// Small n only; everything is O(n^4) and kept simple on purpose.
class Tensor4 {
public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int dim() const { return n_; }

  double& operator()(int i, int j, int k, int l) { return v_[idx(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return v_[idx(i, j, k, l)]; }

  Tensor4& operator+=(const Tensor4& o) {
    assert(n_ == o.n_);
    for (std::size_t p = 0; p < v_.size(); ++p) v_[p] += o.v_[p];
    return *this;
  }
  Tensor4& operator-=(const Tensor4& o) {
    assert(n_ == o.n_);
    for (std::size_t p = 0; p < v_.size(); ++p) v_[p] -= o.v_[p];
    return *this;
  }
  Tensor4& operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  // Full contraction with four vectors, slots in index order.
  double contract(const Vector& a, const Vector& b, const Vector& c, const Vector& d) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < n_; ++l) s += (*this)(i, j, k, l) * a(i) * b(j) * c(k) * d(l);
    return s;
  }

private:
  std::size_t idx(int i, int j, int k, int l) const {
    assert(i >= 0 && i < n_ && j >= 0 && j < n_ && k >= 0 && k < n_ && l >= 0 && l < n_);
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }

  int n_ = 0;
  std::vector<double> v_;
};

// Constant-curvature model tensor: kappa * (g_ik g_jl - g_il g_jk).
// With it, every 2-plane has sectional value exactly kappa.
Tensor4 constant_curvature_tensor(int n, double kappa, const Matrix& g);
inline Tensor4 constant_curvature_tensor(int n, double kappa) {
  return constant_curvature_tensor(n, kappa, Matrix::Identity(n, n));
}

// Largest violation of the curvature symmetries
//   R_ijkl = -R_jikl = -R_ijlk = R_klij,  R_ijkl + R_iklj + R_iljk = 0
// relative to the tensor's own magnitude.
double curvature_symmetry_violation(const Tensor4& r);

}  // namespace harmap
