#pragma once

// Shared map fixtures for the test suites.

#include <cmath>
#include <numbers>
#include <vector>

#include "harmap/manifold.hpp"
#include "harmap/map_model.hpp"

namespace fixtures {

using harmap::ChartPoint;
using harmap::ManifoldModel;
using harmap::MapModel;
using harmap::Matrix;
using harmap::Vector;

inline constexpr double kTau = 2.0 * std::numbers::pi;

// torus^2 -> sphere^2(r) with image well inside chart 0; analytic
// derivatives included.
inline MapModel torus_to_sphere(double r) {
  auto src = ManifoldModel::flat_torus(2);
  auto tgt = ManifoldModel::round_sphere(2, r);
  const double amp = 0.3 * r;
  auto f = [amp](const ChartPoint& p) {
    Vector y(2);
    y << amp * std::sin(kTau * p.x[0]), amp * std::cos(kTau * p.x[1]);
    return ChartPoint(0, y);
  };
  auto df = [amp](const ChartPoint& p) -> Matrix {
    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = amp * kTau * std::cos(kTau * p.x[0]);
    D(1, 1) = -amp * kTau * std::sin(kTau * p.x[1]);
    return D;
  };
  auto ddf = [amp](const ChartPoint& p) {
    std::vector<Matrix> H(2, Matrix::Zero(2, 2));
    H[0](0, 0) = -amp * kTau * kTau * std::sin(kTau * p.x[0]);
    H[1](1, 1) = -amp * kTau * kTau * std::cos(kTau * p.x[1]);
    return H;
  };
  return MapModel::custom(src, tgt, f, df, ddf);
}

// The identity of the round m-sphere written across the two antipodal
// charts: chart 0 coordinates in, chart 1 coordinates out. The chart
// expression is the inversion x -> r^2 x / |x|^2; as a map of manifolds it
// is the identity, hence harmonic, isometric, and totally geodesic. Unlike
// the same-chart identity its chart expression is genuinely nonlinear, so
// it exercises every derivative and chart-transition code path.
inline MapModel inversion_identity(int dim, double r) {
  auto sph = ManifoldModel::round_sphere(dim, r);
  const double r2 = r * r;
  const int m = dim;
  auto f = [r2](const ChartPoint& p) {
    const double s = p.x.squaredNorm();
    return ChartPoint(1, (r2 / s) * p.x);
  };
  auto df = [r2, m](const ChartPoint& p) -> Matrix {
    const double s = p.x.squaredNorm();
    Matrix D(m, m);
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < m; ++i)
        D(a, i) = r2 * (((a == i) ? 1.0 : 0.0) / s - 2.0 * p.x[a] * p.x[i] / (s * s));
    return D;
  };
  auto ddf = [r2, m](const ChartPoint& p) {
    const double s = p.x.squaredNorm();
    std::vector<Matrix> H(m, Matrix::Zero(m, m));
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const double dai = (a == i) ? 1.0 : 0.0;
          const double daj = (a == j) ? 1.0 : 0.0;
          const double dij = (i == j) ? 1.0 : 0.0;
          H[a](i, j) =
              r2 * (-2.0 * (dai * p.x[j] + daj * p.x[i] + dij * p.x[a]) / (s * s) +
                    8.0 * p.x[a] * p.x[i] * p.x[j] / (s * s * s));
        }
    return H;
  };
  return MapModel::custom(sph, sph, f, df, ddf);
}

}  // namespace fixtures
