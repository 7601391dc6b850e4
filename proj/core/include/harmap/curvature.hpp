#pragma once

#include <vector>

#include "harmap/manifold.hpp"
#include "harmap/tensor.hpp"

namespace harmap {

// Pointwise connection and curvature data. ricci is the g^{ik} R_ijkl trace
// of riemann by construction; scalar traces ricci once more.
struct CurvatureBundle {
  ChartPoint point;
  std::vector<Matrix> christoffel;  // christoffel[k](i,j) = Gamma^k_ij
  Tensor4 riemann;                  // R_ijkl, all four indices down
  Matrix ricci;
  double scalar = 0.0;
};

// A tangent 2-plane given by two spanning vectors at a point.
struct PlaneSpec {
  Vector X, Y;
};

struct SecBoundReport {
  double bound = 0.0;           // the K being tested
  double max_sectional = 0.0;   // largest sampled value
  bool pass = false;            // max_sectional <= bound + tol
  int points_sampled = 0;
  int planes_sampled = 0;
  int degenerate_skipped = 0;
  double tol = 0.0;
};

// Gram determinants below this fraction of g(X,X) g(Y,Y) mark a plane
// as degenerate.
inline constexpr double kPlaneDegeneracyFactor = 1e-12;

// Levi-Civita connection coefficients, Gamma^k_ij symmetric in i,j.
std::vector<Matrix> christoffel(const ManifoldModel& mf, const ChartPoint& p);

// Curvature tensor with all indices lowered, normalized so that a constant
// curvature kappa metric gives R_ijkl = kappa (g_ik g_jl - g_il g_jk);
// round spheres have positive sectional values.
Tensor4 riemann(const ManifoldModel& mf, const ChartPoint& p);

// ricci_jl = g^{ik} R_ijkl; equals (m-1) kappa g for constant curvature kappa.
Matrix ricci_from_riemann(const Tensor4& riem, const Matrix& g_inv);
Matrix ricci(const ManifoldModel& mf, const ChartPoint& p);

double scalar_curvature(const ManifoldModel& mf, const ChartPoint& p);

CurvatureBundle curvature_bundle(const ManifoldModel& mf, const ChartPoint& p);

// sec = R(X,Y,X,Y) / (g(X,X) g(Y,Y) - g(X,Y)^2); throws DegeneratePlaneError
// when the Gram determinant falls under the degeneracy threshold.
double sectional_from_tensor(const Tensor4& riem, const Matrix& g, const Vector& X,
                             const Vector& Y);
double sectional(const ManifoldModel& mf, const ChartPoint& p, const PlaneSpec& plane);

// Samples random points and random 2-planes and compares the largest
// sectional value found against the bound K.
SecBoundReport sec_upper_bound_check(const ManifoldModel& mf, double K,
                                     int sample_points, int planes_per_point,
                                     Rng& rng, double tol = 1e-8);

}  // namespace harmap
