#include "harmap/curvature.hpp"

#include <cmath>
#include <limits>

#include "harmap/errors.hpp"

namespace harmap {

Tensor4 constant_curvature_tensor(int n, double kappa, const Matrix& g) {
  Tensor4 R(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          R(i, j, k, l) = kappa * (g(i, k) * g(j, l) - g(i, l) * g(j, k));
  return R;
}

double curvature_symmetry_violation(const Tensor4& R) {
  const int n = R.dim();
  const double scale = std::max(R.max_abs(), 1e-300);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double v = R(i, j, k, l);
          worst = std::max(worst, std::abs(v + R(j, i, k, l)));
          worst = std::max(worst, std::abs(v + R(i, j, l, k)));
          worst = std::max(worst, std::abs(v - R(k, l, i, j)));
          worst = std::max(worst,
                           std::abs(v + R(i, k, l, j) + R(i, l, j, k)));
        }
  return worst / scale;
}

std::vector<Matrix> christoffel(const ManifoldModel& mf, const ChartPoint& p) {
  const int m = mf.dim();
  const Matrix ginv = mf.metric_inverse(p);
  std::vector<Matrix> dg(m);
  for (int k = 0; k < m; ++k) dg[k] = mf.metric_d(p, k);

  std::vector<Matrix> gamma(m, Matrix::Zero(m, m));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        double s = 0.0;
        for (int n = 0; n < m; ++n)
          s += ginv(k, n) * (dg[i](j, n) + dg[j](i, n) - dg[n](i, j));
        gamma[k](i, j) = 0.5 * s;
        gamma[k](j, i) = gamma[k](i, j);
      }
  return gamma;
}

Tensor4 riemann(const ManifoldModel& mf, const ChartPoint& p) {
  const int m = mf.dim();
  const Matrix g = mf.metric(p);
  const Matrix ginv = mf.metric_inverse(p);

  std::vector<Matrix> dg(m);
  for (int k = 0; k < m; ++k) dg[k] = mf.metric_d(p, k);
  // dginv[i] = d_i g^{-1} = -g^{-1} (d_i g) g^{-1}
  std::vector<Matrix> dginv(m);
  for (int i = 0; i < m; ++i) dginv[i] = (-ginv * dg[i] * ginv).eval();

  std::vector<std::vector<Matrix>> ddg(m, std::vector<Matrix>(m));
  for (int k = 0; k < m; ++k)
    for (int l = k; l < m; ++l) {
      ddg[k][l] = mf.metric_dd(p, k, l);
      if (l != k) ddg[l][k] = ddg[k][l];
    }

  const std::vector<Matrix> gamma = christoffel(mf, p);

  // dgamma[i][k](j,l) = d_i Gamma^k_jl, from the Koszul contraction with the
  // product rule applied to g^{-1}.
  auto dgamma = [&](int i, int k, int j, int l) {
    double s = 0.0;
    for (int n = 0; n < m; ++n) {
      s += dginv[i](k, n) * (dg[j](l, n) + dg[l](j, n) - dg[n](j, l));
      s += ginv(k, n) * (ddg[i][j](l, n) + ddg[i][l](j, n) - ddg[i][n](j, l));
    }
    return 0.5 * s;
  };

  Tensor4 R(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (j == i) {
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < m; ++l) R(i, j, k, l) = 0.0;
        continue;
      }
      for (int l = 0; l < m; ++l) {
        for (int mm = 0; mm < m; ++mm) {
          // Rup = R^mm_{ijl}
          double rup = dgamma(i, mm, j, l) - dgamma(j, mm, i, l);
          for (int q = 0; q < m; ++q)
            rup += gamma[q](j, l) * gamma[mm](i, q) - gamma[q](i, l) * gamma[mm](j, q);
          for (int k = 0; k < m; ++k) R(i, j, k, l) += g(k, mm) * rup;
        }
      }
    }
  return R;
}

Matrix ricci_from_riemann(const Tensor4& riem, const Matrix& g_inv) {
  const int m = riem.dim();
  Matrix ric = Matrix::Zero(m, m);
  for (int j = 0; j < m; ++j)
    for (int l = 0; l < m; ++l) {
      double s = 0.0;
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k) s += g_inv(i, k) * riem(i, j, k, l);
      ric(j, l) = s;
    }
  return (0.5 * (ric + ric.transpose())).eval();
}

Matrix ricci(const ManifoldModel& mf, const ChartPoint& p) {
  return ricci_from_riemann(riemann(mf, p), mf.metric_inverse(p));
}

double scalar_curvature(const ManifoldModel& mf, const ChartPoint& p) {
  const Matrix ginv = mf.metric_inverse(p);
  return (ginv * ricci(mf, p)).trace();
}

CurvatureBundle curvature_bundle(const ManifoldModel& mf, const ChartPoint& p) {
  CurvatureBundle b;
  b.point = p;
  b.christoffel = christoffel(mf, p);
  b.riemann = riemann(mf, p);
  const Matrix ginv = mf.metric_inverse(p);
  b.ricci = ricci_from_riemann(b.riemann, ginv);
  b.scalar = (ginv * b.ricci).trace();
  return b;
}

double sectional_from_tensor(const Tensor4& riem, const Matrix& g, const Vector& X,
                             const Vector& Y) {
  const int m = riem.dim();
  if (X.size() != m || Y.size() != m)
    throw PreconditionError("sectional: vector dimension mismatch");
  const double gxx = X.dot(g * X);
  const double yy_raw = Y.dot(g * Y);
  if (!(gxx > 0.0) || !(yy_raw > 0.0))
    throw DegeneratePlaneError("sectional: spanning vector has no length");
  // The value only depends on span(X, Y), so project Y off X (twice, to
  // scrub the rounding left by the first pass) before forming the quotient.
  // A thin input plane otherwise amplifies cancellation in the numerator by
  // 1/sin^2 of the spanning angle.
  Vector yp = Y - (X.dot(g * Y) / gxx) * X;
  yp -= (X.dot(g * yp) / gxx) * X;
  const double gyy = yp.dot(g * yp);
  if (gyy < kPlaneDegeneracyFactor * yy_raw || !(gyy > 0.0))
    throw DegeneratePlaneError("sectional: spanning vectors are nearly parallel");
  const double gxy = X.dot(g * yp);
  const double gram = gxx * gyy - gxy * gxy;
  double num = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
          num += riem(i, j, k, l) * X[i] * yp[j] * X[k] * yp[l];
  return num / gram;
}

double sectional(const ManifoldModel& mf, const ChartPoint& p, const PlaneSpec& plane) {
  return sectional_from_tensor(riemann(mf, p), mf.metric(p), plane.X, plane.Y);
}

SecBoundReport sec_upper_bound_check(const ManifoldModel& mf, double K,
                                     int sample_points, int planes_per_point,
                                     Rng& rng, double tol) {
  if (sample_points < 1 || planes_per_point < 1)
    throw PreconditionError("sec_upper_bound_check: sampling budget must be positive");
  if (!std::isfinite(K))
    throw PreconditionError("sec_upper_bound_check: bound must be finite");
  const int m = mf.dim();
  std::normal_distribution<double> gauss(0.0, 1.0);

  SecBoundReport rep;
  rep.bound = K;
  rep.tol = tol;
  rep.max_sectional = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < sample_points; ++s) {
    const ChartPoint p = mf.sample_point(rng);
    const Tensor4 R = riemann(mf, p);
    const Matrix g = mf.metric(p);
    ++rep.points_sampled;
    for (int t = 0; t < planes_per_point; ++t) {
      Vector X(m), Y(m);
      for (int i = 0; i < m; ++i) {
        X[i] = gauss(rng);
        Y[i] = gauss(rng);
      }
      if (m < 2) {
        ++rep.degenerate_skipped;
        continue;
      }
      try {
        const double sec = sectional_from_tensor(R, g, X, Y);
        rep.max_sectional = std::max(rep.max_sectional, sec);
        ++rep.planes_sampled;
      } catch (const DegeneratePlaneError&) {
        ++rep.degenerate_skipped;
      }
    }
  }
  if (rep.planes_sampled == 0) rep.max_sectional = 0.0;  // 1-dimensional source
  rep.pass = rep.max_sectional <= K + tol;
  return rep;
}

}  // namespace harmap
