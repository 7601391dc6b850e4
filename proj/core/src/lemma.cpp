#include "harmap/lemma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "harmap/curvature.hpp"
#include "harmap/errors.hpp"

namespace harmap {

namespace {

Matrix gauss_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Vector gauss_vector(int n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

// B_ik B_jl - B_il B_jk for symmetric B: antisymmetric in (i,j) and (k,l),
// symmetric under pair swap, and the Bianchi sum cancels product by product.
Tensor4 symmetric_generator(const Matrix& b) {
  const int n = static_cast<int>(b.rows());
  Tensor4 t(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) t(i, j, k, l) = b(i, k) * b(j, l) - b(i, l) * b(j, k);
  return t;
}

// d/dx_p of R(x,y,x,y); the two x slots contribute equally by pair symmetry.
Vector plane_value_gradient(const Tensor4& r, const Vector& x, const Vector& y) {
  const int n = r.dim();
  Vector g = Vector::Zero(n);
  for (int p = 0; p < n; ++p) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += r(p, j, k, l) * y(j) * x(k) * y(l);
    g(p) = 2.0 * s;
  }
  return g;
}

// In-place Gram-Schmidt of a vector pair; false when the pair is too close
// to dependent to define a plane.
bool orthonormalize_pair(Vector& x, Vector& y) {
  const double nx = x.norm();
  if (nx < 1e-12) return false;
  x /= nx;
  y -= y.dot(x) * x;
  const double ny = y.norm();
  if (ny < 1e-9) return false;
  y /= ny;
  return true;
}

void require_square_symmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << what << " must be square, got " << a.rows() << "x" << a.cols();
    throw ValidationError(os.str());
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double skew = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (skew > 1e-12 * scale) {
    std::ostringstream os;
    os << what << " must be symmetric; skew part has magnitude " << skew;
    throw ValidationError(os.str());
  }
}

}  // namespace

Matrix random_dphi(int n, int m, Rng& rng) { return gauss_matrix(n, m, rng); }

Matrix rank_projected(const Matrix& dphi, int rank) {
  if (rank < 0) throw ValidationError("rank_projected needs rank >= 0");
  if (rank >= std::min(dphi.rows(), dphi.cols())) return dphi;
  Eigen::JacobiSVD<Matrix> svd(dphi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = svd.singularValues();
  for (int i = rank; i < s.size(); ++i) s(i) = 0.0;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Matrix random_psd(int m, Rng& rng) {
  const Matrix b = gauss_matrix(m, m, rng);
  Matrix a = b.transpose() * b;
  return 0.5 * (a + a.transpose());
}

Tensor4 random_algebraic_curvature(int n, Rng& rng) {
  if (n < 1) throw ValidationError("random_algebraic_curvature needs n >= 1");
  std::normal_distribution<double> weight(0.0, 1.0);
  Tensor4 r(n);
  for (int t = 0; t < 3; ++t) {
    const Matrix raw = gauss_matrix(n, n, rng);
    const Matrix b = 0.5 * (raw + raw.transpose());
    Tensor4 gen = symmetric_generator(b);
    gen *= weight(rng);
    r += gen;
  }
  return r;
}

double max_sectional_estimate(const Tensor4& r, int plane_samples, int ascent_steps, Rng& rng) {
  const int n = r.dim();
  if (n < 2) throw ValidationError("max_sectional_estimate needs a target dimension >= 2");
  if (plane_samples < 1) throw ValidationError("max_sectional_estimate needs plane_samples >= 1");

  double best = -std::numeric_limits<double>::infinity();
  Vector bx, by;
  int drawn = 0;
  while (drawn < plane_samples) {
    Vector x = gauss_vector(n, rng);
    Vector y = gauss_vector(n, rng);
    if (!orthonormalize_pair(x, y)) continue;
    ++drawn;
    const double val = r.contract(x, y, x, y);
    if (val > best) {
      best = val;
      bx = x;
      by = y;
    }
  }

  // Local refinement: ascend R(x,y,x,y) over orthonormal pairs, re-projecting
  // after each step and shrinking the step on failure.
  Vector x = bx;
  Vector y = by;
  double eta = 0.1;
  for (int it = 0; it < ascent_steps; ++it) {
    const Vector gx = plane_value_gradient(r, x, y);
    const Vector gy = plane_value_gradient(r, y, x);  // R(y,x,y,x) = R(x,y,x,y)
    Vector nx = x + eta * gx;
    Vector ny = y + eta * gy;
    if (!orthonormalize_pair(nx, ny)) {
      eta *= 0.5;
      continue;
    }
    const double val = r.contract(nx, ny, nx, ny);
    if (val > best) {
      best = val;
      x = nx;
      y = ny;
      eta *= 1.25;
    } else {
      eta *= 0.5;
    }
  }
  return best;
}

Tensor4 sample_curvature_with_bound(int n, double K, std::uint64_t seed) {
  Rng rng(seed);
  Tensor4 r = random_algebraic_curvature(n, rng);
  const double est = max_sectional_estimate(r, 1000, 50, rng);
  // Shifting by a constant-curvature term moves every sectional value by the
  // same amount; the margin absorbs estimator slack.
  Tensor4 shift = constant_curvature_tensor(n, est - K + 1e-6);
  r -= shift;
  return r;
}

LemmaSample make_lemma_sample(int m, int n, double K, std::uint64_t seed) {
  if (m < 2) throw ValidationError("make_lemma_sample needs source dimension m >= 2");
  if (n < 2) throw ValidationError("make_lemma_sample needs target dimension n >= 2");
  Rng rng(seed);
  LemmaSample s;
  s.m = m;
  s.n = n;
  s.k = K;
  s.seed = seed;
  s.dphi = random_dphi(n, m, rng);
  s.a = random_psd(m, rng);
  s.curvature = sample_curvature_with_bound(n, K, rng());
  s.sec_bounded = true;
  return s;
}

Q0Evaluation q0_evaluation(const Matrix& a, const Matrix& dphi) {
  require_square_symmetric(a, "q0 coefficient matrix");
  if (dphi.cols() != a.rows()) {
    std::ostringstream os;
    os << "q0 differential has " << dphi.cols() << " columns but the coefficient matrix is "
       << a.rows() << "x" << a.cols();
    throw ValidationError(os.str());
  }
  Q0Evaluation out;
  out.contraction = (a * (dphi.transpose() * dphi)).trace();
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  double acc = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    acc += es.eigenvalues()(i) * (dphi * es.eigenvectors().col(i)).squaredNorm();
  out.eigen_route = acc;
  return out;
}

double q0_value(const Matrix& a, const Matrix& dphi) { return q0_evaluation(a, dphi).contraction; }

Q1Evaluation q1_evaluation(const Matrix& dphi, const Tensor4& r, double K) {
  const int m = static_cast<int>(dphi.cols());
  const int n = static_cast<int>(dphi.rows());
  if (r.dim() != n) {
    std::ostringstream os;
    os << "curvature tensor dimension " << r.dim() << " does not match differential rows " << n;
    throw ValidationError(os.str());
  }
  Q1Evaluation out;

  const Matrix pull = dphi.transpose() * dphi;
  const Matrix w = dphi * dphi.transpose();
  double target = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) target += r(a, b, c, e) * w(a, c) * w(b, e);
  out.direct = static_cast<double>(m - 1) * K * pull.squaredNorm() - target;

  out.frame = frame_data_from_images(dphi, Matrix::Identity(n, n), r);
  out.terms = q1_sum_terms(out.frame.gram, out.frame.plane_curvatures, K);
  double sum = 0.0;
  for (const auto& t : out.terms) sum += t.total;
  out.sum_form = sum;
  return out;
}

double q1_value(const Matrix& dphi, const Tensor4& r, double K) {
  return q1_evaluation(dphi, r, K).direct;
}

EqualityVerdict classify_equality_case(const Matrix& dphi, const Tensor4& r, double K,
                                       double q1_tol, double fit_tol) {
  const int m = static_cast<int>(dphi.cols());
  EqualityVerdict v;
  v.dphi_norm = dphi.norm();
  v.q1_residual = std::abs(q1_value(dphi, r, K));

  Eigen::JacobiSVD<Matrix> svd(dphi);
  const Vector sing = svd.singularValues();
  const double smax = sing.size() > 0 ? sing(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sing.size(); ++i)
    if (sing(i) > 1e-8 * smax && smax > 0.0) ++rank;
  v.rank = rank;

  if (v.q1_residual > q1_tol) {
    v.kind = EqualityCase::NotEquality;
    return v;
  }

  if (rank >= 2) {
    // Sample planes inside the image span and demand constant curvature K.
    Rng rng(0x1e55a5u);
    double worst = 0.0;
    int accepted = 0;
    while (accepted < 1000) {
      const Vector x = dphi * gauss_vector(m, rng);
      const Vector y = dphi * gauss_vector(m, rng);
      const double xx = x.squaredNorm();
      const double yy = y.squaredNorm();
      const double xy = x.dot(y);
      const double det = xx * yy - xy * xy;
      if (!(det > 1e-12 * xx * yy)) continue;
      ++accepted;
      const double sec = r.contract(x, y, x, y) / det;
      worst = std::max(worst, std::abs(sec - K));
    }
    v.plane_residual = worst;
    if (worst > fit_tol * std::max(1.0, std::abs(K))) {
      v.kind = EqualityCase::NotEquality;
      return v;
    }
    v.kind = EqualityCase::RankGe2_ConstCurvK;
    if (K > 0.0) {
      const Matrix c = dphi.transpose() * dphi;
      const double mu = c.trace() / static_cast<double>(m);
      v.mu_estimate = mu;
      v.conformal_residual = (c - mu * Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
      if (v.conformal_residual <= fit_tol) v.sub = EqualitySub::ConformalAtPoint;
    }
    return v;
  }

  v.kind = EqualityCase::RankLe1;
  if (K > 0.0 && v.dphi_norm <= fit_tol) v.sub = EqualitySub::ZeroDifferential;
  return v;
}

}  // namespace harmap
