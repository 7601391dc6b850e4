#include "harmap/manifold.hpp"

#include <cmath>
#include <utility>

#include <Eigen/Dense>

namespace harmap {

namespace {

// Stereographic chart of the round sphere of radius r, projected from one
// pole onto the equatorial plane: g = lambda(x) Id with
// lambda = 4 r^4 / (r^2 + |x|^2)^2. Both antipodal charts share the formula.
Chart sphere_chart(int m, double r) {
  const double r2 = r * r;
  const double r4 = r2 * r2;
  Chart ch;
  ch.periods = Vector::Zero(m);
  ch.in_domain = [m](const Vector& x) { return x.size() == m && x.allFinite(); };
  ch.metric = [m, r4, r2](const Vector& x) -> Matrix {
    const double d = r2 + x.squaredNorm();
    return (4.0 * r4 / (d * d)) * Matrix::Identity(m, m);
  };
  ch.metric_d = [m, r4, r2](const Vector& x, int k) -> Matrix {
    const double d = r2 + x.squaredNorm();
    return (-16.0 * r4 * x[k] / (d * d * d)) * Matrix::Identity(m, m);
  };
  ch.metric_dd = [m, r4, r2](const Vector& x, int k, int l) -> Matrix {
    const double d = r2 + x.squaredNorm();
    const double kron = (k == l) ? 1.0 : 0.0;
    const double v = -16.0 * r4 * (kron * d - 6.0 * x[k] * x[l]) / (d * d * d * d);
    return v * Matrix::Identity(m, m);
  };
  return ch;
}

// Poincare disk of scale a: g = lambda(x) Id with
// lambda = 4 a^4 / (a^2 - |x|^2)^2 on |x| < a, sectional curvature -1/a^2.
Chart disk_chart(int m, double a) {
  const double a2 = a * a;
  const double a4 = a2 * a2;
  Chart ch;
  ch.periods = Vector::Zero(m);
  ch.in_domain = [m, a2](const Vector& x) {
    return x.size() == m && x.allFinite() && x.squaredNorm() < a2;
  };
  ch.metric = [m, a4, a2](const Vector& x) -> Matrix {
    const double d = a2 - x.squaredNorm();
    return (4.0 * a4 / (d * d)) * Matrix::Identity(m, m);
  };
  ch.metric_d = [m, a4, a2](const Vector& x, int k) -> Matrix {
    const double d = a2 - x.squaredNorm();
    return (16.0 * a4 * x[k] / (d * d * d)) * Matrix::Identity(m, m);
  };
  ch.metric_dd = [m, a4, a2](const Vector& x, int k, int l) -> Matrix {
    const double d = a2 - x.squaredNorm();
    const double kron = (k == l) ? 1.0 : 0.0;
    const double v = 16.0 * a4 * (kron * d + 6.0 * x[k] * x[l]) / (d * d * d * d);
    return v * Matrix::Identity(m, m);
  };
  return ch;
}

}  // namespace

ManifoldModel ManifoldModel::flat_torus(const Matrix& lattice_basis) {
  if (lattice_basis.rows() != lattice_basis.cols() || lattice_basis.rows() < 1)
    throw PreconditionError("flat_torus: lattice basis must be square and nonempty");
  const int m = static_cast<int>(lattice_basis.rows());
  Matrix G = lattice_basis.transpose() * lattice_basis;
  G = (0.5 * (G + G.transpose())).eval();
  if (Eigen::FullPivLU<Matrix>(lattice_basis).rank() < m)
    throw PreconditionError("flat_torus: lattice basis is singular");

  ManifoldModel mm;
  mm.dim_ = m;
  mm.kind_ = ManifoldKind::FlatTorus;
  Chart ch;
  ch.periods = Vector::Ones(m);
  ch.in_domain = [m](const Vector& x) { return x.size() == m && x.allFinite(); };
  ch.metric = [G](const Vector&) -> Matrix { return G; };
  ch.metric_d = [m](const Vector&, int) -> Matrix { return Matrix::Zero(m, m); };
  ch.metric_dd = [m](const Vector&, int, int) -> Matrix { return Matrix::Zero(m, m); };
  mm.charts_.push_back(std::move(ch));
  mm.sampler_ = [m](Rng& rng) -> ChartPoint {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector x(m);
    for (int i = 0; i < m; ++i) x[i] = u(rng);
    return ChartPoint(0, x);
  };
  return mm;
}

ManifoldModel ManifoldModel::circle(double circumference) {
  if (!(circumference > 0.0))
    throw PreconditionError("circle: circumference must be positive");
  ManifoldModel mm;
  mm.dim_ = 1;
  mm.kind_ = ManifoldKind::FlatTorus;
  Chart ch;
  ch.periods = Vector::Constant(1, circumference);
  ch.in_domain = [](const Vector& x) { return x.size() == 1 && x.allFinite(); };
  ch.metric = [](const Vector&) -> Matrix { return Matrix::Identity(1, 1); };
  ch.metric_d = [](const Vector&, int) -> Matrix { return Matrix::Zero(1, 1); };
  ch.metric_dd = [](const Vector&, int, int) -> Matrix { return Matrix::Zero(1, 1); };
  mm.charts_.push_back(std::move(ch));
  const double period = circumference;
  mm.sampler_ = [period](Rng& rng) -> ChartPoint {
    std::uniform_real_distribution<double> u(0.0, period);
    return ChartPoint(0, Vector::Constant(1, u(rng)));
  };
  return mm;
}

ManifoldModel ManifoldModel::round_sphere(int dim, double radius) {
  if (dim < 1) throw PreconditionError("round_sphere: dim must be >= 1");
  if (!(radius > 0.0)) throw PreconditionError("round_sphere: radius must be positive");
  ManifoldModel mm;
  mm.dim_ = dim;
  mm.kind_ = ManifoldKind::RoundSphere;
  mm.radius_ = radius;
  mm.charts_.push_back(sphere_chart(dim, radius));
  mm.charts_.push_back(sphere_chart(dim, radius));
  const int m = dim;
  const double r = radius;
  // Uniform on the sphere via a normalized Gaussian in the embedding space;
  // the hemisphere picks the chart, so sampled coordinates satisfy |x| <= r.
  mm.sampler_ = [m, r](Rng& rng) -> ChartPoint {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector w(m + 1);
    double n = 0.0;
    do {
      for (int i = 0; i <= m; ++i) w[i] = gauss(rng);
      n = w.norm();
    } while (n < 1e-6);
    w *= r / n;
    const double z = w[m];
    const Vector y = w.head(m);
    if (z <= 0.0) return ChartPoint(0, (r / (r - z)) * y);
    return ChartPoint(1, (r / (r + z)) * y);
  };
  return mm;
}

ManifoldModel ManifoldModel::hyperbolic_disk(int dim, double scale) {
  if (dim < 1) throw PreconditionError("hyperbolic_disk: dim must be >= 1");
  if (!(scale > 0.0)) throw PreconditionError("hyperbolic_disk: scale must be positive");
  ManifoldModel mm;
  mm.dim_ = dim;
  mm.kind_ = ManifoldKind::HyperbolicDisk;
  mm.radius_ = scale;
  mm.charts_.push_back(disk_chart(dim, scale));
  const int m = dim;
  const double rmax = 0.8 * scale;  // stays clear of the conformal blow-up
  mm.sampler_ = [m, rmax](Rng& rng) -> ChartPoint {
    std::uniform_real_distribution<double> u(-rmax, rmax);
    Vector x(m);
    do {
      for (int i = 0; i < m; ++i) x[i] = u(rng);
    } while (x.norm() > rmax);
    return ChartPoint(0, x);
  };
  return mm;
}

ManifoldModel ManifoldModel::product(const ManifoldModel& a, const ManifoldModel& b) {
  ManifoldModel mm;
  mm.dim_ = a.dim() + b.dim();
  mm.kind_ = ManifoldKind::Product;
  auto fa = std::make_shared<const ManifoldModel>(a);
  auto fb = std::make_shared<const ManifoldModel>(b);
  mm.factor_a_ = fa;
  mm.factor_b_ = fb;
  const int da = a.dim(), db = b.dim();
  const int nb = b.chart_count();

  // Chart index (ia, ib) flattens to ia * nb + ib. Metric and derivatives
  // are block diagonal; mixed second derivatives vanish.
  for (int ia = 0; ia < a.chart_count(); ++ia) {
    for (int ib = 0; ib < nb; ++ib) {
      Chart ch;
      ch.periods = Vector(da + db);
      ch.periods << a.chart(ia).periods, b.chart(ib).periods;
      ch.in_domain = [fa, fb, ia, ib, da, db](const Vector& x) {
        return x.size() == da + db && fa->chart(ia).in_domain(x.head(da)) &&
               fb->chart(ib).in_domain(x.tail(db));
      };
      ch.metric = [fa, fb, ia, ib, da, db](const Vector& x) -> Matrix {
        Matrix G = Matrix::Zero(da + db, da + db);
        G.topLeftCorner(da, da) = fa->chart(ia).metric(x.head(da));
        G.bottomRightCorner(db, db) = fb->chart(ib).metric(x.tail(db));
        return G;
      };
      ch.metric_d = [fa, fb, ia, ib, da, db](const Vector& x, int k) -> Matrix {
        Matrix D = Matrix::Zero(da + db, da + db);
        if (k < da)
          D.topLeftCorner(da, da) = fa->metric_d(ChartPoint(ia, x.head(da)), k);
        else
          D.bottomRightCorner(db, db) = fb->metric_d(ChartPoint(ib, x.tail(db)), k - da);
        return D;
      };
      ch.metric_dd = [fa, fb, ia, ib, da, db](const Vector& x, int k, int l) -> Matrix {
        Matrix D = Matrix::Zero(da + db, da + db);
        if (k < da && l < da)
          D.topLeftCorner(da, da) = fa->metric_dd(ChartPoint(ia, x.head(da)), k, l);
        else if (k >= da && l >= da)
          D.bottomRightCorner(db, db) =
              fb->metric_dd(ChartPoint(ib, x.tail(db)), k - da, l - da);
        return D;
      };
      mm.charts_.push_back(std::move(ch));
    }
  }

  mm.sampler_ = [fa, fb, nb, da, db](Rng& rng) -> ChartPoint {
    ChartPoint pa = fa->sample_point(rng);
    ChartPoint pb = fb->sample_point(rng);
    Vector x(da + db);
    x << pa.x, pb.x;
    return ChartPoint(pa.chart * nb + pb.chart, x);
  };
  return mm;
}

ManifoldModel ManifoldModel::custom(int dim, Chart chart,
                                    std::function<ChartPoint(Rng&)> sampler) {
  if (dim < 1) throw PreconditionError("custom: dim must be >= 1");
  if (!chart.metric) throw PreconditionError("custom: chart needs a metric callback");
  ManifoldModel mm;
  mm.dim_ = dim;
  mm.kind_ = ManifoldKind::Custom;
  if (chart.periods.size() == 0) chart.periods = Vector::Zero(dim);
  if (!chart.in_domain) {
    chart.in_domain = [dim](const Vector& x) { return x.size() == dim && x.allFinite(); };
  }
  mm.charts_.push_back(std::move(chart));
  mm.sampler_ = std::move(sampler);
  return mm;
}

const ManifoldModel& ManifoldModel::factor(int i) const {
  if (kind_ != ManifoldKind::Product || !factor_a_ || !factor_b_)
    throw PreconditionError("factor: not a product manifold");
  if (i == 0) return *factor_a_;
  if (i == 1) return *factor_b_;
  throw PreconditionError("factor: index must be 0 or 1");
}

bool ManifoldModel::in_domain(const ChartPoint& p) const {
  if (p.chart < 0 || p.chart >= chart_count()) return false;
  return charts_[p.chart].in_domain(p.x);
}

Matrix ManifoldModel::metric(const ChartPoint& p) const {
  if (p.chart < 0 || p.chart >= chart_count())
    throw DomainError("metric: chart index out of range");
  const Chart& ch = charts_[p.chart];
  if (!ch.in_domain(p.x)) throw DomainError("metric: point outside chart domain");
  Matrix G = ch.metric(p.x);
  if (G.rows() != dim_ || G.cols() != dim_)
    throw ValidationError("metric: callback returned wrong dimensions");
  if ((G - G.transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw ValidationError("metric: callback returned an asymmetric matrix");
  return G;
}

Matrix ManifoldModel::metric_inverse(const ChartPoint& p) const {
  Matrix G = metric(p);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  if (es.info() != Eigen::Success)
    throw ConditioningError("metric_inverse: eigendecomposition failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw ConditioningError("metric_inverse: metric not positive definite");
  if (hi / lo > kConditionLimit)
    throw ConditioningError("metric_inverse: condition number exceeds limit");
  Matrix inv = es.eigenvectors() *
               es.eigenvalues().cwiseInverse().asDiagonal() *
               es.eigenvectors().transpose();
  return (0.5 * (inv + inv.transpose())).eval();
}

Matrix ManifoldModel::metric_d(const ChartPoint& p, int k) const {
  if (p.chart < 0 || p.chart >= chart_count())
    throw DomainError("metric_d: chart index out of range");
  if (k < 0 || k >= dim_) throw PreconditionError("metric_d: axis out of range");
  const Chart& ch = charts_[p.chart];
  if (ch.metric_d) {
    Matrix D = ch.metric_d(p.x, k);
    if (D.rows() != dim_ || D.cols() != dim_)
      throw ValidationError("metric_d: callback returned wrong dimensions");
    return D;
  }
  // Central difference; probes may step slightly outside the strict domain.
  const double h = fd_step1_;
  Vector xp = p.x, xm = p.x;
  xp[k] += h;
  xm[k] -= h;
  return ((ch.metric(xp) - ch.metric(xm)) / (2.0 * h)).eval();
}

Matrix ManifoldModel::metric_dd(const ChartPoint& p, int k, int l) const {
  if (p.chart < 0 || p.chart >= chart_count())
    throw DomainError("metric_dd: chart index out of range");
  if (k < 0 || k >= dim_ || l < 0 || l >= dim_)
    throw PreconditionError("metric_dd: axis out of range");
  const Chart& ch = charts_[p.chart];
  if (ch.metric_dd) {
    Matrix D = ch.metric_dd(p.x, k, l);
    if (D.rows() != dim_ || D.cols() != dim_)
      throw ValidationError("metric_dd: callback returned wrong dimensions");
    return D;
  }
  if (ch.metric_d) {
    // Differentiate the analytic first derivative once.
    const double h = fd_step1_;
    Vector xp = p.x, xm = p.x;
    xp[l] += h;
    xm[l] -= h;
    return ((ch.metric_d(xp, k) - ch.metric_d(xm, k)) / (2.0 * h)).eval();
  }
  const double h = fd_step2_;
  if (k == l) {
    Vector xp = p.x, xm = p.x;
    xp[k] += h;
    xm[k] -= h;
    return ((ch.metric(xp) - 2.0 * ch.metric(p.x) + ch.metric(xm)) / (h * h)).eval();
  }
  Vector xpp = p.x, xpm = p.x, xmp = p.x, xmm = p.x;
  xpp[k] += h; xpp[l] += h;
  xpm[k] += h; xpm[l] -= h;
  xmp[k] -= h; xmp[l] += h;
  xmm[k] -= h; xmm[l] -= h;
  return ((ch.metric(xpp) - ch.metric(xpm) - ch.metric(xmp) + ch.metric(xmm)) /
          (4.0 * h * h))
      .eval();
}

int ManifoldModel::preferred_chart(const ChartPoint& p) const {
  if (p.chart < 0 || p.chart >= chart_count())
    throw DomainError("preferred_chart: chart index out of range");
  switch (kind_) {
    case ManifoldKind::RoundSphere:
      return (p.x.norm() > 1.5 * radius_) ? 1 - p.chart : p.chart;
    case ManifoldKind::Product: {
      const int nb = factor_b_->chart_count();
      const int ia = p.chart / nb, ib = p.chart % nb;
      const int da = factor_a_->dim();
      const int ja = factor_a_->preferred_chart(ChartPoint(ia, p.x.head(da)));
      const int jb = factor_b_->preferred_chart(ChartPoint(ib, p.x.tail(dim_ - da)));
      return ja * nb + jb;
    }
    default:
      return p.chart;
  }
}

ChartPoint ManifoldModel::transition(const ChartPoint& p, int to_chart) const {
  if (p.chart < 0 || p.chart >= chart_count())
    throw DomainError("transition: chart index out of range");
  if (to_chart < 0 || to_chart >= chart_count())
    throw ChartError("transition: target chart out of range");
  if (to_chart == p.chart) return p;
  switch (kind_) {
    case ManifoldKind::RoundSphere: {
      const double s = p.x.squaredNorm();
      if (s == 0.0)
        throw ChartError("transition: chart center has no antipodal-chart image");
      return ChartPoint(to_chart, (radius_ * radius_ / s) * p.x);
    }
    case ManifoldKind::Product: {
      const int nb = factor_b_->chart_count();
      const int da = factor_a_->dim();
      ChartPoint qa = factor_a_->transition(
          ChartPoint(p.chart / nb, p.x.head(da)), to_chart / nb);
      ChartPoint qb = factor_b_->transition(
          ChartPoint(p.chart % nb, p.x.tail(dim_ - da)), to_chart % nb);
      Vector x(dim_);
      x << qa.x, qb.x;
      return ChartPoint(to_chart, x);
    }
    default:
      throw ChartError("transition: manifold has a single chart");
  }
}

Matrix ManifoldModel::transition_jacobian(const ChartPoint& p, int to_chart) const {
  if (p.chart < 0 || p.chart >= chart_count())
    throw DomainError("transition_jacobian: chart index out of range");
  if (to_chart < 0 || to_chart >= chart_count())
    throw ChartError("transition_jacobian: target chart out of range");
  if (to_chart == p.chart) return Matrix::Identity(dim_, dim_);
  switch (kind_) {
    case ManifoldKind::RoundSphere: {
      const double s = p.x.squaredNorm();
      if (s == 0.0)
        throw ChartError("transition_jacobian: chart center has no antipodal image");
      const double r2 = radius_ * radius_;
      return ((r2 / s) *
              (Matrix::Identity(dim_, dim_) - (2.0 / s) * p.x * p.x.transpose()))
          .eval();
    }
    case ManifoldKind::Product: {
      const int nb = factor_b_->chart_count();
      const int da = factor_a_->dim();
      Matrix J = Matrix::Zero(dim_, dim_);
      J.topLeftCorner(da, da) = factor_a_->transition_jacobian(
          ChartPoint(p.chart / nb, p.x.head(da)), to_chart / nb);
      J.bottomRightCorner(dim_ - da, dim_ - da) = factor_b_->transition_jacobian(
          ChartPoint(p.chart % nb, p.x.tail(dim_ - da)), to_chart % nb);
      return J;
    }
    default:
      throw ChartError("transition_jacobian: manifold has a single chart");
  }
}

std::vector<Matrix> ManifoldModel::transition_hessian(const ChartPoint& p,
                                                      int to_chart) const {
  if (p.chart < 0 || p.chart >= chart_count())
    throw DomainError("transition_hessian: chart index out of range");
  if (to_chart < 0 || to_chart >= chart_count())
    throw ChartError("transition_hessian: target chart out of range");
  if (to_chart == p.chart)
    return std::vector<Matrix>(dim_, Matrix::Zero(dim_, dim_));
  switch (kind_) {
    case ManifoldKind::RoundSphere: {
      const double s = p.x.squaredNorm();
      if (s == 0.0)
        throw ChartError("transition_hessian: chart center has no antipodal image");
      const double r2 = radius_ * radius_;
      std::vector<Matrix> H(dim_, Matrix::Zero(dim_, dim_));
      for (int a = 0; a < dim_; ++a)
        for (int i = 0; i < dim_; ++i)
          for (int j = 0; j < dim_; ++j) {
            const double dai = (a == i) ? 1.0 : 0.0;
            const double daj = (a == j) ? 1.0 : 0.0;
            const double dij = (i == j) ? 1.0 : 0.0;
            H[a](i, j) = r2 * (-2.0 * (dai * p.x[j] + daj * p.x[i] + dij * p.x[a]) /
                                   (s * s) +
                               8.0 * p.x[a] * p.x[i] * p.x[j] / (s * s * s));
          }
      return H;
    }
    case ManifoldKind::Product: {
      const int nb = factor_b_->chart_count();
      const int da = factor_a_->dim();
      const int db = dim_ - da;
      auto Ha = factor_a_->transition_hessian(ChartPoint(p.chart / nb, p.x.head(da)),
                                              to_chart / nb);
      auto Hb = factor_b_->transition_hessian(ChartPoint(p.chart % nb, p.x.tail(db)),
                                              to_chart % nb);
      std::vector<Matrix> H(dim_, Matrix::Zero(dim_, dim_));
      for (int a = 0; a < da; ++a) H[a].topLeftCorner(da, da) = Ha[a];
      for (int a = 0; a < db; ++a) H[da + a].bottomRightCorner(db, db) = Hb[a];
      return H;
    }
    default:
      throw ChartError("transition_hessian: manifold has a single chart");
  }
}

Vector ManifoldModel::canonical_coords(int chart, const Vector& x) const {
  if (chart < 0 || chart >= chart_count())
    throw DomainError("canonical_coords: chart index out of range");
  const Vector& per = charts_[chart].periods;
  Vector y = x;
  for (int i = 0; i < dim_; ++i) {
    const double T = per[i];
    if (T > 0.0) {
      y[i] = std::fmod(y[i], T);
      if (y[i] < 0.0) y[i] += T;
    }
  }
  return y;
}

ChartPoint ManifoldModel::sample_point(Rng& rng) const {
  if (!sampler_)
    throw PreconditionError("sample_point: manifold has no point sampler");
  ChartPoint p = sampler_(rng);
  if (!in_domain(p)) throw DomainError("sample_point: sampler left the chart domain");
  return p;
}

ManifoldModel ManifoldModel::scaled(double c) const {
  if (!(c > 0.0)) throw PreconditionError("scaled: factor must be positive");
  if (kind_ == ManifoldKind::Product)
    return product(factor_a_->scaled(c), factor_b_->scaled(c));
  ManifoldModel out = *this;
  out.scale_ = scale_ * c;
  for (auto& ch : out.charts_) {
    auto g0 = ch.metric;
    ch.metric = [g0, c](const Vector& x) -> Matrix { return c * g0(x); };
    if (ch.metric_d) {
      auto d0 = ch.metric_d;
      ch.metric_d = [d0, c](const Vector& x, int k) -> Matrix { return c * d0(x, k); };
    }
    if (ch.metric_dd) {
      auto dd0 = ch.metric_dd;
      ch.metric_dd = [dd0, c](const Vector& x, int k, int l) -> Matrix {
        return c * dd0(x, k, l);
      };
    }
  }
  return out;
}

ManifoldModel ManifoldModel::fd_variant(double step1, double step2) const {
  if (!(step1 > 0.0) || !(step2 > 0.0))
    throw PreconditionError("fd_variant: steps must be positive");
  ManifoldModel out = *this;
  for (auto& ch : out.charts_) {
    ch.metric_d = nullptr;
    ch.metric_dd = nullptr;
  }
  out.fd_step1_ = step1;
  out.fd_step2_ = step2;
  return out;
}

}  // namespace harmap
