#include "harmap/map_model.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "harmap/curvature.hpp"
#include "harmap/errors.hpp"

namespace harmap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<Matrix> zero_hessians(int n, int m) {
  return std::vector<Matrix>(n, Matrix::Zero(m, m));
}

}  // namespace

MapModel MapModel::constant_map(const ManifoldModel& source, const ManifoldModel& target,
                                const ChartPoint& value) {
  if (!target.in_domain(value))
    throw PreconditionError("constant_map: value outside target charts");
  MapModel mp;
  mp.source_ = std::make_shared<const ManifoldModel>(source);
  mp.target_ = std::make_shared<const ManifoldModel>(target);
  mp.kind_ = MapKind::Constant;
  const int n = target.dim(), m = source.dim();
  mp.chart_map_ = [value](const ChartPoint&) { return value; };
  mp.dmap_ = [n, m](const ChartPoint&) -> Matrix { return Matrix::Zero(n, m); };
  mp.ddmap_ = [n, m](const ChartPoint&) { return zero_hessians(n, m); };
  return mp;
}

MapModel MapModel::identity_map(const ManifoldModel& source, const ManifoldModel& target) {
  if (source.dim() != target.dim())
    throw PreconditionError("identity_map: dimension mismatch");
  if (source.chart_count() != target.chart_count())
    throw PreconditionError("identity_map: chart structure mismatch");
  MapModel mp;
  mp.source_ = std::make_shared<const ManifoldModel>(source);
  mp.target_ = std::make_shared<const ManifoldModel>(target);
  mp.kind_ = MapKind::Identity;
  const int m = source.dim();
  mp.chart_map_ = [](const ChartPoint& p) { return p; };
  mp.dmap_ = [m](const ChartPoint&) -> Matrix { return Matrix::Identity(m, m); };
  mp.ddmap_ = [m](const ChartPoint&) { return zero_hessians(m, m); };
  return mp;
}

MapModel MapModel::linear_torus(const ManifoldModel& source, const ManifoldModel& target,
                                const Matrix& A) {
  if (A.rows() != target.dim() || A.cols() != source.dim())
    throw PreconditionError("linear_torus: matrix shape mismatch");
  if (source.kind() != ManifoldKind::FlatTorus || target.kind() != ManifoldKind::FlatTorus)
    throw PreconditionError("linear_torus: both ends must be flat tori");
  MapModel mp;
  mp.source_ = std::make_shared<const ManifoldModel>(source);
  mp.target_ = std::make_shared<const ManifoldModel>(target);
  mp.kind_ = MapKind::LinearTorus;
  const int n = target.dim(), m = source.dim();
  Matrix Ac = A;
  mp.chart_map_ = [Ac](const ChartPoint& p) { return ChartPoint(0, Ac * p.x); };
  mp.dmap_ = [Ac](const ChartPoint&) -> Matrix { return Ac; };
  mp.ddmap_ = [n, m](const ChartPoint&) { return zero_hessians(n, m); };
  return mp;
}

MapModel MapModel::equator_inclusion(double radius) {
  const double r = radius;
  auto source = ManifoldModel::circle(kTwoPi);
  auto target = ManifoldModel::round_sphere(2, r);
  MapModel mp;
  mp.source_ = std::make_shared<const ManifoldModel>(source);
  mp.target_ = std::make_shared<const ManifoldModel>(target);
  mp.kind_ = MapKind::EquatorInclusion;
  mp.chart_map_ = [r](const ChartPoint& p) {
    Vector y(2);
    y << r * std::cos(p.x[0]), r * std::sin(p.x[0]);
    return ChartPoint(0, y);
  };
  mp.dmap_ = [r](const ChartPoint& p) -> Matrix {
    Matrix D(2, 1);
    D << -r * std::sin(p.x[0]), r * std::cos(p.x[0]);
    return D;
  };
  mp.ddmap_ = [r](const ChartPoint& p) {
    std::vector<Matrix> H(2, Matrix::Zero(1, 1));
    H[0](0, 0) = -r * std::cos(p.x[0]);
    H[1](0, 0) = -r * std::sin(p.x[0]);
    return H;
  };
  return mp;
}

MapModel MapModel::sin_perturbed(const ManifoldModel& source, const ManifoldModel& target,
                                 double amplitude) {
  if (source.kind() != ManifoldKind::FlatTorus || target.kind() != ManifoldKind::FlatTorus)
    throw PreconditionError("sin_perturbed: both ends must be flat tori");
  if (source.dim() != target.dim())
    throw PreconditionError("sin_perturbed: dimension mismatch");
  MapModel mp;
  mp.source_ = std::make_shared<const ManifoldModel>(source);
  mp.target_ = std::make_shared<const ManifoldModel>(target);
  mp.kind_ = MapKind::SinPerturbed;
  const int m = source.dim();
  const double eps = amplitude;
  mp.chart_map_ = [m, eps](const ChartPoint& p) {
    Vector y = p.x;
    for (int a = 0; a < m; ++a) y[a] += eps * std::sin(kTwoPi * p.x[(a + 1) % m]);
    return ChartPoint(0, y);
  };
  mp.dmap_ = [m, eps](const ChartPoint& p) -> Matrix {
    Matrix D = Matrix::Identity(m, m);
    for (int a = 0; a < m; ++a)
      D(a, (a + 1) % m) += kTwoPi * eps * std::cos(kTwoPi * p.x[(a + 1) % m]);
    return D;
  };
  mp.ddmap_ = [m, eps](const ChartPoint& p) {
    auto H = zero_hessians(m, m);
    for (int a = 0; a < m; ++a) {
      const int i = (a + 1) % m;
      H[a](i, i) += -kTwoPi * kTwoPi * eps * std::sin(kTwoPi * p.x[i]);
    }
    return H;
  };
  return mp;
}

MapModel MapModel::custom(const ManifoldModel& source, const ManifoldModel& target,
                          ChartMapFn chart_map, DiffFn dmap, HessFn ddmap) {
  if (!chart_map) throw PreconditionError("custom: chart_map callback required");
  MapModel mp;
  mp.source_ = std::make_shared<const ManifoldModel>(source);
  mp.target_ = std::make_shared<const ManifoldModel>(target);
  mp.kind_ = MapKind::Custom;
  mp.chart_map_ = std::move(chart_map);
  mp.dmap_ = std::move(dmap);
  mp.ddmap_ = std::move(ddmap);
  return mp;
}

ChartPoint MapModel::eval(const ChartPoint& p) const {
  if (!source_->in_domain(p)) throw DomainError("eval: point outside source charts");
  return chart_map_(p);
}

Vector MapModel::eval_in(const ChartPoint& p, int target_chart) const {
  // no source domain check: finite-difference probes may poke slightly out
  ChartPoint q = chart_map_(p);
  if (q.chart == target_chart) return q.x;
  return target_->transition(q, target_chart).x;
}

MapModel MapModel::fd_variant(double step1, double step2) const {
  if (!(step1 > 0.0) || !(step2 > 0.0))
    throw PreconditionError("fd_variant: steps must be positive");
  MapModel out = *this;
  out.dmap_ = nullptr;
  out.ddmap_ = nullptr;
  out.fd_step1_ = step1;
  out.fd_step2_ = step2;
  return out;
}

MapModel MapModel::with_target(const ManifoldModel& target) const {
  if (target.dim() != target_->dim() || target.chart_count() != target_->chart_count())
    throw PreconditionError("with_target: chart structure mismatch");
  MapModel out = *this;
  out.target_ = std::make_shared<const ManifoldModel>(target);
  return out;
}

namespace {

// Natural-chart differential: analytic callback or central differences,
// expressed in the chart pair the map is written in.
Matrix natural_differential(const MapModel& map, const ChartPoint& p, const ChartPoint& q) {
  const int m = map.source().dim(), n = map.target().dim();
  if (map.has_analytic_differential()) {
    Matrix D = map.dmap()(p);
    if (D.rows() != n || D.cols() != m)
      throw ValidationError("differential: callback returned wrong shape");
    return D;
  }
  const double h = map.fd_step1();
  Matrix D(n, m);
  for (int i = 0; i < m; ++i) {
    ChartPoint pp = p, pm = p;
    pp.x[i] += h;
    pm.x[i] -= h;
    D.col(i) = (map.eval_in(pp, q.chart) - map.eval_in(pm, q.chart)) / (2.0 * h);
  }
  return D;
}

// Map hessian H[a](i,j) = d_i d_j phi^a in the requested target chart,
// exactly symmetric in (i,j) by construction.
std::vector<Matrix> map_hessian(const MapModel& map, const ChartPoint& p,
                                const ChartPoint& q, int tc) {
  const int m = map.source().dim(), n = map.target().dim();
  const auto& tgt = map.target();

  std::vector<Matrix> H0;
  if (map.has_analytic_hessian()) {
    H0 = map.ddmap()(p);
    if (static_cast<int>(H0.size()) != n)
      throw ValidationError("hessian: callback returned wrong shape");
    for (auto& Ha : H0) Ha = (0.5 * (Ha + Ha.transpose())).eval();
  } else if (map.has_analytic_differential()) {
    // differentiate the analytic differential once
    const double h = map.fd_step1();
    H0 = zero_hessians(n, m);
    for (int j = 0; j < m; ++j) {
      ChartPoint pp = p, pm = p;
      pp.x[j] += h;
      pm.x[j] -= h;
      Matrix dD = (map.dmap()(pp) - map.dmap()(pm)) / (2.0 * h);
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i) H0[a](i, j) = dD(a, i);
    }
    for (auto& Ha : H0) Ha = (0.5 * (Ha + Ha.transpose())).eval();
  } else {
    // direct second differences of the chart expression in chart tc
    const double h = map.fd_step2();
    H0 = zero_hessians(n, m);
    const Vector y0 = map.eval_in(p, tc);
    for (int i = 0; i < m; ++i) {
      ChartPoint pp = p, pm = p;
      pp.x[i] += h;
      pm.x[i] -= h;
      Vector d2 = (map.eval_in(pp, tc) - 2.0 * y0 + map.eval_in(pm, tc)) / (h * h);
      for (int a = 0; a < n; ++a) H0[a](i, i) = d2[a];
    }
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        ChartPoint xpp = p, xpm = p, xmp = p, xmm = p;
        xpp.x[i] += h; xpp.x[j] += h;
        xpm.x[i] += h; xpm.x[j] -= h;
        xmp.x[i] -= h; xmp.x[j] += h;
        xmm.x[i] -= h; xmm.x[j] -= h;
        Vector d2 = (map.eval_in(xpp, tc) - map.eval_in(xpm, tc) -
                     map.eval_in(xmp, tc) + map.eval_in(xmm, tc)) /
                    (4.0 * h * h);
        for (int a = 0; a < n; ++a) {
          H0[a](i, j) = d2[a];
          H0[a](j, i) = d2[a];
        }
      }
    return H0;  // already in chart tc
  }

  if (tc == q.chart) return H0;

  // push analytic-chart data through the transition:
  // (T o phi)^a_ij = J^a_b phi^b_ij + T^a_bc phi^b_i phi^c_j
  const Matrix D0 = natural_differential(map, p, q);
  const Matrix J = tgt.transition_jacobian(q, tc);
  const auto T = tgt.transition_hessian(q, tc);
  std::vector<Matrix> H(n, Matrix::Zero(m, m));
  for (int a = 0; a < n; ++a) {
    Matrix Ha = Matrix::Zero(m, m);
    for (int b = 0; b < n; ++b) Ha += J(a, b) * H0[b];
    Ha += D0.transpose() * T[a] * D0;
    H[a] = (0.5 * (Ha + Ha.transpose())).eval();
  }
  return H;
}

// Image point in the preferred target chart, with validity checks.
ChartPoint image_in_preferred_chart(const MapModel& map, const ChartPoint& p, int* tc_out) {
  ChartPoint q = map.eval(p);
  if (!map.target().in_domain(q))
    throw ChartError("map image outside target chart coverage");
  const int tc = map.target().preferred_chart(q);
  *tc_out = tc;
  if (tc == q.chart) return q;
  return map.target().transition(q, tc);
}

}  // namespace

Matrix differential(const MapModel& map, const ChartPoint& p) {
  ChartPoint q_nat = map.eval(p);
  if (!map.target().in_domain(q_nat))
    throw ChartError("map image outside target chart coverage");
  const int tc = map.target().preferred_chart(q_nat);
  Matrix D = natural_differential(map, p, q_nat);
  if (tc != q_nat.chart) D = (map.target().transition_jacobian(q_nat, tc) * D).eval();
  return D;
}

Matrix pullback_metric(const MapModel& map, const ChartPoint& p) {
  int tc = 0;
  ChartPoint q = image_in_preferred_chart(map, p, &tc);
  const Matrix D = differential(map, p);
  const Matrix H = map.target().metric(q);
  Matrix P = D.transpose() * H * D;
  return (0.5 * (P + P.transpose())).eval();
}

double energy_density(const MapModel& map, const ChartPoint& p) {
  int tc = 0;
  ChartPoint q = image_in_preferred_chart(map, p, &tc);
  const Matrix D = differential(map, p);
  const Matrix H = map.target().metric(q);
  const Matrix Ginv = map.source().metric_inverse(p);
  const int m = map.source().dim(), n = map.target().dim();
  double e = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          e += Ginv(i, j) * H(a, b) * D(a, i) * D(b, j);
  return e;
}

SecondFundamentalForm second_fundamental_form(const MapModel& map, const ChartPoint& p) {
  int tc = 0;
  ChartPoint q = image_in_preferred_chart(map, p, &tc);
  ChartPoint q_nat = map.eval(p);
  const int m = map.source().dim(), n = map.target().dim();

  Matrix D = natural_differential(map, p, q_nat);
  if (tc != q_nat.chart) D = (map.target().transition_jacobian(q_nat, tc) * D).eval();
  const auto Hess = map_hessian(map, p, q_nat, tc);
  const auto Gg = christoffel(map.source(), p);
  const auto Gh = christoffel(map.target(), q);

  SecondFundamentalForm sff;
  sff.point = p;
  sff.image = q;
  sff.tensor.resize(n);
  for (int a = 0; a < n; ++a) {
    Matrix S = Hess[a];
    for (int k = 0; k < m; ++k) S -= D(a, k) * Gg[k];
    Matrix corr = Matrix::Zero(m, m);
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        corr += Gh[a](b, c) * (D.row(b).transpose() * D.row(c));
    S += corr;
    sff.tensor[a] = S;
  }

  const Matrix Ginv = map.source().metric_inverse(p);
  const Matrix Hq = map.target().metric(q);
  double nsq = 0.0;
  for (int a = 0; a < n; ++a) {
    const Matrix Ta = Ginv * sff.tensor[a] * Ginv;
    for (int b = 0; b < n; ++b)
      nsq += Hq(a, b) * sff.tensor[b].cwiseProduct(Ta).sum();
  }
  sff.norm_sq = nsq;
  return sff;
}

Vector tension_field(const MapModel& map, const ChartPoint& p) {
  const auto sff = second_fundamental_form(map, p);
  const Matrix Ginv = map.source().metric_inverse(p);
  const int n = map.target().dim();
  Vector tau(n);
  for (int a = 0; a < n; ++a) tau[a] = Ginv.cwiseProduct(sff.tensor[a]).sum();
  return tau;
}

double tension_norm(const MapModel& map, const ChartPoint& p) {
  const auto sff = second_fundamental_form(map, p);
  const Matrix Ginv = map.source().metric_inverse(p);
  const int n = map.target().dim();
  Vector tau(n);
  for (int a = 0; a < n; ++a) tau[a] = Ginv.cwiseProduct(sff.tensor[a]).sum();
  const Matrix H = map.target().metric(sff.image);
  return std::sqrt(std::max(0.0, tau.dot(H * tau)));
}

Matrix frame_differential(const MapModel& map, const ChartPoint& p) {
  int tc = 0;
  ChartPoint q = image_in_preferred_chart(map, p, &tc);
  const Matrix D = differential(map, p);
  Eigen::LLT<Matrix> lg(map.source().metric(p));
  Eigen::LLT<Matrix> lh(map.target().metric(q));
  if (lg.info() != Eigen::Success || lh.info() != Eigen::Success)
    throw ConditioningError("frame_differential: metric Cholesky failed");
  // M = Lh^T D Lg^{-T}: orthonormal frames on both sides
  Matrix M = Matrix(lh.matrixL()).transpose() * D;
  Matrix LgT = Matrix(lg.matrixL()).transpose();
  M = LgT.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(M);
  return M;
}

int rank_at(const MapModel& map, const ChartPoint& p, double rel_tol) {
  const Matrix M = frame_differential(map, p);
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double top = sv(0);
  if (top <= 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * top) ++r;
  return r;
}

double ricci_lower_bound_residual(const MapModel& map, const ChartPoint& p, double K) {
  const int m = map.source().dim();
  const Matrix ric = ricci(map.source(), p);
  const Matrix P = pullback_metric(map, p);
  Matrix A = ric - (m - 1) * K * P;
  A = (0.5 * (A + A.transpose())).eval();
  const Matrix G = map.source().metric(p);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(A, G);
  if (ges.info() != Eigen::Success)
    throw ConditioningError("ricci_lower_bound_residual: eigensolver failed");
  return ges.eigenvalues().minCoeff();
}

}  // namespace harmap
