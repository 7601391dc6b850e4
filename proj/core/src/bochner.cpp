#include "harmap/bochner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "harmap/errors.hpp"

namespace harmap {

namespace {

// Shared contraction pieces of Q and its split:
//   ricci_term = tr(G^-1 Ric G^-1 P)           (source Ricci against pullback)
//   pullback_sq = tr((G^-1 P)^2) = |phi* h|^2  (in any g-orthonormal frame)
//   target_term = R^N_abcd W_ac W_bd with W = D G^-1 D^T.
struct QPieces {
  double ricci_term = 0.0;
  double pullback_sq = 0.0;
  double target_term = 0.0;
};

QPieces q_pieces(const MapModel& map, const ChartPoint& p) {
  const ManifoldModel& src = map.source();
  const ManifoldModel& tgt = map.target();

  const Matrix ginv = src.metric_inverse(p);
  const Matrix ric = ricci(src, p);
  const Matrix pull = pullback_metric(map, p);

  QPieces out;
  out.ricci_term = (ginv * ric * ginv * pull).trace();
  const Matrix gp = ginv * pull;
  out.pullback_sq = (gp * gp).trace();

  const ChartPoint raw = map.eval(p);
  const ChartPoint image = tgt.transition(raw, tgt.preferred_chart(raw));
  const Matrix d = differential(map, p);
  const Tensor4 rn = riemann(tgt, image);
  const Matrix w = d * ginv * d.transpose();
  const int n = tgt.dim();
  double t2 = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) t2 += rn(a, b, c, e) * w(a, c) * w(b, e);
  out.target_term = t2;
  return out;
}

// Plane curvature for a pair whose images are h-degenerate: keep whichever
// image still has h-length (Y_i first), fall back to the first coordinate
// direction, then complete with the first coordinate direction whose
// h-orthogonal residual survives. Returns the recorded completion index.
int degenerate_plane_curvature(const Matrix& Y, const Matrix& H, const Tensor4& rn, int i, int j,
                               double length_floor, double* kappa_out) {
  const int n = static_cast<int>(Y.rows());
  if (n < 2) {
    *kappa_out = 0.0;
    return -2;
  }

  Vector u;
  const double cii = Y.col(i).dot(H * Y.col(i));
  const double cjj = Y.col(j).dot(H * Y.col(j));
  if (cii > length_floor) {
    u = Y.col(i);
  } else if (cjj > length_floor) {
    u = Y.col(j);
  } else {
    u = Vector::Unit(n, 0);
  }

  const double uu = u.dot(H * u);
  for (int k = 0; k < n; ++k) {
    const Vector ek = Vector::Unit(n, k);
    const Vector w = ek - (ek.dot(H * u) / uu) * u;
    const double ww = w.dot(H * w);
    if (ww > kPlaneDegeneracyFactor * H(k, k)) {
      *kappa_out = sectional_from_tensor(rn, H, u, w);
      return k;
    }
  }
  throw DegeneratePlaneError("no h-independent completion direction found");
}

bool axis_periodic(const Chart& chart, const GridSpec& grid, int d) {
  if (chart.periods.size() <= d) return false;
  const double per = chart.periods(d);
  if (per <= 0.0) return false;
  const double span = grid.shape(d) * grid.spacing;
  return std::abs(span - per) <= 1e-9 * per;
}

void validate_grid(const ManifoldModel& src, const GridSpec& grid) {
  const int m = src.dim();
  if (grid.chart < 0 || grid.chart >= src.chart_count())
    throw ConfigError("grid chart index out of range");
  if (grid.shape.size() != m || grid.origin.size() != m)
    throw ConfigError("grid shape/origin must match the source dimension");
  if (!(grid.spacing > 0.0)) throw ConfigError("grid spacing must be positive");
  for (int d = 0; d < m; ++d)
    if (grid.shape(d) < 1) throw ConfigError("grid shape entries must be >= 1");
}

void require_stencil_room(const GridSpec& grid) {
  for (int d = 0; d < grid.shape.size(); ++d)
    if (grid.shape(d) < 3)
      throw ResolutionError("grid too coarse for second-order stencils: axis " +
                            std::to_string(d) + " has " + std::to_string(grid.shape(d)) +
                            " nodes, need at least 3");
}

std::vector<int> unflatten(const GridSpec& grid, std::size_t flat) {
  const int m = static_cast<int>(grid.shape.size());
  std::vector<int> idx(m);
  for (int d = m - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % grid.shape(d));
    flat /= grid.shape(d);
  }
  return idx;
}

std::size_t flatten(const GridSpec& grid, const std::vector<int>& idx) {
  std::size_t flat = 0;
  for (int d = 0; d < static_cast<int>(idx.size()); ++d)
    flat = flat * grid.shape(d) + static_cast<std::size_t>(idx[d]);
  return flat;
}

// Node shifted along up to two axes, wrapping periodic ones; caller
// guarantees in-range offsets on aperiodic axes.
std::size_t shifted_node(const GridSpec& grid, const std::vector<bool>& periodic,
                         std::vector<int> idx, int d, int sd, int e = -1, int se = 0) {
  idx[d] += sd;
  if (e >= 0) idx[e] += se;
  for (int a = 0; a < static_cast<int>(idx.size()); ++a) {
    if (!periodic[a]) continue;
    const int s = grid.shape(a);
    idx[a] = ((idx[a] % s) + s) % s;
  }
  return flatten(grid, idx);
}

}  // namespace

double q_term(const MapModel& map, const ChartPoint& p) {
  const QPieces pieces = q_pieces(map, p);
  return pieces.ricci_term - pieces.target_term;
}

std::pair<double, double> q_split(const MapModel& map, const ChartPoint& p, double K) {
  const QPieces pieces = q_pieces(map, p);
  const double cross = (map.source().dim() - 1) * K * pieces.pullback_sq;
  return {pieces.ricci_term - cross, cross - pieces.target_term};
}

FrameData frame_data_from_images(const Matrix& Y, const Matrix& H, const Tensor4& riemann_target) {
  const int m = static_cast<int>(Y.cols());
  FrameData fd;
  fd.frame = Matrix::Identity(m, m);
  fd.images = Y;
  Matrix c = Y.transpose() * H * Y;
  fd.gram = 0.5 * (c + c.transpose());
  fd.plane_curvatures = Matrix::Zero(m, m);
  fd.completion = Eigen::MatrixXi::Constant(m, m, -1);

  const double trace_scale = std::max(fd.gram.trace(), 0.0);
  const double length_floor = (trace_scale > 0.0 ? trace_scale : 1.0) * 1e-13;

  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double cii = fd.gram(i, i);
      const double cjj = fd.gram(j, j);
      const double cij = fd.gram(i, j);
      const double gram_det = cii * cjj - cij * cij;
      double kappa = 0.0;
      int chosen = -1;
      if (i != j && gram_det > kPlaneDegeneracyFactor * cii * cjj && cii > 0.0 && cjj > 0.0) {
        kappa = sectional_from_tensor(riemann_target, H, Y.col(i), Y.col(j));
      } else {
        chosen = degenerate_plane_curvature(Y, H, riemann_target, i, j, length_floor, &kappa);
      }
      fd.plane_curvatures(i, j) = kappa;
      fd.plane_curvatures(j, i) = kappa;
      fd.completion(i, j) = chosen;
      fd.completion(j, i) = chosen;
    }
  }
  return fd;
}

FrameData frame_data(const MapModel& map, const ChartPoint& p) {
  const ManifoldModel& src = map.source();
  const ManifoldModel& tgt = map.target();
  const int m = src.dim();
  const Matrix g = src.metric(p);

  // Modified Gram-Schmidt on the coordinate basis, pivoting on the largest
  // remaining g-norm. g is validated positive definite elsewhere, so every
  // pivot keeps a usable norm.
  Matrix residuals = Matrix::Identity(m, m);
  std::vector<int> remaining(m);
  std::iota(remaining.begin(), remaining.end(), 0);
  Matrix frame(m, m);
  std::vector<int> pivots;
  pivots.reserve(m);
  for (int step = 0; step < m; ++step) {
    int best_pos = 0;
    double best_norm = -1.0;
    for (int pos = 0; pos < static_cast<int>(remaining.size()); ++pos) {
      const Vector& v = residuals.col(remaining[pos]);
      const double nrm = v.dot(g * v);
      if (nrm > best_norm) {
        best_norm = nrm;
        best_pos = pos;
      }
    }
    const int d = remaining[best_pos];
    if (!(best_norm > 0.0))
      throw ConditioningError("orthonormal frame construction hit a zero g-norm pivot");
    const Vector e = residuals.col(d) / std::sqrt(best_norm);
    frame.col(step) = e;
    pivots.push_back(d);
    remaining.erase(remaining.begin() + best_pos);
    const Vector ge = g * e;
    for (int d2 : remaining) residuals.col(d2) -= residuals.col(d2).dot(ge) * e;
  }

  const ChartPoint raw = map.eval(p);
  const ChartPoint image = tgt.transition(raw, tgt.preferred_chart(raw));
  const Matrix d = differential(map, p);
  const Matrix h = tgt.metric(image);
  const Tensor4 rn = riemann(tgt, image);

  FrameData fd = frame_data_from_images(d * frame, h, rn);
  fd.frame = frame;
  fd.pivot_order = std::move(pivots);
  return fd;
}

double q1_frame_value(const Matrix& c, const Matrix& kappa, double K) {
  const int m = static_cast<int>(c.rows());
  if (kappa.rows() != m || kappa.cols() != m || c.cols() != m)
    throw ValidationError("gram and curvature matrices must be square of equal size");
  double curv = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      curv += kappa(i, j) * (c(i, i) * c(j, j) - c(i, j) * c(i, j));
  return (m - 1) * K * c.squaredNorm() - curv;
}

std::pair<double, FrameData> q1_frame_form(const MapModel& map, const ChartPoint& p, double K) {
  FrameData fd = frame_data(map, p);
  const double value = q1_frame_value(fd.gram, fd.plane_curvatures, K);
  return {value, std::move(fd)};
}

std::vector<Q1Summand> q1_sum_terms(const Matrix& c, const Matrix& kappa, double K) {
  const int m = static_cast<int>(c.rows());
  if (kappa.rows() != m || kappa.cols() != m || c.cols() != m)
    throw ValidationError("gram and curvature matrices must be square of equal size");
  std::vector<Q1Summand> terms;
  terms.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      Q1Summand t;
      t.i = i;
      t.j = j;
      const double diff = c(i, i) - c(j, j);
      t.diag_spread = K * diff * diff;
      t.mixed = 2.0 * (K - kappa(i, j)) * c(i, i) * c(j, j);
      t.cross = 2.0 * ((m - 1) * K + kappa(i, j)) * c(i, j) * c(i, j);
      t.total = t.diag_spread + t.mixed + t.cross;
      terms.push_back(t);
    }
  }
  return terms;
}

double q1_sum_form(const Matrix& c, const Matrix& kappa, double K) {
  double sum = 0.0;
  for (const Q1Summand& t : q1_sum_terms(c, kappa, K)) sum += t.total;
  return sum;
}

double ScalarField::sup_abs() const {
  double sup = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (defined[k]) sup = std::max(sup, std::abs(values[k]));
  return sup;
}

std::size_t grid_size(const GridSpec& grid) {
  std::size_t total = 1;
  for (int d = 0; d < grid.shape.size(); ++d) total *= static_cast<std::size_t>(grid.shape(d));
  return total;
}

ChartPoint grid_point(const GridSpec& grid, std::size_t flat) {
  const std::vector<int> idx = unflatten(grid, flat);
  Vector x = grid.origin;
  for (int d = 0; d < static_cast<int>(idx.size()); ++d) x(d) += grid.spacing * idx[d];
  return {grid.chart, std::move(x)};
}

ScalarField energy_density_field(const MapModel& map, const GridSpec& grid) {
  validate_grid(map.source(), grid);
  ScalarField field;
  field.grid = grid;
  const std::size_t total = grid_size(grid);
  field.values.resize(total);
  field.defined.assign(total, 1);
  for (std::size_t k = 0; k < total; ++k)
    field.values[k] = energy_density(map, grid_point(grid, k));
  return field;
}

ScalarField laplacian_energy_density(const MapModel& map, const GridSpec& grid) {
  const ManifoldModel& src = map.source();
  validate_grid(src, grid);
  require_stencil_room(grid);

  const int m = src.dim();
  const Chart& chart = src.chart(grid.chart);
  std::vector<bool> periodic(m);
  for (int d = 0; d < m; ++d) periodic[d] = axis_periodic(chart, grid, d);

  const ScalarField energy = energy_density_field(map, grid);
  const std::size_t total = grid_size(grid);

  ScalarField lap;
  lap.grid = grid;
  lap.values.assign(total, 0.0);
  lap.defined.assign(total, 0);

  const double h = grid.spacing;
  const double inv2h = 1.0 / (2.0 * h);
  const double invh2 = 1.0 / (h * h);

  std::size_t computed = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    const std::vector<int> idx = unflatten(grid, flat);
    bool interior = true;
    for (int d = 0; d < m && interior; ++d)
      if (!periodic[d] && (idx[d] < 1 || idx[d] > grid.shape(d) - 2)) interior = false;
    if (!interior) continue;

    Vector grad(m);
    Matrix hess(m, m);
    const double f0 = energy.values[flat];
    for (int d = 0; d < m; ++d) {
      const double fp = energy.values[shifted_node(grid, periodic, idx, d, +1)];
      const double fm = energy.values[shifted_node(grid, periodic, idx, d, -1)];
      grad(d) = (fp - fm) * inv2h;
      hess(d, d) = (fp - 2.0 * f0 + fm) * invh2;
    }
    for (int d = 0; d < m; ++d) {
      for (int e = d + 1; e < m; ++e) {
        const double fpp = energy.values[shifted_node(grid, periodic, idx, d, +1, e, +1)];
        const double fpm = energy.values[shifted_node(grid, periodic, idx, d, +1, e, -1)];
        const double fmp = energy.values[shifted_node(grid, periodic, idx, d, -1, e, +1)];
        const double fmm = energy.values[shifted_node(grid, periodic, idx, d, -1, e, -1)];
        const double mixed = (fpp - fpm - fmp + fmm) * invh2 * 0.25;
        hess(d, e) = mixed;
        hess(e, d) = mixed;
      }
    }

    const ChartPoint pt = grid_point(grid, flat);
    const Matrix ginv = src.metric_inverse(pt);
    const std::vector<Matrix> gamma = christoffel(src, pt);
    double value = (ginv.array() * hess.array()).sum();
    for (int k = 0; k < m; ++k) value -= (ginv.array() * gamma[k].array()).sum() * grad(k);
    lap.values[flat] = value;
    lap.defined[flat] = 1;
    ++computed;
  }

  if (computed == 0)
    throw ResolutionError("no interior grid nodes left for the Laplacian stencil");
  return lap;
}

BochnerScan bochner_residual(const MapModel& map, const GridSpec& grid, double K,
                             double harmonicity_tol) {
  const ManifoldModel& src = map.source();
  validate_grid(src, grid);
  require_stencil_room(grid);

  const std::size_t total = grid_size(grid);
  double sup_tau = 0.0;
  for (std::size_t k = 0; k < total; ++k)
    sup_tau = std::max(sup_tau, tension_norm(map, grid_point(grid, k)));
  if (!(sup_tau <= harmonicity_tol))
    throw PreconditionError("bochner residual needs a harmonic map: sup|tau|_h = " +
                                std::to_string(sup_tau) + " exceeds tolerance " +
                                std::to_string(harmonicity_tol),
                            sup_tau);

  const ScalarField lap = laplacian_energy_density(map, grid);

  BochnerScan scan;
  scan.grid = grid;
  scan.sup_tension = sup_tau;
  for (std::size_t k = 0; k < total; ++k) {
    if (!lap.defined[k]) continue;
    BochnerReport rep;
    rep.point = grid_point(grid, k);
    rep.energy_density = energy_density(map, rep.point);
    rep.sff_norm_sq = second_fundamental_form(map, rep.point).norm_sq;
    const QPieces pieces = q_pieces(map, rep.point);
    rep.q = pieces.ricci_term - pieces.target_term;
    const double cross = (src.dim() - 1) * K * pieces.pullback_sq;
    rep.q0 = pieces.ricci_term - cross;
    rep.q1 = cross - pieces.target_term;
    rep.laplacian_energy = lap.values[k];
    rep.residual = 0.5 * rep.laplacian_energy - rep.sff_norm_sq - rep.q;
    scan.sup_residual = std::max(scan.sup_residual, std::abs(rep.residual));
    scan.reports.push_back(std::move(rep));
  }
  return scan;
}

}  // namespace harmap
