#include "harmap/prescription.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "harmap/curvature.hpp"
#include "harmap/errors.hpp"

namespace harmap {
namespace {

// Largest |generalized eigenvalue| of the pencil (sym(a), g); this is the
// operator norm of g^{-1} a and is chart independent.
double operator_norm_against(const Matrix& a, const Matrix& g) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(sym, g);
  if (solver.info() != Eigen::Success) {
    throw ConditioningError("operator norm: generalized eigensolve failed");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void require_samples(const std::vector<ChartPoint>& pts, const char* what) {
  if (pts.empty()) {
    throw ValidationError(std::string(what) + ": sample set is empty");
  }
}

void require_shared_chart_space(const ManifoldModel& g, const ManifoldModel& h,
                                const char* what) {
  if (g.dim() != h.dim()) {
    throw ValidationError(std::string(what) + ": metrics live on different dimensions");
  }
  if (g.chart_count() != h.chart_count()) {
    throw ValidationError(std::string(what) + ": metrics do not share a chart space");
  }
}

ResidualField collect_sup(std::vector<double> values) {
  ResidualField field;
  field.values = std::move(values);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (field.values[i] > field.sup) {
      field.sup = field.values[i];
      field.worst_index = i;
    }
  }
  return field;
}

}  // namespace

ResidualField harmonic_einstein_residual(const StructureSpec& spec,
                                         const std::vector<ChartPoint>& sample_points) {
  require_samples(sample_points, "harmonic_einstein_residual");
  if (spec.alpha == 0.0) {
    throw ValidationError("harmonic_einstein_residual: alpha must be nonzero");
  }
  const ManifoldModel& g = spec.phi.source();
  std::vector<double> values;
  values.reserve(sample_points.size());
  for (const ChartPoint& p : sample_points) {
    const Matrix gm = g.metric(p);
    const Matrix residual =
        ricci(g, p) - spec.alpha * pullback_metric(spec.phi, p) - spec.lambda * gm;
    values.push_back(operator_norm_against(residual, gm));
  }
  return collect_sup(std::move(values));
}

ResidualField conservativity_residual(const StructureSpec& spec,
                                      const std::vector<ChartPoint>& sample_points) {
  require_samples(sample_points, "conservativity_residual");
  if (spec.alpha == 0.0) {
    throw ValidationError("conservativity_residual: alpha must be nonzero");
  }
  const ManifoldModel& g = spec.phi.source();
  const ManifoldModel& target = spec.phi.target();
  std::vector<double> values;
  values.reserve(sample_points.size());
  for (const ChartPoint& p : sample_points) {
    // tau and dphi are both expressed in the preferred chart at the image,
    // so h must be read off at that same representative.
    ChartPoint q = spec.phi.eval(p);
    const int tc = target.preferred_chart(q);
    if (tc != q.chart) q = target.transition(q, tc);
    const Matrix h = target.metric(q);
    const Matrix d = differential(spec.phi, p);
    const Vector tau = tension_field(spec.phi, p);
    const Vector x = d.transpose() * (h * tau);
    const double norm_sq = x.dot(g.metric_inverse(p) * x);
    values.push_back(std::sqrt(std::max(0.0, norm_sq)));
  }
  return collect_sup(std::move(values));
}

ResidualField prescribed_ricci_residual(const ManifoldModel& g, const ManifoldModel& h, double c,
                                        const std::vector<ChartPoint>& sample_points) {
  require_samples(sample_points, "prescribed_ricci_residual");
  if (!(c > 0.0)) {
    throw ValidationError("prescribed_ricci_residual: c must be positive");
  }
  require_shared_chart_space(g, h, "prescribed_ricci_residual");
  std::vector<double> values;
  values.reserve(sample_points.size());
  for (const ChartPoint& p : sample_points) {
    const Matrix hm = h.metric(p);
    Eigen::SelfAdjointEigenSolver<Matrix> probe(hm);
    if (probe.eigenvalues().minCoeff() <= 0.0) {
      throw ValidationError("prescribed_ricci_residual: h is not positive definite at a sample");
    }
    const Matrix residual = ricci(g, p) - c * hm;
    values.push_back(operator_norm_against(residual, g.metric(p)));
  }
  return collect_sup(std::move(values));
}

HomothetyFit homothety_fit(const ManifoldModel& g, const ManifoldModel& h,
                           const std::vector<ChartPoint>& sample_points) {
  require_samples(sample_points, "homothety_fit");
  require_shared_chart_space(g, h, "homothety_fit");
  const int m = g.dim();
  double trace_mean = 0.0;
  for (const ChartPoint& p : sample_points) {
    trace_mean += (h.metric_inverse(p) * g.metric(p)).trace() / m;
  }
  HomothetyFit fit;
  fit.mu = trace_mean / static_cast<double>(sample_points.size());
  for (const ChartPoint& p : sample_points) {
    const Matrix gm = g.metric(p);
    const double deviation = operator_norm_against(gm - fit.mu * h.metric(p), gm);
    const double scale = operator_norm_against(gm, gm);  // identically 1, kept explicit
    fit.residual = std::max(fit.residual, deviation / scale);
  }
  return fit;
}

}  // namespace harmap
