#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "harmap/errors.hpp"
#include "harmap/tensor.hpp"

namespace harmap {

// A point expressed in one chart of a manifold.
struct ChartPoint {
  int chart = 0;
  Vector x;

  ChartPoint() = default;
  ChartPoint(int c, Vector coords) : chart(c), x(std::move(coords)) {}
};

// One coordinate chart: a domain predicate, the metric field, optional
// analytic metric derivatives, and per-axis periods (0 = aperiodic axis).
// Metrics returned by `metric` must be exactly symmetric.
struct Chart {
  std::function<bool(const Vector&)> in_domain;
  std::function<Matrix(const Vector&)> metric;
  std::function<Matrix(const Vector&, int)> metric_d;        // d_k g, optional
  std::function<Matrix(const Vector&, int, int)> metric_dd;  // d_k d_l g, optional
  Vector periods;                                            // size m, 0 entries = aperiodic
};

enum class ManifoldKind { FlatTorus, RoundSphere, HyperbolicDisk, Product, Custom };

// A model Riemannian manifold given by explicit charts. Immutable after
// construction; all evaluations are pure functions of (manifold, point).
class ManifoldModel {
public:
  // Flat torus R^m / (B Z^m). Chart coordinates are unit-cell coordinates,
  // so the metric is the constant matrix B^T B and every axis has period 1.
  static ManifoldModel flat_torus(const Matrix& lattice_basis);
  static ManifoldModel flat_torus(int dim) { return flat_torus(Matrix::Identity(dim, dim)); }
  // Circle of circumference `circumference` (1-dimensional flat torus with
  // chart coordinate of period `circumference`).
  static ManifoldModel circle(double circumference);

  // Round sphere of radius r with two antipodal stereographic charts.
  // Chart 0 projects from the north pole, chart 1 from the south pole;
  // both have the conformal metric 4 r^4 / (r^2 + |x|^2)^2 * Id.
  static ManifoldModel round_sphere(int dim, double radius);

  // Poincare disk of scale a: metric 4 a^4 / (a^2 - |x|^2)^2 * Id on |x| < a,
  // constant sectional curvature -1/a^2.
  static ManifoldModel hyperbolic_disk(int dim, double scale);

  static ManifoldModel product(const ManifoldModel& a, const ManifoldModel& b);

  static ManifoldModel custom(int dim, Chart chart,
                              std::function<ChartPoint(Rng&)> sampler = nullptr);

  int dim() const { return dim_; }
  ManifoldKind kind() const { return kind_; }
  int chart_count() const { return static_cast<int>(charts_.size()); }
  const Chart& chart(int i) const { return charts_.at(i); }

  // Builtin parameters (meaningful for the corresponding kinds only).
  double radius() const { return radius_; }
  double disk_scale() const { return radius_; }
  double metric_scale() const { return scale_; }
  const ManifoldModel& factor(int i) const;

  bool in_domain(const ChartPoint& p) const;

  // Metric and derivatives at a point. Derivatives use the analytic
  // callbacks when present and central finite differences otherwise.
  Matrix metric(const ChartPoint& p) const;
  Matrix metric_inverse(const ChartPoint& p) const;  // checks conditioning
  Matrix metric_d(const ChartPoint& p, int k) const;
  Matrix metric_dd(const ChartPoint& p, int k, int l) const;

  // Chart management. preferred_chart keeps stereographic coordinates
  // well-conditioned by swapping hemispheres at |x| > 1.5 r.
  int preferred_chart(const ChartPoint& p) const;
  ChartPoint transition(const ChartPoint& p, int to_chart) const;
  Matrix transition_jacobian(const ChartPoint& p, int to_chart) const;
  // hessian[a](i,j) = second partials of the transition's a-th component.
  std::vector<Matrix> transition_hessian(const ChartPoint& p, int to_chart) const;

  // Reduce periodic axes into [0, period).
  Vector canonical_coords(int chart, const Vector& x) const;

  ChartPoint sample_point(Rng& rng) const;

  // Same charts, metric multiplied by the constant c > 0.
  ManifoldModel scaled(double c) const;

  // Copy with analytic metric-derivative callbacks dropped and the given
  // finite-difference steps, for derivative-convergence studies.
  ManifoldModel fd_variant(double step1, double step2) const;

  double fd_step1() const { return fd_step1_; }
  double fd_step2() const { return fd_step2_; }
  void set_fd_steps(double h1, double h2) { fd_step1_ = h1; fd_step2_ = h2; }

  // Condition-number threshold for metric inversion.
  static constexpr double kConditionLimit = 1e8;

private:
  ManifoldModel() = default;

  int dim_ = 0;
  ManifoldKind kind_ = ManifoldKind::Custom;
  std::vector<Chart> charts_;
  double radius_ = 0.0;  // sphere radius or disk scale
  double scale_ = 1.0;   // constant metric multiplier applied by scaled()
  double fd_step1_ = 1e-5;
  double fd_step2_ = 1e-4;
  std::function<ChartPoint(Rng&)> sampler_;
  std::shared_ptr<const ManifoldModel> factor_a_, factor_b_;  // product factors
};

}  // namespace harmap
