#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "harmap/manifold.hpp"
#include "harmap/tensor.hpp"

namespace harmap {

enum class MapKind { Constant, Identity, LinearTorus, EquatorInclusion, SinPerturbed, Custom };

// A smooth map between chart manifolds, given by a chart-to-chart coordinate
// expression plus optional analytic first and second derivative callbacks.
// Derivative callbacks are expressed in the chart pair chart_map itself uses;
// evaluation routines re-express everything in the preferred target chart.
class MapModel {
public:
  using ChartMapFn = std::function<ChartPoint(const ChartPoint&)>;
  using DiffFn = std::function<Matrix(const ChartPoint&)>;                 // n x m
  using HessFn = std::function<std::vector<Matrix>(const ChartPoint&)>;   // [a](i,j)

  static MapModel constant_map(const ManifoldModel& source, const ManifoldModel& target,
                               const ChartPoint& value);
  // Same chart coordinates on both sides; source and target must share
  // chart structure (same manifold, or one a metric rescaling of the other).
  static MapModel identity_map(const ManifoldModel& source, const ManifoldModel& target);
  // x -> A x between flat tori in unit-cell coordinates. A should have
  // integer entries for the map to descend to the torus.
  static MapModel linear_torus(const ManifoldModel& source, const ManifoldModel& target,
                               const Matrix& A);
  // t -> (r cos t, r sin t): the equator great circle of a round 2-sphere of
  // radius r, from the circle of circumference 2 pi.
  static MapModel equator_inclusion(double radius);
  // x -> x + amplitude * sin(2 pi x_{a+1 mod m}) per component, flat torus to
  // flat torus. Nonharmonic for amplitude != 0; handy as a flow seed.
  static MapModel sin_perturbed(const ManifoldModel& source, const ManifoldModel& target,
                                double amplitude);
  static MapModel custom(const ManifoldModel& source, const ManifoldModel& target,
                         ChartMapFn chart_map, DiffFn dmap = nullptr,
                         HessFn ddmap = nullptr);

  const ManifoldModel& source() const { return *source_; }
  const ManifoldModel& target() const { return *target_; }
  MapKind kind() const { return kind_; }

  // Raw image in the chart pair the map is written in.
  ChartPoint eval(const ChartPoint& p) const;
  // Image coordinates re-expressed in the requested target chart.
  Vector eval_in(const ChartPoint& p, int target_chart) const;

  bool has_analytic_differential() const { return static_cast<bool>(dmap_); }
  bool has_analytic_hessian() const { return static_cast<bool>(ddmap_); }
  const DiffFn& dmap() const { return dmap_; }
  const HessFn& ddmap() const { return ddmap_; }

  double fd_step1() const { return fd_step1_; }
  double fd_step2() const { return fd_step2_; }

  // Copy with analytic derivative callbacks dropped and the given
  // finite-difference steps.
  MapModel fd_variant(double step1, double step2) const;
  // Same map into a metrically rescaled target.
  MapModel with_target(const ManifoldModel& target) const;

private:
  MapModel() = default;

  std::shared_ptr<const ManifoldModel> source_, target_;
  MapKind kind_ = MapKind::Custom;
  ChartMapFn chart_map_;
  DiffFn dmap_;
  HessFn ddmap_;
  double fd_step1_ = 1e-5;
  double fd_step2_ = 1e-4;
};

// SFF of the map at a point: tensor[a](i,j) = (nabla dphi)^a_ij, symmetric
// in i,j; norm_sq is the full g^{-1} g^{-1} h contraction with itself.
struct SecondFundamentalForm {
  ChartPoint point;
  ChartPoint image;                // in the chart the tensor is expressed in
  std::vector<Matrix> tensor;
  double norm_sq = 0.0;

  double max_abs() const {
    double v = 0.0;
    for (const auto& t : tensor) v = std::max(v, t.cwiseAbs().maxCoeff());
    return v;
  }
};

// d phi as an n x m matrix in the preferred target chart at the image.
Matrix differential(const MapModel& map, const ChartPoint& p);

// (phi* h)_ij = h_ab phi^a_i phi^b_j; symmetric PSD.
Matrix pullback_metric(const MapModel& map, const ChartPoint& p);

// |dphi|^2 = g^{ij} h_ab phi^a_i phi^b_j, contracted with explicit loops
// (kept independent of the pullback-trace route on purpose).
double energy_density(const MapModel& map, const ChartPoint& p);

SecondFundamentalForm second_fundamental_form(const MapModel& map, const ChartPoint& p);

// tau^a = g^{ij} (nabla dphi)^a_ij; zero iff harmonic at the point.
Vector tension_field(const MapModel& map, const ChartPoint& p);
// |tau|_h, the target-metric length of the tension field.
double tension_norm(const MapModel& map, const ChartPoint& p);

// Differential expressed in g- and h-orthonormal frames (Cholesky frames);
// singular values of the result are chart independent.
Matrix frame_differential(const MapModel& map, const ChartPoint& p);

int rank_at(const MapModel& map, const ChartPoint& p, double rel_tol = 1e-8);

// Smallest generalized eigenvalue of Ric_g - (m-1) K phi*h against g;
// nonnegative iff the Ricci lower bound holds at the point.
double ricci_lower_bound_residual(const MapModel& map, const ChartPoint& p, double K);

}  // namespace harmap
