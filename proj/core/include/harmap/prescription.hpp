#pragma once

#include <cstddef>
#include <vector>

#include "harmap/map_model.hpp"

namespace harmap {

// A candidate harmonic-Einstein structure: the map carries both metrics,
// so g and h are always chart compatible by construction; alpha and lambda
// are the structure constants.
struct StructureSpec {
  MapModel phi;
  double alpha = 1.0;  // must be nonzero
  double lambda = 0.0;

  const ManifoldModel& g() const { return phi.source(); }
  const ManifoldModel& h() const { return phi.target(); }
};

// Pointwise residual magnitudes over a sample set, with the sup and the
// index of the worst offender.
struct ResidualField {
  double sup = 0.0;
  std::vector<double> values;
  std::size_t worst_index = 0;
};

// sup over samples of the g-operator norm of Ric_g - alpha phi*h - lambda g.
ResidualField harmonic_einstein_residual(const StructureSpec& spec,
                                         const std::vector<ChartPoint>& sample_points);

// sup over samples of the g-norm of the covector X_i = h_ab tau^a dphi^b_i;
// vanishes wherever the map is harmonic.
ResidualField conservativity_residual(const StructureSpec& spec,
                                      const std::vector<ChartPoint>& sample_points);

// sup over samples of the g-operator norm of Ric_g - c h, for two metrics
// sharing one chart space. Requires c > 0 and h positive definite.
ResidualField prescribed_ricci_residual(const ManifoldModel& g, const ManifoldModel& h, double c,
                                        const std::vector<ChartPoint>& sample_points);

// mu is the trace-mean of h^{-1} g over the samples; the residual is the
// worst g-operator norm of g - mu h relative to the g-operator norm of g.
struct HomothetyFit {
  double mu = 0.0;
  double residual = 0.0;
};
HomothetyFit homothety_fit(const ManifoldModel& g, const ManifoldModel& h,
                           const std::vector<ChartPoint>& sample_points);

}  // namespace harmap
