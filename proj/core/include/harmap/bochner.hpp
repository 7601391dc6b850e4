#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "harmap/curvature.hpp"
#include "harmap/manifold.hpp"
#include "harmap/map_model.hpp"
#include "harmap/tensor.hpp"

namespace harmap {

// A g-orthonormal frame at a source point together with the image vectors
// Y_i = dphi(e_i), their h-Gram matrix, and the target plane curvatures
// entering the frame form of Q1. Built once per point and reused by the
// frame-form evaluation and its checks.
struct FrameData {
  Matrix frame;   // m x m, column i is e_i (source chart components)
  Matrix images;  // n x m, column i is Y_i (preferred target chart components)
  Matrix gram;    // c_ij = h(Y_i, Y_j), symmetric PSD
  // kappa_ij = target sectional value of the plane picked for the pair (i,j).
  Matrix plane_curvatures;
  // Plane choice per pair: -1 means the genuine span(Y_i, Y_j) was usable;
  // k >= 0 means the pair was h-degenerate and the plane was completed with
  // target coordinate direction k (smallest admissible index); -2 means the
  // target has no 2-plane at all (n = 1) and kappa was set to zero. Diagonal
  // pairs are always degenerate, so the diagonal records completions too.
  // Degenerate pairs never contribute: their c_ii c_jj - c_ij^2 weight is 0.
  Eigen::MatrixXi completion;
  // Coordinate direction chosen at each Gram-Schmidt pivot step.
  std::vector<int> pivot_order;
};

// One (i,j) term of the pairwise sum form of Q1, split into the three
// displayed pieces. total = diag_spread + mixed + cross.
struct Q1Summand {
  int i = 0, j = 0;          // 0-based, i < j
  double diag_spread = 0.0;  // K (c_ii - c_jj)^2
  double mixed = 0.0;        // 2 (K - kappa_ij) c_ii c_jj
  double cross = 0.0;        // 2 ((m-1) K + kappa_ij) c_ij^2
  double total = 0.0;
};

// Curvature term of the Bochner identity for harmonic maps,
//   Q = g^{ik} g^{jl} h_ab Ric_ij phi^a_k phi^b_l
//     - g^{ik} g^{jl} R^N_abcd phi^a_i phi^b_j phi^c_k phi^d_l,
// evaluated by direct coordinate contractions.
double q_term(const MapModel& map, const ChartPoint& p);

// (Q0, Q1) split of q_term obtained by adding and subtracting the
// (m-1) K |phi* h|^2 cross term: Q0 pairs Ric - (m-1) K phi*h against the
// pullback, Q1 keeps the remainder. Q0 + Q1 = Q for every K.
std::pair<double, double> q_split(const MapModel& map, const ChartPoint& p, double K);

// Frame construction: modified Gram-Schmidt on the coordinate basis with
// respect to g, pivoting on the largest remaining g-norm.
FrameData frame_data(const MapModel& map, const ChartPoint& p);

// Same pair data for explicit image vectors Y (n x m) under a target metric
// H and target curvature tensor R; frame is the identity. Lets callers feed
// synthetic differentials expressed in orthonormal frames.
FrameData frame_data_from_images(const Matrix& Y, const Matrix& H, const Tensor4& riemann_target);

// Q1 evaluated on raw frame data:
//   (m-1) K sum_ij c_ij^2 - sum_ij kappa_ij (c_ii c_jj - c_ij^2).
double q1_frame_value(const Matrix& c, const Matrix& kappa, double K);

// Frame form of Q1 at a point; the returned FrameData records the frame and
// every plane choice that went into the kappa values.
std::pair<double, FrameData> q1_frame_form(const MapModel& map, const ChartPoint& p, double K);

// Pairwise sum form of Q1,
//   sum_{i<j} [ K (c_ii - c_jj)^2 + 2 (K - kappa_ij) c_ii c_jj
//               + 2 ((m-1) K + kappa_ij) c_ij^2 ],
// algebraically equal to q1_frame_value on the same (c, kappa, K).
std::vector<Q1Summand> q1_sum_terms(const Matrix& c, const Matrix& kappa, double K);
double q1_sum_form(const Matrix& c, const Matrix& kappa, double K);

// Uniform grid in one chart of the source manifold: node (i_0, .., i_{m-1})
// sits at origin + spacing * i, 0 <= i_d < shape_d. An axis is treated as
// periodic (stencils wrap) exactly when the chart has a period there and
// shape_d * spacing matches it.
struct GridSpec {
  int chart = 0;
  Vector origin;
  Eigen::VectorXi shape;
  double spacing = 0.0;
};

// Scalar samples over a GridSpec, flattened row-major (last axis fastest).
// Stencil-derived fields leave boundary nodes of aperiodic axes undefined.
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
  std::vector<std::uint8_t> defined;

  double sup_abs() const;  // over defined nodes
};

std::size_t grid_size(const GridSpec& grid);
ChartPoint grid_point(const GridSpec& grid, std::size_t flat);

ScalarField energy_density_field(const MapModel& map, const GridSpec& grid);

// Laplace-Beltrami of |dphi|^2 via second-order stencils on the energy field
// and analytic metric data per node:
//   lap f = g^{de} (d_d d_e f - Gamma^k_de d_k f).
// On flat unit charts this is the coordinate Laplacian. Throws
// ResolutionError when any axis has fewer than 3 nodes or no interior
// survives.
ScalarField laplacian_energy_density(const MapModel& map, const GridSpec& grid);

// Bochner identity terms at one grid node. residual is
//   (1/2) laplacian_energy - sff_norm_sq - q,
// which vanishes for exactly harmonic maps.
struct BochnerReport {
  ChartPoint point;
  double energy_density = 0.0;
  double sff_norm_sq = 0.0;
  double q = 0.0;
  double q0 = 0.0;
  double q1 = 0.0;
  double laplacian_energy = 0.0;
  double residual = 0.0;
};

struct BochnerScan {
  GridSpec grid;
  std::vector<BochnerReport> reports;  // nodes where the Laplacian stencil exists
  double sup_residual = 0.0;
  double sup_tension = 0.0;  // over all grid nodes
};

// Evaluates the Bochner identity over the grid. The identity only holds for
// harmonic maps, so sup|tau|_h over the grid is checked first; a violation
// throws PreconditionError carrying that sup. K picks the recorded Q0/Q1
// split and nothing else.
BochnerScan bochner_residual(const MapModel& map, const GridSpec& grid, double K = 0.0,
                             double harmonicity_tol = 1e-6);

}  // namespace harmap
