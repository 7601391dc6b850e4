#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "harmap/bochner.hpp"
#include "harmap/tensor.hpp"

namespace harmap {

// Synthetic pointwise data for the sign lemmas: a differential expressed in
// orthonormal frames on both sides (so g and h are identities), a symmetric
// matrix standing in for Ric_g - (m-1) K phi*h, and an algebraic curvature
// tensor standing in for the target curvature.
struct LemmaSample {
  int m = 2;
  int n = 2;
  Matrix dphi;        // n x m
  Matrix a;           // m x m symmetric
  Tensor4 curvature;  // algebraic curvature tensor on R^n
  double k = 0.0;
  std::uint64_t seed = 0;
  bool sec_bounded = false;  // curvature certified to satisfy sec <= k
};

Matrix random_dphi(int n, int m, Rng& rng);  // standard normal entries
// Nearest matrix of the given rank (truncated SVD).
Matrix rank_projected(const Matrix& dphi, int rank);
Matrix random_psd(int m, Rng& rng);

// Random (0,4) tensor with the curvature symmetries and first Bianchi
// identity, built from B_ik B_jl - B_il B_jk generators over random
// symmetric B.
Tensor4 random_algebraic_curvature(int n, Rng& rng);

// Largest sectional value found by random plane sampling plus projected
// gradient ascent from the best sample; identity metric.
double max_sectional_estimate(const Tensor4& r, int plane_samples, int ascent_steps, Rng& rng);

// Random algebraic curvature tensor certified to have sec <= K: the max
// sectional estimate is shifted out by a constant-curvature term with a
// safety margin. Over-shifting keeps the bound valid.
Tensor4 sample_curvature_with_bound(int n, double K, std::uint64_t seed);

LemmaSample make_lemma_sample(int m, int n, double K, std::uint64_t seed);

// Q0 as a pairing of A with the pullback dphi^T dphi, computed two ways:
// the direct trace contraction and the sum over an A-diagonalizing frame of
// eigenvalue times image length. The two agree up to roundoff; PSD A makes
// both nonnegative.
struct Q0Evaluation {
  double contraction = 0.0;
  double eigen_route = 0.0;
};
Q0Evaluation q0_evaluation(const Matrix& a, const Matrix& dphi);
double q0_value(const Matrix& a, const Matrix& dphi);

// Q1 computed two ways: direct contraction of
//   (m-1) K |dphi^T dphi|^2 - R(Y_i, Y_j, Y_i, Y_j) summed over columns,
// and the pairwise sum form on the derived (c, kappa) data.
struct Q1Evaluation {
  double direct = 0.0;
  double sum_form = 0.0;
  std::vector<Q1Summand> terms;
  FrameData frame;
};
Q1Evaluation q1_evaluation(const Matrix& dphi, const Tensor4& r, double K);
double q1_value(const Matrix& dphi, const Tensor4& r, double K);

enum class EqualityCase { RankGe2_ConstCurvK, RankLe1, NotEquality };
enum class EqualitySub { ConformalAtPoint, ZeroDifferential, None };

struct EqualityVerdict {
  EqualityCase kind = EqualityCase::NotEquality;
  EqualitySub sub = EqualitySub::None;
  std::optional<double> mu_estimate;
  double q1_residual = 0.0;
  double plane_residual = 0.0;      // max |sec - K| over planes in the image span
  double conformal_residual = 0.0;  // max-abs of c - mu Id
  double dphi_norm = 0.0;
  int rank = 0;
};

// Vanishing-Q1 case analysis: rank >= 2 demands constant curvature K on
// 10^3 random planes inside the image span (plus a conformal pullback when
// K > 0); rank <= 1 with K > 0 demands a vanishing differential. Anything
// else, or q1 above tolerance, is NotEquality.
EqualityVerdict classify_equality_case(const Matrix& dphi, const Tensor4& r, double K,
                                       double q1_tol = 1e-9, double fit_tol = 1e-8);

}  // namespace harmap
