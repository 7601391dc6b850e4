#pragma once

#include <cstdint>
#include <vector>

#include "harmap/bochner.hpp"
#include "harmap/map_model.hpp"

namespace harmap {

// Explicit-Euler harmonic-map heat flow on a fully periodic grid over a
// flat-torus source chart. Node values are target chart coordinates; each
// node remembers which chart it currently lives in so sphere targets can
// swap hemispheres on the fly.
struct FlowState {
  GridSpec grid;
  Matrix values;           // n x N, column per node
  Eigen::VectorXi charts;  // chart index per node
  double time = 0.0;
  int step_count = 0;
};

struct FlowConfig {
  double dt = 1e-3;
  int max_steps = 10000;
  double tau_tol = 1e-8;  // stop when sup node |tau|_h falls under this
  bool energy_monitor = true;
  std::uint64_t seed = 0;
};

struct FlowProblem {
  ManifoldModel source;
  ManifoldModel target;
  GridSpec grid;
};

// Validates the combination: flat-torus source, grid periodic on every axis,
// positive resolution. Throws ConfigError otherwise.
FlowProblem flow_problem(const MapModel& initial, const GridSpec& grid);

// Samples the initial map at the grid nodes, placing each value in the
// preferred target chart.
FlowState seed_state(const MapModel& initial, const GridSpec& grid);

// Discrete map geometry at every node from second-order periodic stencils:
// tension vector (in the node's own chart), |tau|_h, energy density, and the
// lattice energy sum weighted by the source volume element.
struct NodeGeometry {
  Matrix tension;  // n x N
  std::vector<double> tau_norm;
  std::vector<double> energy;
  double sup_tau = 0.0;
  double total_energy = 0.0;
};
NodeGeometry node_geometry(const FlowProblem& problem, const FlowState& state);

// One explicit Euler step: values += dt * tau, then chart upkeep (hemisphere
// swap, periodic reduction). Enforces dt > 0 and the stability bound
// dt <= 0.2 * spacing^2; non-finite updates raise FlowInstabilityError.
FlowState flow_step(const FlowProblem& problem, const FlowState& state, const FlowConfig& config);

struct FlowSummary {
  std::vector<double> energies;     // one entry per evaluation when monitoring
  std::vector<double> tau_history;  // sup |tau|_h per evaluation
  double final_energy = 0.0;
  double final_tau = 0.0;
  bool converged = false;
  // Largest single-step energy increase observed (0 when decay is clean);
  // the monotone flag allows rounding slack 1e-12 * max(1, initial energy).
  double max_energy_uptick = 0.0;
  bool energy_monotone = true;
  int steps = 0;
  double time = 0.0;
};

struct FlowResult {
  FlowState state;
  FlowSummary summary;
};

// Runs until sup|tau| <= tau_tol or max_steps; an already-harmonic seed
// stops at step 0. Non-convergence is reported in the summary, not thrown.
FlowResult run_flow(const MapModel& initial, const GridSpec& grid, const FlowConfig& config);

enum class RigidityKind { ConstantMap, HomotheticImmersion, Indeterminate };

struct RigidityResiduals {
  double sff_sup = 0.0;            // sup |nabla dphi|
  double energy_variation = 0.0;   // max - min of |dphi|^2 over the grid
  double conformal_residual = 0.0; // sup g-operator norm of phi*h - mu g
  double kg_check = 0.0;           // sup |sec_g - mu K| over source plane samples
};

struct RigidityVerdict {
  RigidityKind verdict = RigidityKind::Indeterminate;
  double mu = 0.0;  // trace-mean of g^{-1} phi*h over the grid
  RigidityResiduals residuals;
  bool totally_geodesic = false;  // sff_sup <= tol, reported for any K
  double dphi_sup = 0.0;
  double tol = 0.0;
};

// Dichotomy check: ConstantMap when sup|dphi| <= tol; else homothetic
// immersion when second fundamental form, energy variation and conformal
// residual all clear tol; else Indeterminate with the residuals recorded.
RigidityVerdict rigidity_diagnostics(const MapModel& map, const GridSpec& grid, double K,
                                     double tol = 1e-8);
RigidityVerdict rigidity_diagnostics(const FlowProblem& problem, const FlowState& state, double K,
                                     double tol = 1e-5);

// Joint curvature-hypothesis audit: Ricci lower bound along the map and the
// target sectional upper bound, over the given sample budget. A diagnostics
// run is theorem-applicable only when both sides pass.
struct HypothesisAudit {
  bool ricci_pass = false;
  bool sec_pass = false;
  bool pass = false;
  double ricci_worst = 0.0;  // most negative pointwise residual found
  double sec_max = 0.0;      // largest target sectional value sampled
  double k = 0.0;
  int samples = 0;
};
HypothesisAudit hypothesis_audit(const MapModel& map, double K, int samples,
                                 std::uint64_t seed = 2026, double tol = 1e-9);

}  // namespace harmap
