#include "harmap/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "harmap/curvature.hpp"
#include "harmap/errors.hpp"

namespace harmap {

namespace {

std::vector<int> unflatten(const GridSpec& grid, std::size_t flat) {
  const int m = static_cast<int>(grid.shape.size());
  std::vector<int> idx(m);
  std::size_t rest = flat;
  for (int d = m - 1; d >= 0; --d) {
    const int s = grid.shape(d);
    idx[d] = static_cast<int>(rest % s);
    rest /= s;
  }
  return idx;
}

std::size_t flatten(const GridSpec& grid, const std::vector<int>& idx) {
  std::size_t flat = 0;
  for (int d = 0; d < static_cast<int>(idx.size()); ++d)
    flat = flat * grid.shape(d) + static_cast<std::size_t>(idx[d]);
  return flat;
}

// Periodic neighbor after shifting axis d by sd and (optionally) axis e by se.
std::size_t neighbor(const GridSpec& grid, std::size_t flat, int d, int sd, int e = -1,
                     int se = 0) {
  std::vector<int> idx = unflatten(grid, flat);
  idx[d] += sd;
  if (e >= 0) idx[e] += se;
  for (int a = 0; a < static_cast<int>(idx.size()); ++a) {
    const int s = grid.shape(a);
    idx[a] = ((idx[a] % s) + s) % s;
  }
  return flatten(grid, idx);
}

// Constant data shared by every node of a flow problem.
struct FlowContext {
  Matrix g;      // source metric (constant on a flat torus)
  Matrix ginv;
  double weight = 0.0;  // volume element per node
  bool mixed = false;   // any off-diagonal inverse-metric entry
  bool flat_target = false;
  Matrix h_flat;  // target metric when constant
};

FlowContext make_context(const FlowProblem& problem) {
  FlowContext ctx;
  const ChartPoint base = grid_point(problem.grid, 0);
  ctx.g = problem.source.metric(base);
  ctx.ginv = problem.source.metric_inverse(base);
  const int m = static_cast<int>(ctx.g.rows());
  ctx.weight = std::sqrt(ctx.g.determinant()) * std::pow(problem.grid.spacing, m);
  for (int d = 0; d < m; ++d)
    for (int e = 0; e < m; ++e)
      if (d != e && std::abs(ctx.ginv(d, e)) > 1e-14 * ctx.ginv.norm()) ctx.mixed = true;
  ctx.flat_target = problem.target.kind() == ManifoldKind::FlatTorus;
  if (ctx.flat_target)
    ctx.h_flat = problem.target.metric(ChartPoint(0, Vector::Zero(problem.target.dim())));
  return ctx;
}

// Neighbor value re-expressed in the center node's chart, with periodic
// target axes lifted to the representative closest to the center value.
Vector lifted_value(const ManifoldModel& target, const FlowState& state, std::size_t q,
                    int center_chart, const Vector& center) {
  Vector v = state.values.col(static_cast<Eigen::Index>(q));
  if (state.charts(static_cast<Eigen::Index>(q)) != center_chart)
    v = target.transition(ChartPoint(state.charts(static_cast<Eigen::Index>(q)), v), center_chart)
            .x;
  const Vector& periods = target.chart(center_chart).periods;
  for (int a = 0; a < v.size(); ++a)
    if (periods(a) > 0.0) v(a) = center(a) + std::remainder(v(a) - center(a), periods(a));
  return v;
}

struct NodeDerivs {
  Matrix d;                  // n x m first derivatives
  std::vector<Matrix> hess;  // [a](i,j) second partials
};

NodeDerivs node_derivs(const FlowProblem& problem, const FlowState& state, const FlowContext& ctx,
                       std::size_t p) {
  const int m = problem.source.dim();
  const int n = problem.target.dim();
  const double h = problem.grid.spacing;
  const int chart = state.charts(static_cast<Eigen::Index>(p));
  const Vector center = state.values.col(static_cast<Eigen::Index>(p));

  NodeDerivs nd;
  nd.d.resize(n, m);
  nd.hess.assign(static_cast<std::size_t>(n), Matrix::Zero(m, m));

  std::vector<Vector> plus(static_cast<std::size_t>(m)), minus(static_cast<std::size_t>(m));
  for (int d = 0; d < m; ++d) {
    plus[d] = lifted_value(problem.target, state, neighbor(problem.grid, p, d, +1), chart, center);
    minus[d] = lifted_value(problem.target, state, neighbor(problem.grid, p, d, -1), chart, center);
    nd.d.col(d) = (plus[d] - minus[d]) / (2.0 * h);
    const Vector second = (plus[d] - 2.0 * center + minus[d]) / (h * h);
    for (int a = 0; a < n; ++a) nd.hess[a](d, d) = second(a);
  }
  if (ctx.mixed) {
    for (int d = 0; d < m; ++d)
      for (int e = d + 1; e < m; ++e) {
        const Vector pp =
            lifted_value(problem.target, state, neighbor(problem.grid, p, d, +1, e, +1), chart, center);
        const Vector pm =
            lifted_value(problem.target, state, neighbor(problem.grid, p, d, +1, e, -1), chart, center);
        const Vector mp =
            lifted_value(problem.target, state, neighbor(problem.grid, p, d, -1, e, +1), chart, center);
        const Vector mm =
            lifted_value(problem.target, state, neighbor(problem.grid, p, d, -1, e, -1), chart, center);
        const Vector mixed = (pp - pm - mp + mm) / (4.0 * h * h);
        for (int a = 0; a < n; ++a) {
          nd.hess[a](d, e) = mixed(a);
          nd.hess[a](e, d) = mixed(a);
        }
      }
  }
  return nd;
}

void validate_config(const FlowConfig& config, const GridSpec& grid) {
  if (!(config.dt > 0.0)) {
    std::ostringstream os;
    os << "flow config field dt must be positive, got " << config.dt;
    throw ConfigError(os.str());
  }
  const double bound = 0.2 * grid.spacing * grid.spacing;
  if (config.dt > bound) {
    std::ostringstream os;
    os << "flow config field dt = " << config.dt << " exceeds the stability bound 0.2*spacing^2 = "
       << bound;
    throw ConfigError(os.str());
  }
  if (config.max_steps < 0) throw ConfigError("flow config field max_steps must be nonnegative");
  if (!(config.tau_tol >= 0.0)) throw ConfigError("flow config field tau_tol must be nonnegative");
}

// Chart upkeep after an update: hemisphere swap when the target prefers a
// different chart, then periodic reduction; nodes must land in some chart.
void place_node(const ManifoldModel& target, Vector& v, int& chart, std::size_t node, int step) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "flow instability: non-finite value at node " << node << " after step " << step
       << " (reduce dt)";
    throw FlowInstabilityError(os.str());
  }
  ChartPoint p(chart, v);
  const int pc = target.preferred_chart(p);
  if (pc != chart) p = target.transition(p, pc);
  p.x = target.canonical_coords(p.chart, p.x);
  if (!target.in_domain(p)) {
    bool placed = false;
    for (int c = 0; c < target.chart_count() && !placed; ++c) {
      if (c == p.chart) continue;
      ChartPoint q = target.transition(p, c);
      q.x = target.canonical_coords(c, q.x);
      if (target.in_domain(q)) {
        p = q;
        placed = true;
      }
    }
    if (!placed) {
      std::ostringstream os;
      os << "flow blow-up: node " << node << " left every target chart at step " << step;
      throw FlowInstabilityError(os.str());
    }
  }
  chart = p.chart;
  v = p.x;
}

FlowState advance(const FlowProblem& problem, const FlowState& state, const FlowConfig& config,
                  const NodeGeometry& geo) {
  FlowState next = state;
  next.values += config.dt * geo.tension;
  const std::size_t total = grid_size(state.grid);
  for (std::size_t p = 0; p < total; ++p) {
    Vector v = next.values.col(static_cast<Eigen::Index>(p));
    int chart = next.charts(static_cast<Eigen::Index>(p));
    place_node(problem.target, v, chart, p, state.step_count + 1);
    next.values.col(static_cast<Eigen::Index>(p)) = v;
    next.charts(static_cast<Eigen::Index>(p)) = chart;
  }
  next.time = state.time + config.dt;
  next.step_count = state.step_count + 1;
  return next;
}

double operator_norm_against(const Matrix& a, const Matrix& g) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), g);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

FlowProblem flow_problem(const MapModel& initial, const GridSpec& grid) {
  const ManifoldModel& src = initial.source();
  if (src.kind() != ManifoldKind::FlatTorus)
    throw ConfigError("flow sources are restricted to flat tori");
  if (grid.chart != 0) throw ConfigError("flat tori have a single chart; grid chart must be 0");
  const int m = src.dim();
  if (static_cast<int>(grid.shape.size()) != m || static_cast<int>(grid.origin.size()) != m)
    throw ConfigError("flow grid shape/origin must match the source dimension");
  if (!(grid.spacing > 0.0)) throw ConfigError("flow grid spacing must be positive");
  const Vector& periods = src.chart(0).periods;
  for (int d = 0; d < m; ++d) {
    if (grid.shape(d) < 3) throw ConfigError("flow grid needs at least 3 nodes per axis");
    const double span = grid.shape(d) * grid.spacing;
    if (!(periods(d) > 0.0) || std::abs(span - periods(d)) > 1e-9 * periods(d)) {
      std::ostringstream os;
      os << "flow grid axis " << d << " must wrap the source period exactly: span " << span
         << " vs period " << periods(d);
      throw ConfigError(os.str());
    }
  }
  return FlowProblem{src, initial.target(), grid};
}

FlowState seed_state(const MapModel& initial, const GridSpec& grid) {
  const FlowProblem problem = flow_problem(initial, grid);
  const std::size_t total = grid_size(grid);
  FlowState state;
  state.grid = grid;
  state.values.resize(problem.target.dim(), static_cast<Eigen::Index>(total));
  state.charts.resize(static_cast<Eigen::Index>(total));
  for (std::size_t p = 0; p < total; ++p) {
    const ChartPoint image = initial.eval(grid_point(grid, p));
    const int chart = problem.target.preferred_chart(image);
    ChartPoint placed = problem.target.transition(image, chart);
    placed.x = problem.target.canonical_coords(chart, placed.x);
    if (!problem.target.in_domain(placed))
      throw ConfigError("initial map leaves the target chart domain at a grid node");
    state.values.col(static_cast<Eigen::Index>(p)) = placed.x;
    state.charts(static_cast<Eigen::Index>(p)) = chart;
  }
  return state;
}

NodeGeometry node_geometry(const FlowProblem& problem, const FlowState& state) {
  const FlowContext ctx = make_context(problem);
  const int m = problem.source.dim();
  const int n = problem.target.dim();
  const std::size_t total = grid_size(state.grid);

  NodeGeometry geo;
  geo.tension.resize(n, static_cast<Eigen::Index>(total));
  geo.tau_norm.resize(total);
  geo.energy.resize(total);

  for (std::size_t p = 0; p < total; ++p) {
    const NodeDerivs nd = node_derivs(problem, state, ctx, p);
    const ChartPoint at(state.charts(static_cast<Eigen::Index>(p)),
                        state.values.col(static_cast<Eigen::Index>(p)));
    const Matrix h = ctx.flat_target ? ctx.h_flat : problem.target.metric(at);

    Vector tau = Vector::Zero(n);
    if (ctx.flat_target) {
      for (int a = 0; a < n; ++a) tau(a) = (ctx.ginv.array() * nd.hess[a].array()).sum();
    } else {
      const std::vector<Matrix> gamma = christoffel(problem.target, at);
      for (int a = 0; a < n; ++a) {
        Matrix s = nd.hess[a];
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            if (gamma[a](b, c) != 0.0)
              s += gamma[a](b, c) * (nd.d.row(b).transpose() * nd.d.row(c));
        tau(a) = (ctx.ginv.array() * s.array()).sum();
      }
    }
    geo.tension.col(static_cast<Eigen::Index>(p)) = tau;
    geo.tau_norm[p] = std::sqrt(std::max(0.0, tau.dot(h * tau)));
    geo.energy[p] = (ctx.ginv.array() * (nd.d.transpose() * h * nd.d).array()).sum();
    geo.sup_tau = std::max(geo.sup_tau, geo.tau_norm[p]);
    geo.total_energy += geo.energy[p] * ctx.weight;
  }
  return geo;
}

FlowState flow_step(const FlowProblem& problem, const FlowState& state, const FlowConfig& config) {
  validate_config(config, state.grid);
  return advance(problem, state, config, node_geometry(problem, state));
}

FlowResult run_flow(const MapModel& initial, const GridSpec& grid, const FlowConfig& config) {
  validate_config(config, grid);
  const FlowProblem problem = flow_problem(initial, grid);
  FlowResult out;
  out.state = seed_state(initial, grid);

  const NodeGeometry first = node_geometry(problem, out.state);
  const double slack = 1e-12 * std::max(1.0, first.total_energy);
  NodeGeometry geo = first;
  while (true) {
    if (config.energy_monitor) {
      if (!out.summary.energies.empty()) {
        const double uptick = geo.total_energy - out.summary.energies.back();
        out.summary.max_energy_uptick = std::max(out.summary.max_energy_uptick, uptick);
        if (uptick > slack) out.summary.energy_monotone = false;
      }
      out.summary.energies.push_back(geo.total_energy);
    }
    out.summary.tau_history.push_back(geo.sup_tau);
    if (geo.sup_tau <= config.tau_tol) {
      out.summary.converged = true;
      break;
    }
    if (out.state.step_count >= config.max_steps) break;
    out.state = advance(problem, out.state, config, geo);
    geo = node_geometry(problem, out.state);
  }
  out.summary.final_energy = geo.total_energy;
  out.summary.final_tau = geo.sup_tau;
  out.summary.steps = out.state.step_count;
  out.summary.time = out.state.time;
  return out;
}

namespace {

// Shared wrap-up: given per-node samples, fit mu and decide the verdict.
struct DiagnosticsSamples {
  std::vector<double> energy;
  std::vector<double> sff_norm;
  std::vector<Matrix> pullback;
  std::vector<Matrix> metric;
  std::vector<double> source_sec;  // sampled source sectional values
};

RigidityVerdict settle_verdict(const DiagnosticsSamples& s, int m, double K, double tol) {
  RigidityVerdict v;
  v.tol = tol;

  double esum = 0.0, emin = s.energy[0], emax = s.energy[0];
  for (double e : s.energy) {
    esum += e;
    emin = std::min(emin, e);
    emax = std::max(emax, e);
  }
  v.mu = esum / static_cast<double>(s.energy.size()) / static_cast<double>(m);
  v.residuals.energy_variation = emax - emin;
  v.dphi_sup = std::sqrt(std::max(0.0, emax));

  for (double n : s.sff_norm) v.residuals.sff_sup = std::max(v.residuals.sff_sup, n);
  for (std::size_t i = 0; i < s.pullback.size(); ++i)
    v.residuals.conformal_residual =
        std::max(v.residuals.conformal_residual,
                 operator_norm_against(s.pullback[i] - v.mu * s.metric[i], s.metric[i]));
  for (double sec : s.source_sec)
    v.residuals.kg_check = std::max(v.residuals.kg_check, std::abs(sec - v.mu * K));

  v.totally_geodesic = v.residuals.sff_sup <= tol;
  if (v.dphi_sup <= tol) {
    v.verdict = RigidityKind::ConstantMap;
  } else if (v.totally_geodesic && v.residuals.energy_variation <= tol &&
             v.residuals.conformal_residual <= tol) {
    v.verdict = RigidityKind::HomotheticImmersion;
  } else {
    v.verdict = RigidityKind::Indeterminate;
  }
  return v;
}

void sample_source_sectionals(const ManifoldModel& src, const ChartPoint& p, Rng& rng,
                              std::vector<double>& out) {
  const int m = src.dim();
  if (m < 2) return;
  const Tensor4 riem = riemann(src, p);
  const Matrix g = src.metric(p);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int t = 0; t < 2; ++t) {
    Vector x(m), y(m);
    for (int i = 0; i < m; ++i) {
      x(i) = dist(rng);
      y(i) = dist(rng);
    }
    try {
      out.push_back(sectional_from_tensor(riem, g, x, y));
    } catch (const DegeneratePlaneError&) {
      --t;
    }
  }
}

}  // namespace

RigidityVerdict rigidity_diagnostics(const MapModel& map, const GridSpec& grid, double K,
                                     double tol) {
  const std::size_t total = grid_size(grid);
  if (total == 0) throw ConfigError("rigidity diagnostics needs a nonempty grid");
  DiagnosticsSamples s;
  Rng rng(0xd1a6u);
  // Source curvature sampling is capped; for homogeneous sources extra nodes
  // add nothing.
  const std::size_t sec_budget = std::min<std::size_t>(total, 16);
  for (std::size_t p = 0; p < total; ++p) {
    const ChartPoint at = grid_point(grid, p);
    s.energy.push_back(energy_density(map, at));
    s.sff_norm.push_back(std::sqrt(std::max(0.0, second_fundamental_form(map, at).norm_sq)));
    s.pullback.push_back(pullback_metric(map, at));
    s.metric.push_back(map.source().metric(at));
    if (p < sec_budget) sample_source_sectionals(map.source(), at, rng, s.source_sec);
  }
  return settle_verdict(s, map.source().dim(), K, tol);
}

RigidityVerdict rigidity_diagnostics(const FlowProblem& problem, const FlowState& state, double K,
                                     double tol) {
  const FlowContext ctx = make_context(problem);
  const int m = problem.source.dim();
  const int n = problem.target.dim();
  const std::size_t total = grid_size(state.grid);
  DiagnosticsSamples s;
  Rng rng(0xd1a6u);
  const std::size_t sec_budget = std::min<std::size_t>(total, 16);

  for (std::size_t p = 0; p < total; ++p) {
    const NodeDerivs nd = node_derivs(problem, state, ctx, p);
    const ChartPoint at(state.charts(static_cast<Eigen::Index>(p)),
                        state.values.col(static_cast<Eigen::Index>(p)));
    const Matrix h = ctx.flat_target ? ctx.h_flat : problem.target.metric(at);

    std::vector<Matrix> sff(static_cast<std::size_t>(n));
    if (ctx.flat_target) {
      for (int a = 0; a < n; ++a) sff[a] = nd.hess[a];
    } else {
      const std::vector<Matrix> gamma = christoffel(problem.target, at);
      for (int a = 0; a < n; ++a) {
        sff[a] = nd.hess[a];
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            if (gamma[a](b, c) != 0.0)
              sff[a] += gamma[a](b, c) * (nd.d.row(b).transpose() * nd.d.row(c));
      }
    }
    double norm_sq = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (h(a, b) == 0.0) continue;
        norm_sq += h(a, b) * (ctx.ginv * sff[a] * ctx.ginv * sff[b].transpose()).trace();
      }
    s.sff_norm.push_back(std::sqrt(std::max(0.0, norm_sq)));

    const Matrix pull = nd.d.transpose() * h * nd.d;
    s.pullback.push_back(pull);
    s.metric.push_back(ctx.g);
    s.energy.push_back((ctx.ginv.array() * pull.array()).sum());
    if (p < sec_budget)
      sample_source_sectionals(problem.source, grid_point(state.grid, p), rng, s.source_sec);
  }
  return settle_verdict(s, m, K, tol);
}

HypothesisAudit hypothesis_audit(const MapModel& map, double K, int samples, std::uint64_t seed,
                                 double tol) {
  if (samples < 1) throw ValidationError("hypothesis_audit needs a positive sample budget");
  HypothesisAudit audit;
  audit.k = K;
  audit.samples = samples;

  Rng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < samples; ++t) {
    const ChartPoint p = map.source().sample_point(rng);
    worst = std::min(worst, ricci_lower_bound_residual(map, p, K));
  }
  audit.ricci_worst = worst;
  audit.ricci_pass = worst >= -tol;

  const SecBoundReport sec = sec_upper_bound_check(map.target(), K, samples, 20, rng, tol);
  audit.sec_max = sec.max_sectional;
  audit.sec_pass = sec.pass;
  audit.pass = audit.ricci_pass && audit.sec_pass;
  return audit;
}

}  // namespace harmap
