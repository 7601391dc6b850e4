#include "harmap/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

#include "harmap/curvature.hpp"
#include "harmap/errors.hpp"
#include "harmap/flow.hpp"
#include "harmap/lemma.hpp"
#include "harmap/manifold.hpp"
#include "harmap/map_model.hpp"
#include "harmap/prescription.hpp"
#include "harmap/report.hpp"

namespace harmap {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

// Constant sectional curvature of the builtin models, homothety included.
double model_sectional(const ManifoldModel& mf) {
  switch (mf.kind()) {
    case ManifoldKind::FlatTorus: return 0.0;
    case ManifoldKind::RoundSphere:
      return 1.0 / (mf.radius() * mf.radius() * mf.metric_scale());
    case ManifoldKind::HyperbolicDisk:
      return -1.0 / (mf.disk_scale() * mf.disk_scale() * mf.metric_scale());
    default:
      throw ConfigError("curvature experiment: manifold has no constant-curvature model");
  }
}

PlaneSpec random_plane(int m, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  PlaneSpec plane;
  plane.X = Vector(m);
  plane.Y = Vector(m);
  for (int i = 0; i < m; ++i) {
    plane.X[i] = gauss(rng);
    plane.Y[i] = gauss(rng);
  }
  return plane;
}

// Worst sectional and Ricci deviation from the constant-curvature model
// over a fresh sample set drawn from `seed`.
std::pair<double, double> curvature_errors(const ManifoldModel& mf, double kappa,
                                           int sample_points, int planes_per_point,
                                           std::uint64_t seed) {
  Rng rng(seed);
  const int m = mf.dim();
  double sec_err = 0.0, ricci_err = 0.0;
  for (int s = 0; s < sample_points; ++s) {
    const ChartPoint p = mf.sample_point(rng);
    const Matrix g = mf.metric(p);
    ricci_err = std::max(ricci_err,
                         (ricci(mf, p) - (m - 1) * kappa * g).cwiseAbs().maxCoeff());
    if (m < 2) continue;
    int done = 0;
    while (done < planes_per_point) {
      try {
        sec_err = std::max(sec_err, std::abs(sectional(mf, p, random_plane(m, rng)) - kappa));
        ++done;
      } catch (const DegeneratePlaneError&) {
      }
    }
  }
  return {sec_err, ricci_err};
}

void run_curvature(const ExperimentConfig& config, std::uint64_t seed, double ts,
                   const fs::path& out, RunReport& report) {
  const ManifoldModel mf = build_manifold(*config.manifold);
  const CurvatureParams params = *config.curvature;
  const double kappa = model_sectional(mf);

  const auto [sec_err, ricci_err] =
      curvature_errors(mf, kappa, params.sample_points, params.planes_per_point, seed);
  report.add_check("sectional_matches_model", sec_err, 1e-8 * ts);
  report.add_check("ricci_matches_model", ricci_err, 1e-8 * ts);
  report.add_result("model_sectional", kappa);
  report.add_result("sample_points", params.sample_points);
  report.add_result("planes_per_point", params.planes_per_point);

  if (params.fd_sweep) {
    if (kappa == 0.0)
      throw ConfigError("curvature.fd_sweep requires a curved manifold");
    std::vector<std::pair<double, double>> series;
    for (double step : {1.6e-2, 8e-3, 4e-3}) {
      const auto [fd_sec, fd_ricci] = curvature_errors(
          mf.fd_variant(step, step), kappa, params.sample_points, params.planes_per_point, seed);
      series.emplace_back(step, std::max(fd_sec, fd_ricci));
    }
    const ConvergenceTable table = convergence_table(series);
    report.add_check("fd_observed_order", table.mean_order, 1.9, table.mean_order >= 1.9);
    write_text_file((out / "convergence.csv").string(), convergence_csv(table));
    report.add_artifact("convergence_table", "convergence.csv");
    std::vector<double> xs, ys;
    for (const auto& [h, r] : series) {
      xs.push_back(h);
      ys.push_back(r);
    }
    write_polyline_svg((out / "residual_vs_h.svg").string(), xs, ys, "curvature residual vs h",
                       true);
    report.add_artifact("residual_plot", "residual_vs_h.svg");
  }
}

GridSpec grid_from_params(const GridParams& params, int dim) {
  GridSpec grid;
  grid.chart = 0;
  grid.shape = Eigen::VectorXi::Constant(dim, params.nodes);
  grid.spacing = params.spacing > 0.0 ? params.spacing : 1.0 / params.nodes;
  if (params.origin.empty()) {
    grid.origin = Vector::Zero(dim);
  } else {
    if (static_cast<int>(params.origin.size()) != dim)
      throw ConfigError("grid.origin must have one entry per source dimension");
    grid.origin = Vector(dim);
    for (int i = 0; i < dim; ++i) grid.origin[i] = params.origin[i];
  }
  return grid;
}

void run_bochner(const ExperimentConfig& config, std::uint64_t, double ts, const fs::path& out,
                 RunReport& report) {
  const ManifoldModel source = build_manifold(*config.source);
  const ManifoldModel target = build_manifold(*config.target);
  const MapModel map = build_map(*config.map, source, target);
  const GridSpec grid = grid_from_params(*config.grid, source.dim());
  const BochnerParams params = *config.bochner;

  const BochnerScan scan = bochner_residual(map, grid, params.k);
  report.add_check("bochner_sup_residual", scan.sup_residual, params.tol * ts);
  report.add_result("sup_tension", scan.sup_tension);
  report.add_result("nodes_scanned", static_cast<int>(scan.reports.size()));

  if (params.fd_sweep) {
    // Strip the map's analytic derivatives so stencil truncation is visible.
    // Needs a map whose chart expression is nonlinear (inversion-identity);
    // linear maps differentiate exactly and leave nothing to converge.  The
    // loose harmonicity gate admits the stencil error in the tension field.
    std::vector<std::pair<double, double>> series;
    for (double step : {1.6e-2, 8e-3, 4e-3}) {
      const MapModel fd_map = map.fd_variant(step, step);
      series.emplace_back(step, bochner_residual(fd_map, grid, params.k, 1e-2).sup_residual);
    }
    const ConvergenceTable table = convergence_table(series);
    report.add_check("fd_observed_order", table.mean_order, 1.9, table.mean_order >= 1.9);
    write_text_file((out / "convergence.csv").string(), convergence_csv(table));
    report.add_artifact("convergence_table", "convergence.csv");
  }
}

void run_lemma(const ExperimentConfig& config, std::uint64_t seed, double, const fs::path& out,
               RunReport& report) {
  const LemmaParams params = *config.lemma;
  std::string csv = "k,samples,min_q0,min_q1,min_summand,max_rel_gap,violations\n";
  int total_violations = 0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double worst_q0 = inf, worst_q1 = inf, worst_summand = inf, worst_gap = 0.0;
  Rng seeder(seed);
  nlohmann::ordered_json per_k = nlohmann::ordered_json::array();
  for (double k : params.k_values) {
    double min_q0 = inf, min_q1 = inf, min_summand = inf, max_gap = 0.0;
    int violations = 0;
    for (int t = 0; t < params.samples; ++t) {
      const LemmaSample sample = make_lemma_sample(params.m, params.n, k, seeder());
      const double q0 = q0_value(sample.a, sample.dphi);
      const Q1Evaluation q1 = q1_evaluation(sample.dphi, sample.curvature, sample.k);
      const double scale = std::max(1.0, std::abs(q1.direct));
      const double gap = std::abs(q1.direct - q1.sum_form) / scale;
      min_q0 = std::min(min_q0, q0);
      min_q1 = std::min(min_q1, q1.direct);
      max_gap = std::max(max_gap, gap);
      if (q0 < -1e-12) ++violations;
      if (q1.direct < -1e-10) ++violations;
      if (gap > 1e-10) ++violations;
      for (const Q1Summand& term : q1.terms) {
        min_summand = std::min(min_summand, term.total);
        if (term.total < -1e-10) ++violations;
      }
    }
    csv += num(k) + "," + std::to_string(params.samples) + "," + num(min_q0) + "," +
           num(min_q1) + "," + num(min_summand) + "," + num(max_gap) + "," +
           std::to_string(violations) + "\n";
    per_k.push_back({{"k", k},
                     {"min_q0", min_q0},
                     {"min_q1", min_q1},
                     {"min_summand", min_summand},
                     {"max_rel_gap", max_gap},
                     {"violations", violations}});
    total_violations += violations;
    worst_q0 = std::min(worst_q0, min_q0);
    worst_q1 = std::min(worst_q1, min_q1);
    worst_summand = std::min(worst_summand, min_summand);
    worst_gap = std::max(worst_gap, max_gap);
  }
  // Minima are the true minima over all samples; a sign check passes when
  // the minimum never dips below minus the tolerance.
  report.add_check("q0_sign_violations", total_violations, 0.0, total_violations == 0);
  report.add_check("q0_worst_value", worst_q0, 1e-12, worst_q0 >= -1e-12);
  report.add_check("q1_worst_value", worst_q1, 1e-10, worst_q1 >= -1e-10);
  report.add_check("q1_worst_summand", worst_summand, 1e-10, worst_summand >= -1e-10);
  report.add_check("q1_sum_form_gap", worst_gap, 1e-10);
  report.add_result("per_k", per_k);
  report.add_result("samples_per_k", params.samples);
  write_text_file((out / "campaign.csv").string(), csv);
  report.add_artifact("campaign_table", "campaign.csv");
}

void run_flow(const ExperimentConfig& config, std::uint64_t seed, double ts, const fs::path& out,
              RunReport& report) {
  const ManifoldModel source = build_manifold(*config.source);
  const ManifoldModel target = build_manifold(*config.target);
  const MapModel initial = build_map(*config.map, source, target);
  const GridSpec grid = grid_from_params(*config.grid, source.dim());
  const FlowParams params = *config.flow;

  FlowConfig fc;
  fc.dt = params.dt;
  fc.max_steps = params.max_steps;
  fc.tau_tol = params.tau_tol;
  fc.energy_monitor = true;
  fc.seed = seed;
  const FlowResult result = run_flow(initial, grid, fc);
  const FlowSummary& summary = result.summary;

  std::string csv = "step,time,energy,sup_tau\n";
  for (std::size_t i = 0; i < std::min(summary.energies.size(), summary.tau_history.size());
       ++i) {
    csv += std::to_string(i) + "," + num(static_cast<double>(i) * params.dt) + "," +
           num(summary.energies[i]) + "," + num(summary.tau_history[i]) + "\n";
  }
  write_text_file((out / "trajectory.csv").string(), csv);
  report.add_artifact("trajectory", "trajectory.csv");

  report.add_check("converged", summary.final_tau, params.tau_tol * ts, summary.converged);
  const double slack = 1e-12 * std::max(1.0, summary.energies.front());
  report.add_check("energy_monotone", summary.max_energy_uptick, slack,
                   summary.energy_monotone);
  report.add_result("steps", summary.steps);
  report.add_result("final_energy", summary.final_energy);
  report.add_result("final_tau", summary.final_tau);

  const FlowProblem problem = flow_problem(initial, grid);
  const RigidityVerdict verdict = rigidity_diagnostics(problem, result.state, params.k);
  const char* names[] = {"constant-map", "homothetic-immersion", "indeterminate"};
  report.add_result("rigidity",
                    {{"verdict", names[static_cast<int>(verdict.verdict)]},
                     {"mu", verdict.mu},
                     {"totally_geodesic", verdict.totally_geodesic},
                     {"sff_sup", verdict.residuals.sff_sup},
                     {"energy_variation", verdict.residuals.energy_variation},
                     {"conformal_residual", verdict.residuals.conformal_residual},
                     {"kg_check", verdict.residuals.kg_check},
                     {"tol", verdict.tol}});
  if (params.expect_totally_geodesic) {
    report.add_check("totally_geodesic", verdict.residuals.sff_sup, verdict.tol,
                     verdict.totally_geodesic);
  }

  if (summary.energies.size() >= 2) {
    std::vector<double> xs(summary.energies.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
    write_polyline_svg((out / "energy.svg").string(), xs, summary.energies, "flow energy",
                       true);
    report.add_artifact("energy_plot", "energy.svg");
  }
}

void run_prescription(const ExperimentConfig& config, std::uint64_t seed, double ts,
                      const fs::path& out, RunReport& report) {
  const ManifoldModel source = build_manifold(*config.source);
  const ManifoldModel target = build_manifold(*config.target);
  const MapModel phi = build_map(*config.map, source, target);
  const PrescriptionParams params = *config.prescription;
  const StructureSpec spec{phi, params.alpha, params.lambda};

  Rng rng(seed);
  std::vector<ChartPoint> pts;
  pts.reserve(params.sample_count);
  for (int i = 0; i < params.sample_count; ++i) pts.push_back(source.sample_point(rng));

  const ResidualField he = harmonic_einstein_residual(spec, pts);
  const ResidualField cons = conservativity_residual(spec, pts);
  report.add_check("harmonic_einstein_residual", he.sup, 1e-8 * ts);
  report.add_check("conservativity_residual", cons.sup, 1e-8 * ts);
  report.add_result("worst_point_index", static_cast<int>(he.worst_index));

  std::string csv = "point,harmonic_einstein,conservativity\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    csv += std::to_string(i) + "," + num(he.values[i]) + "," + num(cons.values[i]) + "\n";
  }
  write_text_file((out / "residuals.csv").string(), csv);
  report.add_artifact("residual_table", "residuals.csv");

  if (config.map->type == "identity" && params.c > 0.0) {
    const ResidualField pr = prescribed_ricci_residual(source, target, params.c, pts);
    report.add_check("prescribed_ricci_residual", pr.sup, 1e-8 * ts);
    if (params.alpha == params.c && params.lambda == 0.0) {
      double gap = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        gap = std::max(gap, std::abs(he.values[i] - pr.values[i]));
      report.add_check("entry_point_equivalence", gap, 1e-12);
    }
    // the scale-invariance identity is asserted on solution metrics, where
    // the residual itself is norm-convention independent
    if (pr.sup <= 1e-8 * ts) {
      double drift = 0.0;
      for (double mu : {0.5, 2.0}) {
        const double rescaled =
            prescribed_ricci_residual(source.scaled(mu), target, params.c, pts).sup;
        drift = std::max(drift, std::abs(rescaled - pr.sup));
      }
      report.add_check("ricci_scale_invariance", drift, 1e-10);
    }
    const HomothetyFit fit = homothety_fit(source, target, pts);
    report.add_result("homothety", {{"mu", fit.mu}, {"residual", fit.residual}});
    report.add_check("homothety_residual", fit.residual, 1e-8 * ts);
  }
}

}  // namespace

int run_loaded(ExperimentConfig config, const RunOverrides& overrides, std::ostream& diag) {
  std::uint64_t seed = 0;
  fs::path out;
  double ts = 1.0;
  try {
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.tol_scale) config.tol_scale = *overrides.tol_scale;
    if (!(config.tol_scale > 0.0)) throw ConfigError("tol_scale must be positive");
    seed = resolve_seed(config, overrides.seed, std::getenv(kSeedEnvVar));
    ts = config.tol_scale;
    out = config.out_dir;
    fs::create_directories(out);
  } catch (const std::exception& e) {
    diag << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  RunReport report(experiment_name(config.kind), seed, ts, config.echo);
  int code = kExitOk;
  const auto start = std::chrono::steady_clock::now();
  try {
    switch (config.kind) {
      case ExperimentKind::Curvature: run_curvature(config, seed, ts, out, report); break;
      case ExperimentKind::Bochner: run_bochner(config, seed, ts, out, report); break;
      case ExperimentKind::LemmaCampaign: run_lemma(config, seed, ts, out, report); break;
      case ExperimentKind::Flow: run_flow(config, seed, ts, out, report); break;
      case ExperimentKind::Prescription: run_prescription(config, seed, ts, out, report); break;
    }
  } catch (const ConfigError& e) {
    report.mark_engine_error(e.what());
    code = kExitConfigError;
  } catch (const std::exception& e) {
    report.mark_engine_error(e.what());
    code = kExitEngineError;
  }
  const auto end = std::chrono::steady_clock::now();
  report.set_wall_ms(std::chrono::duration<double, std::milli>(end - start).count());

  try {
    write_text_file((out / "report.json").string(), report.serialize());
  } catch (const std::exception& e) {
    diag << "report error: " << e.what() << "\n";
    return kExitConfigError;
  }

  if (report.engine_error()) {
    diag << (code == kExitConfigError ? "config error: " : "engine error: ")
         << report.json()["error"].get<std::string>() << "\n";
    return code;
  }
  if (!report.all_passed()) {
    diag << "check failure: see " << (out / "report.json").string() << "\n";
    return kExitCheckFailure;
  }
  return kExitOk;
}

int run_experiment(const std::string& config_path, const RunOverrides& overrides,
                   std::ostream& diag) {
  ExperimentConfig config;
  try {
    config = load_config_file(config_path);
  } catch (const std::exception& e) {
    diag << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return run_loaded(std::move(config), overrides, diag);
}

}  // namespace harmap
