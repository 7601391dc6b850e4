#include "harmap/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "doctest.h"
#include "harmap/errors.hpp"
#include "harmap/manifold.hpp"
#include "harmap/map_model.hpp"

using namespace harmap;

namespace {

const char* kFlowText = R"(
experiment = "flow"
seed = 11

[source]
type = "flat-torus"
dim = 2

[target]
type = "flat-torus"
dim = 2

[map]
type = "sin-perturbed"
amplitude = 0.1

[grid]
nodes = 8

[flow]
dt = 0.002
max_steps = 500
)";

// Minimal valid text per experiment kind, for splicing broken lines into.
std::string lemma_text(const std::string& extra) {
  return "experiment = \"lemma-campaign\"\n[lemma]\nm = 2\nn = 3\nk_values = [0.0]\nsamples = 5\n" +
         extra;
}

}  // namespace

TEST_CASE("config text parses sections, scalars, strings, booleans, and arrays") {
  const ParsedConfig parsed = parse_config_text(
      "title = \"with # inside\"  # trailing comment\n"
      "\n"
      "# full-line comment\n"
      "flag = true\n"
      "count = 42\n"
      "[block]\n"
      "  spaced   =   -1.5e-3\n"
      "names = [\"a\", \"b\"]\n"
      "values = [1, 2.5, 3]\n");

  CHECK(std::get<std::string>(parsed.at("").at("title")) == "with # inside");
  CHECK(std::get<bool>(parsed.at("").at("flag")) == true);
  CHECK(std::get<double>(parsed.at("").at("count")) == 42.0);
  CHECK(std::get<double>(parsed.at("block").at("spaced")) == doctest::Approx(-1.5e-3));
  CHECK(std::get<std::vector<std::string>>(parsed.at("block").at("names")) ==
        std::vector<std::string>{"a", "b"});
  CHECK(std::get<std::vector<double>>(parsed.at("block").at("values")) ==
        std::vector<double>{1.0, 2.5, 3.0});
}

TEST_CASE("malformed config lines are rejected with their line number") {
  CHECK_THROWS_WITH_AS(parse_config_text("a = 1\nb 2\n"), "line 2: expected key = value",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("a = 1\na = 2\n"), "line 2: duplicate key a",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[s]\nk = 1\n[s]\n"), "line 3: duplicate section [s]",
                       ConfigError);
  CHECK_THROWS_AS(parse_config_text("[open\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[bad name]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("two words = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("s = \"open\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("s = \"a\"b\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("k =\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("k = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("k = []\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("k = [1, \"a\"]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("k = 12abc\n"), ConfigError);
}

TEST_CASE("each experiment kind loads with defaults applied") {
  SUBCASE("curvature") {
    const ExperimentConfig c = load_config_text(
        "experiment = \"curvature\"\n[manifold]\ntype = \"round-sphere\"\n");
    CHECK(c.kind == ExperimentKind::Curvature);
    CHECK(c.seed == 2026);
    CHECK(c.out_dir == "out");
    CHECK(c.tol_scale == 1.0);
    REQUIRE(c.manifold.has_value());
    CHECK(c.manifold->dim == 2);
    CHECK(c.manifold->radius == 1.0);
    REQUIRE(c.curvature.has_value());
    CHECK(c.curvature->sample_points == 50);
    CHECK(c.curvature->planes_per_point == 4);
    CHECK_FALSE(c.curvature->fd_sweep);
  }
  SUBCASE("flow") {
    const ExperimentConfig c = load_config_text(kFlowText);
    CHECK(c.kind == ExperimentKind::Flow);
    CHECK(c.seed == 11);
    REQUIRE(c.flow.has_value());
    CHECK(c.flow->dt == doctest::Approx(0.002));
    CHECK(c.flow->max_steps == 500);
    CHECK(c.flow->tau_tol == 1e-8);
    CHECK(c.flow->k == 0.0);
    CHECK_FALSE(c.flow->expect_totally_geodesic);
    REQUIRE(c.grid.has_value());
    CHECK(c.grid->nodes == 8);
    CHECK(c.grid->spacing == 0.0);
    REQUIRE(c.map.has_value());
    CHECK(c.map->amplitude == doctest::Approx(0.1));
  }
  SUBCASE("lemma campaign") {
    const ExperimentConfig c = load_config_text(lemma_text(""));
    CHECK(c.kind == ExperimentKind::LemmaCampaign);
    REQUIRE(c.lemma.has_value());
    CHECK(c.lemma->m == 2);
    CHECK(c.lemma->n == 3);
    CHECK(c.lemma->k_values == std::vector<double>{0.0});
    CHECK(c.lemma->samples == 5);
  }
  SUBCASE("bochner") {
    const ExperimentConfig c = load_config_text(
        "experiment = \"bochner\"\n"
        "[source]\ntype = \"round-sphere\"\n[target]\ntype = \"round-sphere\"\n"
        "[map]\ntype = \"identity\"\n[grid]\nnodes = 5\n");
    CHECK(c.kind == ExperimentKind::Bochner);
    REQUIRE(c.bochner.has_value());
    CHECK(c.bochner->k == 0.0);
    CHECK(c.bochner->tol == 1e-12);
    CHECK_FALSE(c.bochner->fd_sweep);
  }
  SUBCASE("prescription") {
    const ExperimentConfig c = load_config_text(
        "experiment = \"prescription\"\n"
        "[source]\ntype = \"round-sphere\"\n[target]\ntype = \"round-sphere\"\n"
        "[map]\ntype = \"identity\"\n");
    CHECK(c.kind == ExperimentKind::Prescription);
    REQUIRE(c.prescription.has_value());
    CHECK(c.prescription->alpha == 1.0);
    CHECK(c.prescription->lambda == 0.0);
    CHECK(c.prescription->c == 0.0);
    CHECK(c.prescription->sample_count == 12);
  }
}

TEST_CASE("unknown keys are rejected by their qualified name") {
  CHECK_THROWS_WITH_AS(load_config_text(std::string(kFlowText) + "[flow2]\nx = 1\n"),
                       "unknown key: flow2.x", ConfigError);
  CHECK_THROWS_WITH_AS(load_config_text("colour = \"red\"\n" + std::string(kFlowText)),
                       "unknown key: colour", ConfigError);
  CHECK_THROWS_WITH_AS(load_config_text(std::string(kFlowText) + "colour = \"red\"\n"),
                       "unknown key: flow.colour", ConfigError);
  CHECK_THROWS_WITH_AS(load_config_text(lemma_text("extra = 1\n")),
                       "unknown key: lemma.extra", ConfigError);
  // Keys that belong to a different experiment kind are unknown here.
  CHECK_THROWS_AS(load_config_text(lemma_text("[flow]\ndt = 0.01\n")), ConfigError);
}

TEST_CASE("field validation names the offending key") {
  auto expect = [](const std::string& text, const char* message) {
    CHECK_THROWS_WITH_AS(load_config_text(text), message, ConfigError);
  };
  expect("seed = 1\n", "missing key: experiment");
  expect("experiment = \"orbit\"\n", "experiment: unknown kind 'orbit'");
  expect("experiment = \"curvature\"\nseed = -1\n[manifold]\ntype = \"flat-torus\"\n",
         "seed must be nonnegative");
  expect("experiment = \"curvature\"\nseed = 1.5\n[manifold]\ntype = \"flat-torus\"\n",
         "seed must be an integer");
  expect("experiment = \"curvature\"\ntol_scale = 0\n[manifold]\ntype = \"flat-torus\"\n",
         "tol_scale must be positive");
  expect("experiment = \"curvature\"\n", "missing section: [manifold]");
  expect("experiment = \"curvature\"\n[manifold]\ntype = \"moebius\"\n",
         "manifold.type: unknown manifold type 'moebius'");
  expect("experiment = \"curvature\"\n[manifold]\ntype = \"round-sphere\"\nradius = 0\n",
         "manifold.radius must be positive");
  expect("experiment = \"curvature\"\n[manifold]\ntype = \"round-sphere\"\ndim = 0\n",
         "manifold.dim must be at least 1");
  expect(
      "experiment = \"curvature\"\n[manifold]\ntype = \"flat-torus\"\nmetric_scale = -1\n",
      "manifold.metric_scale must be positive");

  const std::string flow_head =
      "experiment = \"flow\"\n[source]\ntype = \"flat-torus\"\n[target]\ntype = "
      "\"flat-torus\"\n[map]\ntype = \"identity\"\n";
  expect(flow_head + "[grid]\nnodes = 2\n[flow]\ndt = 0.01\nmax_steps = 1\n",
         "grid.nodes must be at least 3");
  expect(flow_head + "[grid]\nnodes = 8\nspacing = 0\n[flow]\ndt = 0.01\nmax_steps = 1\n",
         "grid.spacing must be positive");
  expect(flow_head + "[grid]\nnodes = 8\n[flow]\ndt = 0\nmax_steps = 1\n",
         "flow.dt must be positive");
  expect(flow_head + "[grid]\nnodes = 8\n[flow]\ndt = 0.01\nmax_steps = -1\n",
         "flow.max_steps must be nonnegative");
  expect(flow_head + "[grid]\nnodes = 8\n", "missing section: [flow]");

  expect(lemma_text("").substr(0, 0) +
             "experiment = \"lemma-campaign\"\n[lemma]\nm = 1\nn = 3\nk_values = "
             "[0.0]\nsamples = 5\n",
         "lemma.m must be at least 2");
  expect("experiment = \"lemma-campaign\"\n[lemma]\nm = 2\nn = 3\nk_values = "
         "[-1.0]\nsamples = 5\n",
         "lemma.k_values entries must be nonnegative");

  const std::string presc_head =
      "experiment = \"prescription\"\n[source]\ntype = \"round-sphere\"\n[target]\ntype = "
      "\"round-sphere\"\n[map]\ntype = \"identity\"\n";
  expect(presc_head + "[prescription]\nalpha = 0\n", "prescription.alpha must be nonzero");
  expect(presc_head + "[prescription]\nc = -1\n", "prescription.c must be nonnegative");
  expect(presc_head + "[prescription]\nsample_count = 0\n",
         "prescription.sample_count must be positive");

  expect("experiment = \"bochner\"\n[source]\ntype = \"round-sphere\"\n[target]\ntype = "
         "\"round-sphere\"\n[map]\ntype = \"warp\"\n[grid]\nnodes = 5\n",
         "map.type: unknown map type 'warp'");
  expect("experiment = \"bochner\"\n[source]\ntype = \"round-sphere\"\n[target]\ntype = "
         "\"round-sphere\"\n[map]\ntype = \"sin-perturbed\"\n[grid]\nnodes = 5\n",
         "missing key: map.amplitude");
  expect("experiment = \"bochner\"\n[source]\ntype = \"round-sphere\"\n[target]\ntype = "
         "\"round-sphere\"\n[map]\ntype = \"identity\"\n[grid]\nnodes = 5\n[bochner]\ntol "
         "= 0\n",
         "bochner.tol must be positive");
}

TEST_CASE("type mismatches between value and key are rejected") {
  CHECK_THROWS_WITH_AS(
      load_config_text("experiment = \"curvature\"\n[manifold]\ntype = 3\n"),
      "manifold.type must be a string", ConfigError);
  CHECK_THROWS_WITH_AS(
      load_config_text("experiment = \"curvature\"\n[manifold]\ntype = "
                       "\"flat-torus\"\ndim = 2.5\n"),
      "manifold.dim must be an integer", ConfigError);
  CHECK_THROWS_WITH_AS(
      load_config_text("experiment = \"curvature\"\n[manifold]\ntype = "
                       "\"flat-torus\"\n[curvature]\nfd_sweep = 1\n"),
      "curvature.fd_sweep must be true or false", ConfigError);
  CHECK_THROWS_WITH_AS(
      load_config_text("experiment = \"lemma-campaign\"\n[lemma]\nm = 2\nn = 2\nk_values "
                       "= [\"a\"]\nsamples = 1\n"),
      "lemma.k_values must be a number array", ConfigError);
}

TEST_CASE("experiment names round-trip") {
  for (ExperimentKind kind :
       {ExperimentKind::Curvature, ExperimentKind::Bochner, ExperimentKind::LemmaCampaign,
        ExperimentKind::Flow, ExperimentKind::Prescription}) {
    CHECK(experiment_from_name(experiment_name(kind)) == kind);
  }
  CHECK_THROWS_AS(experiment_from_name("unknown"), ConfigError);
}

TEST_CASE("seed resolution prefers the flag, then the environment, then the file") {
  const ExperimentConfig config = load_config_text(lemma_text(""));
  CHECK(config.seed == 2026);
  CHECK(resolve_seed(config, 7, "99") == 7);
  CHECK(resolve_seed(config, std::nullopt, "99") == 99);
  CHECK(resolve_seed(config, std::nullopt, nullptr) == 2026);
  CHECK_THROWS_WITH_AS(resolve_seed(config, std::nullopt, "12abc"),
                       "HARMAP_SEED must be an unsigned integer", ConfigError);
  // An empty environment value counts as unset.
  CHECK(resolve_seed(config, std::nullopt, "") == 2026);
}

TEST_CASE("manifold specs build the matching models") {
  ManifoldSpec torus{.type = "flat-torus", .dim = 3};
  const ManifoldModel t = build_manifold(torus);
  CHECK(t.kind() == ManifoldKind::FlatTorus);
  CHECK(t.dim() == 3);

  ManifoldSpec sphere{.type = "round-sphere", .dim = 2, .radius = 2.0};
  sphere.metric_scale = 4.0;
  const ManifoldModel s = build_manifold(sphere);
  CHECK(s.kind() == ManifoldKind::RoundSphere);
  CHECK(s.radius() == 2.0);
  CHECK(s.metric_scale() == 4.0);

  ManifoldSpec disk{.type = "hyperbolic-disk", .dim = 2};
  disk.scale = 1.5;
  CHECK(build_manifold(disk).kind() == ManifoldKind::HyperbolicDisk);

  ManifoldSpec circle{.type = "circle"};
  circle.dim = 1;
  circle.circumference = 3.0;
  const ManifoldModel c = build_manifold(circle);
  CHECK(c.dim() == 1);

  ManifoldSpec bad{.type = "lens-space"};
  CHECK_THROWS_AS(build_manifold(bad), ConfigError);
}

TEST_CASE("map specs build and validate against their manifolds") {
  const ManifoldModel torus2 = ManifoldModel::flat_torus(2);
  const ManifoldModel sphere = ManifoldModel::round_sphere(2, 1.0);

  MapSpec ident{.type = "identity"};
  const MapModel id = build_map(ident, torus2, torus2);
  Vector x(2);
  x << 0.25, 0.5;
  CHECK(id.eval(ChartPoint(0, x)).x == x);

  MapSpec constant{.type = "constant"};
  constant.value = {0.1, 0.2};
  const MapModel cst = build_map(constant, torus2, torus2);
  CHECK(cst.eval(ChartPoint(0, x)).x(0) == doctest::Approx(0.1));
  constant.value = {0.1};
  CHECK_THROWS_AS(build_map(constant, torus2, torus2), ConfigError);

  MapSpec lin{.type = "linear-torus"};
  lin.diagonal = {1.0, 2.0};
  const MapModel lt = build_map(lin, torus2, torus2);
  CHECK(lt.eval(ChartPoint(0, x)).x(1) == doctest::Approx(1.0));
  lin.diagonal = {1.0};
  CHECK_THROWS_AS(build_map(lin, torus2, torus2), ConfigError);

  MapSpec bad{.type = "shear"};
  CHECK_THROWS_AS(build_map(bad, torus2, torus2), ConfigError);
}

TEST_CASE("the cross-chart sphere identity builds only on matching spheres") {
  const ManifoldModel sphere = ManifoldModel::round_sphere(2, 1.0);
  const ManifoldModel big = ManifoldModel::round_sphere(2, 2.0);
  const ManifoldModel torus = ManifoldModel::flat_torus(2);
  MapSpec spec{.type = "inversion-identity"};

  CHECK_THROWS_AS(build_map(spec, torus, torus), ConfigError);
  CHECK_THROWS_AS(build_map(spec, sphere, big), ConfigError);

  // |x| > 1 keeps the image inside chart 1's preferred region, so the
  // differential below needs no chart transition.
  const MapModel inv = build_map(spec, sphere, sphere);
  Vector x(2);
  x << 1.2, 0.9;
  const ChartPoint q = inv.eval(ChartPoint(0, x));
  CHECK(q.chart == 1);
  CHECK(q.x(0) == doctest::Approx(1.2 / 2.25));
  CHECK(q.x(1) == doctest::Approx(0.9 / 2.25));

  // The analytic differential agrees with a central difference of eval.
  const Matrix d = differential(inv, ChartPoint(0, x));
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const Vector col =
        (inv.eval(ChartPoint(0, xp)).x - inv.eval(ChartPoint(0, xm)).x) / (2.0 * h);
    for (int a = 0; a < 2; ++a) CHECK(d(a, i) == doctest::Approx(col(a)).epsilon(1e-7));
  }
}

TEST_CASE("the parsed echo is deterministic and faithful") {
  const ExperimentConfig a = load_config_text(kFlowText);
  const ExperimentConfig b = load_config_text(kFlowText);
  CHECK(a.echo.dump(2) == b.echo.dump(2));
  CHECK(a.echo["flow"]["dt"] == 0.002);
  CHECK(a.echo["experiment"] == "flow");
  CHECK(a.echo["map"]["type"] == "sin-perturbed");
}

TEST_CASE("config files load from disk and missing paths are reported") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "harmap_config_test.toml";
  {
    std::ofstream out(path);
    out << lemma_text("");
  }
  const ExperimentConfig c = load_config_file(path.string());
  CHECK(c.kind == ExperimentKind::LemmaCampaign);
  fs::remove(path);

  CHECK_THROWS_AS(load_config_file((path.parent_path() / "no_such_file.toml").string()),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_file((path.parent_path() / "no_such_file.toml").string()),
                  ConfigError);
}
