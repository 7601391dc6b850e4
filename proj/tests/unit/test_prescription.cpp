#include "harmap/prescription.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "harmap/curvature.hpp"
#include "harmap/errors.hpp"
#include "harmap/flow.hpp"

using namespace harmap;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

std::vector<ChartPoint> torus_points(int m, int count, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ChartPoint> pts;
  pts.reserve(count);
  for (int k = 0; k < count; ++k) {
    Vector x(m);
    for (int i = 0; i < m; ++i) x[i] = u(rng);
    pts.emplace_back(0, x);
  }
  return pts;
}

// Chart-0 stereographic points kept away from both the origin and the
// hemisphere handover, so every fixture (including the inversion form of
// the identity) is comfortable at them.
std::vector<ChartPoint> sphere_points(int m, int count, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  std::vector<ChartPoint> pts;
  while (static_cast<int>(pts.size()) < count) {
    Vector x(m);
    for (int i = 0; i < m; ++i) x[i] = u(rng);
    const double r = x.norm();
    if (r < 0.25 || r > 1.2) continue;
    pts.emplace_back(0, x);
  }
  return pts;
}

// Single-chart disk carrying the unit-sphere chart-0 metric plus an
// optional constant bump on the (0,0) entry; bump != 0 breaks conformality.
ManifoldModel patch_metric(double bump) {
  Chart chart;
  chart.in_domain = [](const Vector& x) { return x.norm() < 1.5; };
  chart.metric = [bump](const Vector& x) -> Matrix {
    const double s = 1.0 + x.squaredNorm();
    Matrix g = (4.0 / (s * s)) * Matrix::Identity(2, 2);
    g(0, 0) += bump;
    return g;
  };
  chart.periods = Vector::Zero(2);
  return ManifoldModel::custom(2, chart);
}

std::vector<ChartPoint> patch_points() {
  std::vector<ChartPoint> pts;
  for (double a : {-0.6, 0.1, 0.7}) {
    for (double b : {-0.5, 0.3}) {
      Vector x(2);
      x << a, b;
      pts.emplace_back(0, x);
    }
  }
  return pts;
}

GridSpec torus_grid(int m, int nodes) {
  GridSpec grid;
  grid.chart = 0;
  grid.origin = Vector::Zero(m);
  grid.shape = Eigen::VectorXi::Constant(m, nodes);
  grid.spacing = 1.0 / nodes;
  return grid;
}

GridSpec sphere_patch() {
  GridSpec grid;
  grid.chart = 0;
  grid.origin = Vector::Constant(2, -0.3);
  grid.shape = Eigen::VectorXi::Constant(2, 7);
  grid.spacing = 0.1;
  return grid;
}

}  // namespace

TEST_CASE("harmonic-Einstein residual on model structures") {
  Rng rng(71001);

  SUBCASE("constant map on a flat torus kills every term") {
    const ManifoldModel torus = ManifoldModel::flat_torus(2);
    Vector q(2);
    q << 0.3, 0.7;
    const StructureSpec spec{MapModel::constant_map(torus, torus, ChartPoint(0, q)), 1.0, 0.0};
    const auto field = harmonic_einstein_residual(spec, torus_points(2, 9, rng));
    CHECK(field.sup == 0.0);
    CHECK(field.values.size() == 9);
  }

  SUBCASE("round-sphere homotheties solve the alpha = m-1 structure") {
    for (int m : {2, 3}) {
      const ManifoldModel h = ManifoldModel::round_sphere(m, 1.0);
      auto pts = sphere_points(m, 10, rng);
      pts.emplace_back(1, Vector::Constant(m, 0.4));
      for (double c : {2.0, 0.5}) {
        StructureSpec spec{MapModel::identity_map(h.scaled(c), h), static_cast<double>(m - 1),
                           0.0};
        CHECK(harmonic_einstein_residual(spec, pts).sup <= 1e-8);

        // a lambda shift moves the residual by exactly |lambda| in the g norm
        spec.lambda = 1.0;
        const auto shifted = harmonic_einstein_residual(spec, pts);
        CHECK(shifted.sup == doctest::Approx(1.0).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("prescription input validation") {
  const ManifoldModel sph = ManifoldModel::round_sphere(2, 1.0);
  Rng rng(71002);
  const auto pts = sphere_points(2, 4, rng);
  const StructureSpec spec{MapModel::identity_map(sph, sph), 1.0, 0.0};

  StructureSpec zero_alpha = spec;
  zero_alpha.alpha = 0.0;
  CHECK_THROWS_AS((void)harmonic_einstein_residual(zero_alpha, pts), ValidationError);
  CHECK_THROWS_AS((void)conservativity_residual(zero_alpha, pts), ValidationError);

  const std::vector<ChartPoint> none;
  CHECK_THROWS_AS((void)harmonic_einstein_residual(spec, none), ValidationError);
  CHECK_THROWS_AS((void)conservativity_residual(spec, none), ValidationError);
  CHECK_THROWS_AS((void)prescribed_ricci_residual(sph, sph, 1.0, none), ValidationError);
  CHECK_THROWS_AS((void)homothety_fit(sph, sph, none), ValidationError);

  CHECK_THROWS_AS((void)prescribed_ricci_residual(sph, sph, 0.0, pts), ValidationError);
  CHECK_THROWS_AS((void)prescribed_ricci_residual(sph, sph, -2.0, pts), ValidationError);

  CHECK_THROWS_AS((void)prescribed_ricci_residual(ManifoldModel::flat_torus(2),
                                                  ManifoldModel::flat_torus(3), 1.0, pts),
                  ValidationError);
  CHECK_THROWS_AS((void)homothety_fit(sph, ManifoldModel::flat_torus(2), pts), ValidationError);

  SUBCASE("indefinite h is rejected before any curvature work") {
    Chart flat;
    flat.in_domain = [](const Vector&) { return true; };
    flat.metric = [](const Vector&) -> Matrix { return Matrix::Identity(2, 2); };
    flat.periods = Vector::Zero(2);
    Chart indefinite = flat;
    indefinite.metric = [](const Vector&) -> Matrix {
      Matrix g(2, 2);
      g << 1.0, 0.0, 0.0, -0.5;
      return g;
    };
    const ManifoldModel g_flat = ManifoldModel::custom(2, flat);
    const ManifoldModel h_bad = ManifoldModel::custom(2, indefinite);
    CHECK_THROWS_AS((void)prescribed_ricci_residual(g_flat, h_bad, 1.0, patch_points()),
                    ValidationError);
  }

  SUBCASE("worst-offender bookkeeping") {
    const ManifoldModel torus = ManifoldModel::flat_torus(2);
    const StructureSpec forced{MapModel::sin_perturbed(torus, torus, 0.3), 1.0, 0.0};
    const auto field = conservativity_residual(forced, torus_points(2, 11, rng));
    REQUIRE(field.values.size() == 11);
    CHECK(field.worst_index < field.values.size());
    CHECK(field.values[field.worst_index] == field.sup);
    CHECK(field.sup == *std::max_element(field.values.begin(), field.values.end()));
  }
}

TEST_CASE("conservativity vanishes for harmonic maps") {
  Rng rng(71003);
  std::vector<StructureSpec> specs;
  const ManifoldModel sph = ManifoldModel::round_sphere(2, 1.0);
  specs.push_back({MapModel::identity_map(sph.scaled(2.0), sph), 1.0, 0.0});
  specs.push_back({fixtures::inversion_identity(2, 1.0), 1.0, 0.0});
  Matrix a(2, 2);
  a << 1.0, 0.0, 0.0, 2.0;
  const ManifoldModel torus = ManifoldModel::flat_torus(2);
  specs.push_back({MapModel::linear_torus(torus, torus, a), 1.0, 0.0});
  specs.push_back({MapModel::equator_inclusion(1.5), 1.0, 0.0});
  Vector q(2);
  q << 0.2, -0.4;
  specs.push_back({MapModel::constant_map(torus, sph, ChartPoint(0, q)), 1.0, 0.0});

  for (const auto& spec : specs) {
    std::vector<ChartPoint> pts;
    if (spec.g().dim() == 1) {
      for (int i = 0; i < 8; ++i) pts.emplace_back(0, Vector::Constant(1, 0.11 + 0.7 * i));
    } else if (spec.g().kind() == ManifoldKind::FlatTorus) {
      pts = torus_points(2, 8, rng);
    } else {
      pts = sphere_points(2, 8, rng);
    }
    CHECK(conservativity_residual(spec, pts).sup <= 1e-8);
  }
}

TEST_CASE("forced torus map matches the analytic conservativity contraction") {
  const int m = 2;
  const double eps = 0.3;
  const ManifoldModel torus = ManifoldModel::flat_torus(m);
  const StructureSpec spec{MapModel::sin_perturbed(torus, torus, eps), 1.0, 0.0};
  Rng rng(71004);
  const auto pts = torus_points(m, 12, rng);
  const auto field = conservativity_residual(spec, pts);
  REQUIRE(field.values.size() == pts.size());
  CHECK(field.sup > 1.0);

  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Vector& x = pts[k].x;
    Vector tau(m);
    Matrix d = Matrix::Identity(m, m);
    for (int a = 0; a < m; ++a) {
      const int i = (a + 1) % m;
      tau[a] = -eps * kTau * kTau * std::sin(kTau * x[i]);
      d(a, i) += eps * kTau * std::cos(kTau * x[i]);
    }
    const Vector contraction = d.transpose() * tau;
    CHECK(field.values[k] == doctest::Approx(contraction.norm()).epsilon(1e-10));
  }
}

TEST_CASE("prescribed Ricci residual on spheres, tori, and perturbed metrics") {
  Rng rng(71005);

  SUBCASE("every homothety of the round sphere solves Ric = (m-1) h") {
    for (int m : {2, 3}) {
      const ManifoldModel h = ManifoldModel::round_sphere(m, 1.0);
      const auto pts = sphere_points(m, 10, rng);
      for (double mu : {0.5, 1.0, 3.0}) {
        CHECK(prescribed_ricci_residual(h.scaled(mu), h, static_cast<double>(m - 1), pts).sup <=
              1e-8);
      }
    }
  }

  SUBCASE("flat torus against c = 1 misses by exactly the metric itself") {
    const ManifoldModel torus = ManifoldModel::flat_torus(2);
    const auto field = prescribed_ricci_residual(torus, torus, 1.0, torus_points(2, 6, rng));
    CHECK(field.sup == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("a non-conformal bump of the sphere metric is detected") {
    const ManifoldModel base = patch_metric(0.0);
    const ManifoldModel bumped = patch_metric(0.1);
    const auto pts = patch_points();
    CHECK(prescribed_ricci_residual(base, base, 1.0, pts).sup <= 1e-5);
    CHECK(prescribed_ricci_residual(bumped, base, 1.0, pts).sup > 0.01);
  }
}

TEST_CASE("Ricci ignores homothetic rescaling of its input metric") {
  Rng rng(71006);
  const ManifoldModel h = ManifoldModel::round_sphere(2, 1.0);
  const auto pts = sphere_points(2, 8, rng);
  const double reference = prescribed_ricci_residual(h, h, 1.0, pts).sup;
  for (double mu : {0.5, 2.0}) {
    const double rescaled = prescribed_ricci_residual(h.scaled(mu), h, 1.0, pts).sup;
    CHECK(std::abs(reference - rescaled) <= 1e-10);
  }

  // the tensor identity Ric(mu g) = Ric(g) holds even far from a solution
  const ManifoldModel bumped = patch_metric(0.1);
  for (double mu : {0.5, 2.0}) {
    const ManifoldModel rescaled = bumped.scaled(mu);
    for (const auto& p : patch_points()) {
      const Matrix diff = ricci(rescaled, p) - ricci(bumped, p);
      CHECK(diff.cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("the two residual entry points agree") {
  Rng rng(71007);
  for (int m : {2, 3}) {
    const ManifoldModel h = ManifoldModel::round_sphere(m, 1.0);
    const auto pts = sphere_points(m, 8, rng);
    for (double scale : {1.0, 2.0}) {
      const ManifoldModel g = h.scaled(scale);
      for (double c : {static_cast<double>(m - 1), 3.0}) {
        const StructureSpec spec{MapModel::identity_map(g, h), c, 0.0};
        const auto he = harmonic_einstein_residual(spec, pts);
        const auto pr = prescribed_ricci_residual(g, h, c, pts);
        REQUIRE(he.values.size() == pr.values.size());
        for (std::size_t k = 0; k < pts.size(); ++k) {
          CHECK(std::abs(he.values[k] - pr.values[k]) <=
                1e-12 * std::max(1.0, pr.values[k]));
        }
        CHECK(std::abs(he.sup - pr.sup) <= 1e-12 * std::max(1.0, pr.sup));
      }
    }
  }

  const ManifoldModel torus = ManifoldModel::flat_torus(2);
  const StructureSpec flat{MapModel::identity_map(torus, torus), 1.0, 0.0};
  const auto tp = torus_points(2, 5, rng);
  CHECK(harmonic_einstein_residual(flat, tp).sup == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prescribed_ricci_residual(torus, torus, 1.0, tp).sup ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("homothety fit recovers the factor and certifies the corollary fixture") {
  Rng rng(71008);
  const ManifoldModel h = ManifoldModel::round_sphere(2, 1.0);
  const auto pts = sphere_points(2, 9, rng);

  const auto fit = homothety_fit(h.scaled(2.5), h, pts);
  CHECK(fit.mu == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(fit.residual <= 1e-12);

  const auto bump = homothety_fit(patch_metric(0.1), patch_metric(0.0), patch_points());
  CHECK(bump.residual > 1e-3);

  // curvature bound certified, prescribed-Ricci solution verified, and the
  // fit confirms the two metrics are homothetic
  Rng srng(71018);
  const auto bound = sec_upper_bound_check(h, 1.0, 40, 20, srng);
  REQUIRE(bound.pass);
  const ManifoldModel g = h.scaled(1.7);
  REQUIRE(prescribed_ricci_residual(g, h, 1.0, pts).sup <= 1e-8);
  const auto ham = homothety_fit(g, h, pts);
  CHECK(ham.mu == doctest::Approx(1.7).epsilon(1e-10));
  CHECK(ham.residual <= 1e-10);
}

TEST_CASE("rigidity diagnostics accept every shipped harmonic-Einstein structure") {
  struct Fixture {
    StructureSpec spec;
    GridSpec grid;
  };
  const ManifoldModel torus = ManifoldModel::flat_torus(2);
  const ManifoldModel sph = ManifoldModel::round_sphere(2, 1.0);
  Vector q(2);
  q << 0.3, 0.7;
  std::vector<Fixture> fixtures;
  fixtures.push_back({{MapModel::constant_map(torus, torus, ChartPoint(0, q)), 1.0, 0.0},
                      torus_grid(2, 12)});
  fixtures.push_back({{MapModel::identity_map(sph.scaled(4.0), sph), 1.0, 0.0}, sphere_patch()});
  fixtures.push_back({{MapModel::identity_map(sph.scaled(0.5), sph), 1.0, 0.0}, sphere_patch()});

  Rng rng(71009);
  for (const auto& fixture : fixtures) {
    const StructureSpec& spec = fixture.spec;
    REQUIRE(spec.alpha > 0.0);
    REQUIRE(spec.lambda == 0.0);
    const double k = spec.alpha / (spec.g().dim() - 1);

    const auto bound = sec_upper_bound_check(spec.h(), k, 30, 15, rng);
    REQUIRE(bound.pass);

    std::vector<ChartPoint> pts = spec.g().kind() == ManifoldKind::FlatTorus
                                      ? torus_points(2, 8, rng)
                                      : sphere_points(2, 8, rng);
    REQUIRE(harmonic_einstein_residual(spec, pts).sup <= 1e-8);

    const auto verdict = rigidity_diagnostics(spec.phi, fixture.grid, k);
    const bool accepted = verdict.verdict == RigidityKind::ConstantMap ||
                          verdict.verdict == RigidityKind::HomotheticImmersion;
    CHECK(accepted);
    CHECK(verdict.totally_geodesic);
  }
}
