#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "harmap/tensor.hpp"

namespace harmap {

// One experiment per file, TOML-style: `key = value` lines grouped under
// bracketed sections, values are strings, numbers, booleans, or flat
// arrays. Unknown keys anywhere are rejected.
using ConfigValue =
    std::variant<bool, double, std::string, std::vector<double>, std::vector<std::string>>;
using ConfigSection = std::map<std::string, ConfigValue>;
using ParsedConfig = std::map<std::string, ConfigSection>;  // "" = top level

ParsedConfig parse_config_text(const std::string& text);
ParsedConfig parse_config_file(const std::string& path);

enum class ExperimentKind { Curvature, Bochner, LemmaCampaign, Flow, Prescription };

const char* experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

struct ManifoldSpec {
  std::string type;  // flat-torus | round-sphere | hyperbolic-disk | circle
  int dim = 2;
  double radius = 1.0;        // round-sphere
  double scale = 1.0;         // hyperbolic-disk
  double circumference = 1.0; // circle
  double metric_scale = 1.0;  // optional homothety applied on top
};

struct MapSpec {
  std::string type;  // identity | inversion-identity | constant | linear-torus | sin-perturbed
  std::vector<double> value;     // constant: image coordinates (chart 0)
  std::vector<double> diagonal;  // linear-torus: diagonal entries
  double amplitude = 0.0;        // sin-perturbed
};

struct GridParams {
  int nodes = 0;
  double spacing = 0.0;  // 0 = use 1/nodes
  std::vector<double> origin;
};

struct FlowParams {
  double dt = 0.0;
  int max_steps = 0;
  double tau_tol = 1e-8;
  double k = 0.0;
  bool expect_totally_geodesic = false;
};

struct LemmaParams {
  int m = 2;
  int n = 2;
  std::vector<double> k_values;
  int samples = 0;
};

struct CurvatureParams {
  int sample_points = 50;
  int planes_per_point = 4;
  bool fd_sweep = false;
};

struct BochnerParams {
  double k = 0.0;
  double tol = 1e-12;
  bool fd_sweep = false;
};

struct PrescriptionParams {
  double alpha = 1.0;
  double lambda = 0.0;
  double c = 0.0;  // 0 = skip the prescribed-Ricci / homothety checks
  int sample_count = 12;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Curvature;
  std::uint64_t seed = 2026;
  std::string out_dir = "out";
  double tol_scale = 1.0;

  std::optional<ManifoldSpec> manifold;  // curvature
  std::optional<ManifoldSpec> source;
  std::optional<ManifoldSpec> target;
  std::optional<MapSpec> map;
  std::optional<GridParams> grid;
  std::optional<FlowParams> flow;
  std::optional<LemmaParams> lemma;
  std::optional<CurvatureParams> curvature;
  std::optional<BochnerParams> bochner;
  std::optional<PrescriptionParams> prescription;

  nlohmann::ordered_json echo;  // deterministic echo of the parsed file
};

// Parses, validates per experiment kind, and rejects unknown keys; every
// ConfigError message names the offending section.key.
ExperimentConfig load_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// The one documented environment override, for CI fuzzing. Priority:
// explicit flag, then the environment, then the config value.
inline constexpr const char* kSeedEnvVar = "HARMAP_SEED";
std::uint64_t resolve_seed(const ExperimentConfig& config, std::optional<std::uint64_t> flag,
                           const char* env_text);

class ManifoldModel;
class MapModel;
ManifoldModel build_manifold(const ManifoldSpec& spec);
MapModel build_map(const MapSpec& spec, const ManifoldModel& source, const ManifoldModel& target);

}  // namespace harmap
