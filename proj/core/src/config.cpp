#include "harmap/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "harmap/errors.hpp"
#include "harmap/manifold.hpp"
#include "harmap/map_model.hpp"

namespace harmap {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_ident(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

std::string qualified(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

double parse_number(const std::string& raw, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end != raw.c_str() + raw.size() || raw.empty() || errno == ERANGE) {
    throw ConfigError(where + ": not a number: '" + raw + "'");
  }
  return v;
}

// One scalar or flat-array value on the right of `key =`.
ConfigValue parse_value(const std::string& raw, const std::string& where) {
  if (raw.empty()) throw ConfigError(where + ": empty value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw ConfigError(where + ": unterminated string");
    const std::string body = raw.substr(1, raw.size() - 2);
    if (body.find('"') != std::string::npos)
      throw ConfigError(where + ": embedded quote in string");
    return body;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '[') {
    if (raw.back() != ']') throw ConfigError(where + ": unterminated array");
    const std::string body = trim(raw.substr(1, raw.size() - 2));
    if (body.empty()) throw ConfigError(where + ": empty array");
    std::vector<std::string> parts;
    std::string current;
    for (char c : body) {
      if (c == ',') {
        parts.push_back(trim(current));
        current.clear();
      } else {
        current += c;
      }
    }
    parts.push_back(trim(current));
    if (!parts.empty() && parts.front().size() && parts.front().front() == '"') {
      std::vector<std::string> out;
      for (const auto& p : parts) out.push_back(std::get<std::string>(parse_value(p, where)));
      return out;
    }
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(parse_number(p, where));
    return out;
  }
  return parse_number(raw, where);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

// Tracks which keys a loader consumed so leftovers can be rejected by name.
class Reader {
 public:
  explicit Reader(const ParsedConfig& parsed) : parsed_(parsed) {}

  bool has_section(const std::string& section) const { return parsed_.count(section) > 0; }
  bool has(const std::string& section, const std::string& key) const {
    auto it = parsed_.find(section);
    return it != parsed_.end() && it->second.count(key) > 0;
  }

  const ConfigValue& require(const std::string& section, const std::string& key) {
    if (!has(section, key))
      throw ConfigError("missing key: " + qualified(section, key));
    consumed_.insert(qualified(section, key));
    return parsed_.at(section).at(key);
  }

  std::string text(const std::string& section, const std::string& key) {
    const ConfigValue& v = require(section, key);
    if (!std::holds_alternative<std::string>(v))
      throw ConfigError(qualified(section, key) + " must be a string");
    return std::get<std::string>(v);
  }

  std::string text_or(const std::string& section, const std::string& key,
                      const std::string& fallback) {
    return has(section, key) ? text(section, key) : fallback;
  }

  double number(const std::string& section, const std::string& key) {
    const ConfigValue& v = require(section, key);
    if (!std::holds_alternative<double>(v))
      throw ConfigError(qualified(section, key) + " must be a number");
    return std::get<double>(v);
  }

  double number_or(const std::string& section, const std::string& key, double fallback) {
    return has(section, key) ? number(section, key) : fallback;
  }

  int integer(const std::string& section, const std::string& key) {
    const double v = number(section, key);
    if (v != static_cast<double>(static_cast<long long>(v)))
      throw ConfigError(qualified(section, key) + " must be an integer");
    return static_cast<int>(v);
  }

  int integer_or(const std::string& section, const std::string& key, int fallback) {
    return has(section, key) ? integer(section, key) : fallback;
  }

  bool flag_or(const std::string& section, const std::string& key, bool fallback) {
    if (!has(section, key)) return fallback;
    const ConfigValue& v = require(section, key);
    if (!std::holds_alternative<bool>(v))
      throw ConfigError(qualified(section, key) + " must be true or false");
    return std::get<bool>(v);
  }

  std::vector<double> numbers(const std::string& section, const std::string& key) {
    const ConfigValue& v = require(section, key);
    if (std::holds_alternative<double>(v)) return {std::get<double>(v)};
    if (!std::holds_alternative<std::vector<double>>(v))
      throw ConfigError(qualified(section, key) + " must be a number array");
    return std::get<std::vector<double>>(v);
  }

  void finish() const {
    for (const auto& [section, keys] : parsed_) {
      for (const auto& [key, value] : keys) {
        if (!consumed_.count(qualified(section, key)))
          throw ConfigError("unknown key: " + qualified(section, key));
      }
    }
  }

 private:
  const ParsedConfig& parsed_;
  std::set<std::string> consumed_;
};

ManifoldSpec read_manifold(Reader& reader, const std::string& section) {
  if (!reader.has_section(section))
    throw ConfigError("missing section: [" + section + "]");
  ManifoldSpec spec;
  spec.type = reader.text(section, "type");
  if (spec.type == "circle") {
    spec.dim = 1;
    spec.circumference = reader.number_or(section, "circumference", 1.0);
    if (!(spec.circumference > 0.0))
      throw ConfigError(section + ".circumference must be positive");
  } else if (spec.type == "flat-torus" || spec.type == "round-sphere" ||
             spec.type == "hyperbolic-disk") {
    spec.dim = reader.integer_or(section, "dim", 2);
    if (spec.dim < 1) throw ConfigError(section + ".dim must be at least 1");
    if (spec.type == "round-sphere") {
      spec.radius = reader.number_or(section, "radius", 1.0);
      if (!(spec.radius > 0.0)) throw ConfigError(section + ".radius must be positive");
    }
    if (spec.type == "hyperbolic-disk") {
      spec.scale = reader.number_or(section, "scale", 1.0);
      if (!(spec.scale > 0.0)) throw ConfigError(section + ".scale must be positive");
    }
  } else {
    throw ConfigError(section + ".type: unknown manifold type '" + spec.type + "'");
  }
  spec.metric_scale = reader.number_or(section, "metric_scale", 1.0);
  if (!(spec.metric_scale > 0.0))
    throw ConfigError(section + ".metric_scale must be positive");
  return spec;
}

MapSpec read_map(Reader& reader) {
  if (!reader.has_section("map")) throw ConfigError("missing section: [map]");
  MapSpec spec;
  spec.type = reader.text("map", "type");
  if (spec.type == "constant") {
    spec.value = reader.numbers("map", "value");
  } else if (spec.type == "linear-torus") {
    spec.diagonal = reader.numbers("map", "diagonal");
  } else if (spec.type == "sin-perturbed") {
    spec.amplitude = reader.number("map", "amplitude");
  } else if (spec.type != "identity" && spec.type != "inversion-identity") {
    throw ConfigError("map.type: unknown map type '" + spec.type + "'");
  }
  return spec;
}

GridParams read_grid(Reader& reader) {
  if (!reader.has_section("grid")) throw ConfigError("missing section: [grid]");
  GridParams grid;
  grid.nodes = reader.integer("grid", "nodes");
  if (grid.nodes < 3) throw ConfigError("grid.nodes must be at least 3");
  grid.spacing = reader.number_or("grid", "spacing", 0.0);
  if (reader.has("grid", "spacing") && !(grid.spacing > 0.0))
    throw ConfigError("grid.spacing must be positive");
  if (reader.has("grid", "origin")) grid.origin = reader.numbers("grid", "origin");
  return grid;
}

FlowParams read_flow(Reader& reader) {
  if (!reader.has_section("flow")) throw ConfigError("missing section: [flow]");
  FlowParams flow;
  flow.dt = reader.number("flow", "dt");
  if (!(flow.dt > 0.0)) throw ConfigError("flow.dt must be positive");
  flow.max_steps = reader.integer("flow", "max_steps");
  if (flow.max_steps < 0) throw ConfigError("flow.max_steps must be nonnegative");
  flow.tau_tol = reader.number_or("flow", "tau_tol", 1e-8);
  if (!(flow.tau_tol >= 0.0)) throw ConfigError("flow.tau_tol must be nonnegative");
  flow.k = reader.number_or("flow", "k", 0.0);
  flow.expect_totally_geodesic = reader.flag_or("flow", "expect_totally_geodesic", false);
  return flow;
}

LemmaParams read_lemma(Reader& reader) {
  if (!reader.has_section("lemma")) throw ConfigError("missing section: [lemma]");
  LemmaParams lemma;
  lemma.m = reader.integer("lemma", "m");
  lemma.n = reader.integer("lemma", "n");
  if (lemma.m < 2) throw ConfigError("lemma.m must be at least 2");
  if (lemma.n < 2) throw ConfigError("lemma.n must be at least 2");
  lemma.k_values = reader.numbers("lemma", "k_values");
  if (lemma.k_values.empty()) throw ConfigError("lemma.k_values must not be empty");
  for (double k : lemma.k_values) {
    if (k < 0.0) throw ConfigError("lemma.k_values entries must be nonnegative");
  }
  lemma.samples = reader.integer("lemma", "samples");
  if (lemma.samples < 1) throw ConfigError("lemma.samples must be positive");
  return lemma;
}

CurvatureParams read_curvature(Reader& reader) {
  CurvatureParams curvature;
  if (!reader.has_section("curvature")) return curvature;
  curvature.sample_points = reader.integer_or("curvature", "sample_points", 50);
  curvature.planes_per_point = reader.integer_or("curvature", "planes_per_point", 4);
  if (curvature.sample_points < 1)
    throw ConfigError("curvature.sample_points must be positive");
  if (curvature.planes_per_point < 1)
    throw ConfigError("curvature.planes_per_point must be positive");
  curvature.fd_sweep = reader.flag_or("curvature", "fd_sweep", false);
  return curvature;
}

BochnerParams read_bochner(Reader& reader) {
  BochnerParams bochner;
  if (!reader.has_section("bochner")) return bochner;
  bochner.k = reader.number_or("bochner", "k", 0.0);
  bochner.tol = reader.number_or("bochner", "tol", 1e-12);
  if (!(bochner.tol > 0.0)) throw ConfigError("bochner.tol must be positive");
  bochner.fd_sweep = reader.flag_or("bochner", "fd_sweep", false);
  return bochner;
}

PrescriptionParams read_prescription(Reader& reader) {
  PrescriptionParams p;
  if (!reader.has_section("prescription")) return p;
  p.alpha = reader.number_or("prescription", "alpha", 1.0);
  if (p.alpha == 0.0) throw ConfigError("prescription.alpha must be nonzero");
  p.lambda = reader.number_or("prescription", "lambda", 0.0);
  p.c = reader.number_or("prescription", "c", 0.0);
  if (p.c < 0.0) throw ConfigError("prescription.c must be nonnegative");
  p.sample_count = reader.integer_or("prescription", "sample_count", 12);
  if (p.sample_count < 1) throw ConfigError("prescription.sample_count must be positive");
  return p;
}

nlohmann::ordered_json echo_value(const ConfigValue& v) {
  nlohmann::ordered_json j;
  std::visit([&j](const auto& x) { j = x; }, v);
  return j;
}

nlohmann::ordered_json echo_config(const ParsedConfig& parsed) {
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  if (auto it = parsed.find(""); it != parsed.end()) {
    for (const auto& [key, value] : it->second) echo[key] = echo_value(value);
  }
  for (const auto& [section, keys] : parsed) {
    if (section.empty()) continue;
    nlohmann::ordered_json block = nlohmann::ordered_json::object();
    for (const auto& [key, value] : keys) block[key] = echo_value(value);
    echo[section] = std::move(block);
  }
  return echo;
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig parsed;
  parsed[""];
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_ident(section)) throw ConfigError(where + ": bad section name");
      if (parsed.count(section)) throw ConfigError(where + ": duplicate section [" + section + "]");
      parsed[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_ident(key)) throw ConfigError(where + ": bad key name '" + key + "'");
    if (parsed[section].count(key))
      throw ConfigError(where + ": duplicate key " + qualified(section, key));
    parsed[section][key] = parse_value(trim(line.substr(eq + 1)), qualified(section, key));
  }
  return parsed;
}

ParsedConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Curvature: return "curvature";
    case ExperimentKind::Bochner: return "bochner";
    case ExperimentKind::LemmaCampaign: return "lemma-campaign";
    case ExperimentKind::Flow: return "flow";
    case ExperimentKind::Prescription: return "prescription";
  }
  throw ConfigError("experiment_name: bad kind");
}

ExperimentKind experiment_from_name(const std::string& name) {
  if (name == "curvature") return ExperimentKind::Curvature;
  if (name == "bochner") return ExperimentKind::Bochner;
  if (name == "lemma-campaign") return ExperimentKind::LemmaCampaign;
  if (name == "flow") return ExperimentKind::Flow;
  if (name == "prescription") return ExperimentKind::Prescription;
  throw ConfigError("experiment: unknown kind '" + name + "'");
}

ExperimentConfig load_config_text(const std::string& text) {
  const ParsedConfig parsed = parse_config_text(text);
  Reader reader(parsed);
  ExperimentConfig config;
  config.kind = experiment_from_name(reader.text("", "experiment"));
  const int seed = reader.integer_or("", "seed", 2026);
  if (seed < 0) throw ConfigError("seed must be nonnegative");
  config.seed = static_cast<std::uint64_t>(seed);
  config.out_dir = reader.text_or("", "out_dir", "out");
  config.tol_scale = reader.number_or("", "tol_scale", 1.0);
  if (!(config.tol_scale > 0.0)) throw ConfigError("tol_scale must be positive");

  switch (config.kind) {
    case ExperimentKind::Curvature:
      config.manifold = read_manifold(reader, "manifold");
      config.curvature = read_curvature(reader);
      break;
    case ExperimentKind::Bochner:
      config.source = read_manifold(reader, "source");
      config.target = read_manifold(reader, "target");
      config.map = read_map(reader);
      config.grid = read_grid(reader);
      config.bochner = read_bochner(reader);
      break;
    case ExperimentKind::LemmaCampaign:
      config.lemma = read_lemma(reader);
      break;
    case ExperimentKind::Flow:
      config.source = read_manifold(reader, "source");
      config.target = read_manifold(reader, "target");
      config.map = read_map(reader);
      config.grid = read_grid(reader);
      config.flow = read_flow(reader);
      break;
    case ExperimentKind::Prescription:
      config.source = read_manifold(reader, "source");
      config.target = read_manifold(reader, "target");
      config.map = read_map(reader);
      config.prescription = read_prescription(reader);
      break;
  }
  reader.finish();
  config.echo = echo_config(parsed);
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str());
}

std::uint64_t resolve_seed(const ExperimentConfig& config, std::optional<std::uint64_t> flag,
                           const char* env_text) {
  if (flag) return *flag;
  if (env_text != nullptr && *env_text != '\0') {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env_text, &end, 10);
    if (end == env_text || *end != '\0' || errno == ERANGE) {
      throw ConfigError(std::string(kSeedEnvVar) + " must be an unsigned integer");
    }
    return static_cast<std::uint64_t>(v);
  }
  return config.seed;
}

ManifoldModel build_manifold(const ManifoldSpec& spec) {
  ManifoldModel model = [&spec]() {
    if (spec.type == "flat-torus") return ManifoldModel::flat_torus(spec.dim);
    if (spec.type == "round-sphere") return ManifoldModel::round_sphere(spec.dim, spec.radius);
    if (spec.type == "hyperbolic-disk")
      return ManifoldModel::hyperbolic_disk(spec.dim, spec.scale);
    if (spec.type == "circle") return ManifoldModel::circle(spec.circumference);
    throw ConfigError("unknown manifold type '" + spec.type + "'");
  }();
  if (spec.metric_scale != 1.0) model = model.scaled(spec.metric_scale);
  return model;
}

MapModel build_map(const MapSpec& spec, const ManifoldModel& source,
                   const ManifoldModel& target) {
  if (spec.type == "identity") return MapModel::identity_map(source, target);
  if (spec.type == "inversion-identity") {
    // The sphere identity written across antipodal stereographic charts,
    // x -> r^2 x / |x|^2.  Unlike the plain identity its chart expression is
    // nonlinear, so finite-difference variants carry visible truncation
    // error; that makes it the right fixture for convergence sweeps.
    if (source.kind() != ManifoldKind::RoundSphere ||
        target.kind() != ManifoldKind::RoundSphere)
      throw ConfigError("map.type inversion-identity requires round-sphere source and target");
    if (source.dim() != target.dim() || source.radius() != target.radius())
      throw ConfigError(
          "map.type inversion-identity requires matching sphere dimension and radius");
    const double r2 = source.radius() * source.radius();
    const int m = source.dim();
    auto f = [r2](const ChartPoint& p) {
      const double s = p.x.squaredNorm();
      return ChartPoint(1, (r2 / s) * p.x);
    };
    auto df = [r2, m](const ChartPoint& p) -> Matrix {
      const double s = p.x.squaredNorm();
      Matrix d(m, m);
      for (int a = 0; a < m; ++a)
        for (int i = 0; i < m; ++i)
          d(a, i) = r2 * (((a == i) ? 1.0 : 0.0) / s - 2.0 * p.x[a] * p.x[i] / (s * s));
      return d;
    };
    auto ddf = [r2, m](const ChartPoint& p) {
      const double s = p.x.squaredNorm();
      std::vector<Matrix> h(m, Matrix::Zero(m, m));
      for (int a = 0; a < m; ++a)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            const double dai = (a == i) ? 1.0 : 0.0;
            const double daj = (a == j) ? 1.0 : 0.0;
            const double dij = (i == j) ? 1.0 : 0.0;
            h[a](i, j) =
                r2 * (-2.0 * (dai * p.x[j] + daj * p.x[i] + dij * p.x[a]) / (s * s) +
                      8.0 * p.x[a] * p.x[i] * p.x[j] / (s * s * s));
          }
      return h;
    };
    return MapModel::custom(source, target, f, df, ddf);
  }
  if (spec.type == "constant") {
    if (static_cast<int>(spec.value.size()) != target.dim())
      throw ConfigError("map.value must have one entry per target dimension");
    Vector v(target.dim());
    for (int i = 0; i < target.dim(); ++i) v[i] = spec.value[i];
    return MapModel::constant_map(source, target, ChartPoint(0, v));
  }
  if (spec.type == "linear-torus") {
    if (static_cast<int>(spec.diagonal.size()) != source.dim() ||
        source.dim() != target.dim())
      throw ConfigError("map.diagonal must have one entry per dimension");
    Matrix a = Matrix::Zero(target.dim(), source.dim());
    for (int i = 0; i < source.dim(); ++i) a(i, i) = spec.diagonal[i];
    return MapModel::linear_torus(source, target, a);
  }
  if (spec.type == "sin-perturbed")
    return MapModel::sin_perturbed(source, target, spec.amplitude);
  throw ConfigError("unknown map type '" + spec.type + "'");
}

}  // namespace harmap
