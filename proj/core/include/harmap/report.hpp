#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace harmap {

// Observed-order bookkeeping for a residual-vs-step sweep with halving
// steps. Orders are log2(r_i / r_{i+1}), attached to the finer row.
struct ConvergenceRow {
  double h = 0.0;
  double residual = 0.0;
  double order = 0.0;
  bool has_order = false;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double mean_order = 0.0;
  double final_order = 0.0;
};

ConvergenceTable convergence_table(const std::vector<std::pair<double, double>>& series);
std::string convergence_csv(const ConvergenceTable& table);

// Experiment report with a stable layout: identical inputs serialize to
// identical bytes except for the single timestamp field (which also holds
// the wall clock, the only other run-dependent datum).
class RunReport {
 public:
  RunReport(std::string experiment, std::uint64_t seed, double tol_scale,
            nlohmann::ordered_json config_echo);

  // pass = |value| <= tolerance unless stated explicitly.
  void add_check(const std::string& name, double value, double tolerance);
  void add_check(const std::string& name, double value, double tolerance, bool pass);
  void add_result(const std::string& key, const nlohmann::ordered_json& value);
  void add_artifact(const std::string& name, const std::string& filename);
  void mark_engine_error(const std::string& message);
  void set_wall_ms(double ms) { wall_ms_ = ms; }

  bool all_passed() const;
  bool engine_error() const { return engine_error_; }
  std::string status() const;

  nlohmann::ordered_json json() const;
  std::string serialize() const;  // json() + trailing newline

  static nlohmann::ordered_json strip_timestamp(nlohmann::ordered_json report);

 private:
  struct Check {
    std::string name;
    double value;
    double tolerance;
    bool pass;
  };
  std::string experiment_;
  std::uint64_t seed_;
  double tol_scale_;
  nlohmann::ordered_json config_;
  std::vector<Check> checks_;
  nlohmann::ordered_json results_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json artifacts_ = nlohmann::ordered_json::object();
  bool engine_error_ = false;
  std::string error_;
  double wall_ms_ = 0.0;
};

// Minimal self-contained artifacts; never load-bearing for pass/fail.
void write_polyline_svg(const std::string& path, const std::vector<double>& xs,
                        const std::vector<double>& ys, const std::string& title, bool log_y);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace harmap
