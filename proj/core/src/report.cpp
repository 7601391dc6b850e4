#include "harmap/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "harmap/errors.hpp"
#include "harmap/version.hpp"

namespace harmap {
namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ConvergenceTable convergence_table(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 3)
    throw ValidationError("convergence_table: needs at least 3 (h, residual) entries");
  for (const auto& [h, r] : series) {
    if (!(h > 0.0)) throw ValidationError("convergence_table: steps must be positive");
    if (!(r > 0.0)) throw ValidationError("convergence_table: residuals must be positive");
  }
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    if (!(series[i + 1].first < series[i].first))
      throw ValidationError("convergence_table: steps must decrease monotonically");
    const double ratio = series[i].first / series[i + 1].first;
    if (std::abs(ratio - 2.0) > 1e-6)
      throw ValidationError("convergence_table: steps must halve between rows");
  }
  ConvergenceTable table;
  table.rows.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    ConvergenceRow row;
    row.h = series[i].first;
    row.residual = series[i].second;
    if (i > 0) {
      row.order = std::log2(series[i - 1].second / series[i].second);
      row.has_order = true;
      table.mean_order += row.order;
      table.final_order = row.order;
    }
    table.rows.push_back(row);
  }
  table.mean_order /= static_cast<double>(series.size() - 1);
  return table;
}

std::string convergence_csv(const ConvergenceTable& table) {
  std::string csv = "h,residual,observed_order\n";
  for (const auto& row : table.rows) {
    csv += fmt("%.12e", row.h) + "," + fmt("%.12e", row.residual) + ",";
    if (row.has_order) csv += fmt("%.6f", row.order);
    csv += "\n";
  }
  csv += "summary,," + fmt("%.6f", table.mean_order) + "\n";
  return csv;
}

RunReport::RunReport(std::string experiment, std::uint64_t seed, double tol_scale,
                     nlohmann::ordered_json config_echo)
    : experiment_(std::move(experiment)),
      seed_(seed),
      tol_scale_(tol_scale),
      config_(std::move(config_echo)) {}

void RunReport::add_check(const std::string& name, double value, double tolerance) {
  add_check(name, value, tolerance, std::abs(value) <= tolerance);
}

void RunReport::add_check(const std::string& name, double value, double tolerance, bool pass) {
  checks_.push_back({name, value, tolerance, pass});
}

void RunReport::add_result(const std::string& key, const nlohmann::ordered_json& value) {
  results_[key] = value;
}

void RunReport::add_artifact(const std::string& name, const std::string& filename) {
  artifacts_[name] = filename;
}

void RunReport::mark_engine_error(const std::string& message) {
  engine_error_ = true;
  error_ = message;
}

bool RunReport::all_passed() const {
  if (engine_error_) return false;
  for (const auto& check : checks_) {
    if (!check.pass) return false;
  }
  return true;
}

std::string RunReport::status() const {
  if (engine_error_) return "engine_error";
  return all_passed() ? "ok" : "check_failure";
}

nlohmann::ordered_json RunReport::json() const {
  nlohmann::ordered_json j;
  j["schema"] = "harmap-report/1";
  j["tool"] = {{"name", "harmap"}, {"version", version()}};
  j["experiment"] = experiment_;
  j["seed"] = seed_;
  j["tol_scale"] = tol_scale_;
  j["config"] = config_;
  j["status"] = status();
  if (engine_error_) j["error"] = error_;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& check : checks_) {
    checks.push_back({{"name", check.name},
                      {"value", check.value},
                      {"tolerance", check.tolerance},
                      {"pass", check.pass}});
  }
  j["checks"] = std::move(checks);
  j["results"] = results_;
  j["artifacts"] = artifacts_;
  j["timestamp"] = {{"written_at", utc_now()}, {"wall_ms", wall_ms_}};
  return j;
}

std::string RunReport::serialize() const { return json().dump(2) + "\n"; }

nlohmann::ordered_json RunReport::strip_timestamp(nlohmann::ordered_json report) {
  report.erase("timestamp");
  return report;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

void write_polyline_svg(const std::string& path, const std::vector<double>& xs,
                        const std::vector<double>& ys, const std::string& title, bool log_y) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ValidationError("write_polyline_svg: need matching series of length >= 2");
  const double width = 640.0, height = 400.0, margin = 50.0;
  std::vector<double> plot_y(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    plot_y[i] = log_y ? std::log10(std::max(ys[i], 1e-300)) : ys[i];
  }
  double x_min = xs.front(), x_max = xs.front();
  double y_min = plot_y.front(), y_max = plot_y.front();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x_min = std::min(x_min, xs[i]);
    x_max = std::max(x_max, xs[i]);
    y_min = std::min(y_min, plot_y[i]);
    y_max = std::max(y_max, plot_y[i]);
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;
  auto px = [&](double x) { return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin); };
  auto py = [&](double y) {
    return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin);
  };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
                    "viewBox=\"0 0 640 400\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" "
         "font-size=\"14\">" + title + (log_y ? " (log scale)" : "") + "</text>\n";
  svg += "<line x1=\"50\" y1=\"350\" x2=\"590\" y2=\"350\" stroke=\"black\"/>\n";
  svg += "<line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"350\" stroke=\"black\"/>\n";
  svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg += fmt("%.2f", px(xs[i])) + "," + fmt("%.2f", py(plot_y[i]));
    if (i + 1 < xs.size()) svg += " ";
  }
  svg += "\"/>\n";
  svg += "<text x=\"50\" y=\"370\" font-family=\"monospace\" font-size=\"11\">" +
         fmt("%.4g", x_min) + "</text>\n";
  svg += "<text x=\"590\" y=\"370\" text-anchor=\"end\" font-family=\"monospace\" "
         "font-size=\"11\">" + fmt("%.4g", x_max) + "</text>\n";
  svg += "<text x=\"46\" y=\"350\" text-anchor=\"end\" font-family=\"monospace\" "
         "font-size=\"11\">" + fmt("%.4g", log_y ? std::pow(10.0, y_min) : y_min) + "</text>\n";
  svg += "<text x=\"46\" y=\"54\" text-anchor=\"end\" font-family=\"monospace\" "
         "font-size=\"11\">" + fmt("%.4g", log_y ? std::pow(10.0, y_max) : y_max) + "</text>\n";
  svg += "</svg>\n";
  write_text_file(path, svg);
}

}  // namespace harmap
