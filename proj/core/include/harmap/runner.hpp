#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "harmap/config.hpp"

namespace harmap {

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> tol_scale;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitEngineError = 3;

// Runs one experiment end to end: report.json plus kind-specific CSV/SVG
// artifacts land in the output directory. Diagnostics go to `diag`. Exit
// code 0 = all checks pass, 1 = a check failed, 2 = config problem,
// 3 = engine error (partial report still written).
int run_experiment(const std::string& config_path, const RunOverrides& overrides,
                   std::ostream& diag);
int run_loaded(ExperimentConfig config, const RunOverrides& overrides, std::ostream& diag);

}  // namespace harmap
