#pragma once

#include <stdexcept>
#include <string>

namespace harmap {

// Point not covered by any chart of the manifold.
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Metric too ill-conditioned for curvature evaluation.
class ConditioningError : public std::runtime_error {
public:
  explicit ConditioningError(const std::string& what) : std::runtime_error(what) {}
};

// 2-plane with (numerically) vanishing Gram determinant.
class DegeneratePlaneError : public std::runtime_error {
public:
  explicit DegeneratePlaneError(const std::string& what) : std::runtime_error(what) {}
};

// Map image not representable in the requested target chart.
class ChartError : public std::runtime_error {
public:
  explicit ChartError(const std::string& what) : std::runtime_error(what) {}
};

// Grid too coarse (or out of domain) for the requested stencil.
class ResolutionError : public std::runtime_error {
public:
  explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

// Operation precondition violated (e.g. Bochner residual on a non-harmonic map).
// Carries the offending residual so callers can report it.
class PreconditionError : public std::runtime_error {
public:
  explicit PreconditionError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_ = 0.0;
};

// Flow state left every valid target chart or produced non-finite values.
class FlowInstabilityError : public std::runtime_error {
public:
  explicit FlowInstabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Bad experiment configuration (parse error, unknown key, invalid value).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid input to a report/table builder.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace harmap
