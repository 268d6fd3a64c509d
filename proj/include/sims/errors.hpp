#pragma once

#include <stdexcept>
#include <string>

namespace sims {

// Invalid user input: bad config values, malformed files, out-of-range
// parameters.  CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

// Geometry construction failure.  Messages name the violated constraint so a
// caller can tell which design parameter is at fault.
struct ConstructionError : std::runtime_error {
  explicit ConstructionError(const std::string &msg) : std::runtime_error(msg) {}
};

// Forward solve failure (Newton divergence after continuation retries,
// linear solver breakdown).  CLI maps this to exit code 3.
struct SolveError : std::runtime_error {
  explicit SolveError(const std::string &msg) : std::runtime_error(msg) {}
};

// Optimization failure (persistent sweep failures, no admissible step).
// CLI maps this to exit code 4.
struct OptimizationError : std::runtime_error {
  explicit OptimizationError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace sims
