#pragma once

#include <stdexcept>
#include <string>

namespace spikezip {

// Failure classes. The CLI maps these onto exit codes: configuration and
// validation problems -> 2, numeric trouble (non-finite values,
// non-convergence) -> 3, file I/O -> 4.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct shape_error : config_error {
  using config_error::config_error;
};

struct calibration_error : config_error {
  using config_error::config_error;
};

struct accounting_error : config_error {
  using config_error::config_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct convergence_error : numeric_error {
  convergence_error(const std::string& what, long steps_run)
      : numeric_error(what), steps(steps_run) {}
  long steps;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spikezip
