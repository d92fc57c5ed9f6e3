#pragma once

#include <stdexcept>
#include <string>

namespace monowarp {

/// Base of every error raised by the library. The CLI maps `usage_error`
/// subclasses to exit code 1 and everything else to exit code 2.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Errors caused by malformed user input (files, flags, experiment specs).
class usage_error : public error {
 public:
  using error::error;
};

#define MONOWARP_DEFINE_ERROR(name, base)  \
  class name : public base {               \
   public:                                 \
    using base::base;                      \
  };

// numerics
MONOWARP_DEFINE_ERROR(not_positive_definite, error)
MONOWARP_DEFINE_ERROR(invalid_lengthscale, error)
MONOWARP_DEFINE_ERROR(length_mismatch, error)
MONOWARP_DEFINE_ERROR(empty_grid, error)
MONOWARP_DEFINE_ERROR(degenerate_input, error)
MONOWARP_DEFINE_ERROR(shrink_limit_exceeded, error)
MONOWARP_DEFINE_ERROR(too_few_observations, error)
MONOWARP_DEFINE_ERROR(degenerate_residuals, error)
MONOWARP_DEFINE_ERROR(dof_too_small, error)
MONOWARP_DEFINE_ERROR(non_finite_response, error)
MONOWARP_DEFINE_ERROR(non_positive_variance, error)

// input handling
MONOWARP_DEFINE_ERROR(unknown_function, usage_error)
MONOWARP_DEFINE_ERROR(parse_error, usage_error)
MONOWARP_DEFINE_ERROR(config_error, usage_error)
MONOWARP_DEFINE_ERROR(spec_error, usage_error)
MONOWARP_DEFINE_ERROR(dimension_mismatch, usage_error)
MONOWARP_DEFINE_ERROR(version_mismatch, usage_error)

#undef MONOWARP_DEFINE_ERROR

}  // namespace monowarp
