#ifndef STABLEFK_ERRORS_HPP
#define STABLEFK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stablefk {

/// Invalid argument or out-of-domain evaluation (singular kernel on the
/// diagonal, alpha outside (0,2), a bad certificate, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed to reach its tolerance (quadrature,
/// factorization, eigen-iteration, calibration bracket).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or schema-violating run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stablefk

#endif  // STABLEFK_ERRORS_HPP
