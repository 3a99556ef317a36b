#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hdvb {

enum class ErrorKind {
  shape,
  config,
  input,
  non_convergence,
  not_psd,
  singular,
  non_stationary,
  estimation,
  bootstrap,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the library. The kind drives the CLI
/// exit-code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Iterative routine stopped at its iteration cap; carries the last iterate.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& message, double best_iterate)
      : Error(ErrorKind::non_convergence, message), best_iterate_(best_iterate) {}

  double best_iterate() const noexcept { return best_iterate_; }
  bool non_converged() const noexcept { return true; }

 private:
  double best_iterate_;
};

class SingularError : public Error {
 public:
  SingularError(const std::string& message, double pivot)
      : Error(ErrorKind::singular, message), pivot_(pivot) {}

  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

/// A bootstrap replicate produced non-finite values.
class BootstrapError : public Error {
 public:
  BootstrapError(const std::string& message, std::size_t replicate, std::uint64_t seed)
      : Error(ErrorKind::bootstrap, message), replicate_(replicate), seed_(seed) {}

  std::size_t replicate() const noexcept { return replicate_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::size_t replicate_;
  std::uint64_t seed_;
};

}  // namespace hdvb
