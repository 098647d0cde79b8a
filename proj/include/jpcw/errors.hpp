#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jpcw {

// Base for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter or argument outside its domain (non-positive rate, level outside (0,1), ...).
class domain_error : public error {
 public:
  using error::error;
};

// MLE does not exist: one group contributed no failures.
class no_mle_error : public error {
 public:
  using error::error;
};

class non_convergence_error : public error {
 public:
  using error::error;
};

// Log-concave sampler could not locate a mode or the right tail is not integrable.
class non_integrable_target_error : public error {
 public:
  using error::error;
};

// Shape posterior is not integrable for the given prior and data.
class improper_posterior_error : public error {
 public:
  using error::error;
};

class singular_information_error : public error {
 public:
  using error::error;
};

class unstable_bootstrap_error : public error {
 public:
  using error::error;
};

class degenerate_weights_error : public error {
 public:
  using error::error;
};

class study_failed_error : public error {
 public:
  using error::error;
};

// Complete-sample fit with no spread in the data.
class degenerate_data_error : public error {
 public:
  using error::error;
};

// A sample violates one of its structural invariants; `invariant()` names it.
class validation_error : public error {
 public:
  validation_error(std::string invariant, const std::string& what)
      : error(invariant + ": " + what), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

// Malformed text input. `line()` is 1-based, 0 when the whole input is at fault.
class parse_error : public error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace jpcw
