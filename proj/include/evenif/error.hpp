#pragma once

#include <stdexcept>
#include <string>

namespace evenif {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: schema, data rows, overrides, request bodies. `field` names
// the offending feature or column when one is known; `row` is the 0-based data
// row index, or -1.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message, std::string field = {},
                           long row = -1)
      : Error(message), field_(std::move(field)), row_(row) {}

  const std::string& field() const noexcept { return field_; }
  long row() const noexcept { return row_; }

 private:
  std::string field_;
  long row_;
};

// The individual is not classified positively, so there is no outcome to keep.
class NotPositiveOutcome : public Error {
 public:
  NotPositiveOutcome() : Error("not a positive outcome") {}
};

class EmptyActionSpace : public Error {
 public:
  explicit EmptyActionSpace(const std::string& why)
      : Error("empty action space: " + why) {}
};

// No action has both a kept outcome and strictly positive gain.
class NoEffectiveSemifactual : public Error {
 public:
  explicit NoEffectiveSemifactual(std::string diagnostics)
      : Error("no effective semifactual: " + diagnostics),
        diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

class TimeoutError : public Error {
 public:
  TimeoutError() : Error("explanation timed out") {}
};

class NotFound : public Error {
 public:
  explicit NotFound(const std::string& what) : Error("not found: " + what) {}
};

}  // namespace evenif
