#pragma once

#include <stdexcept>
#include <string>

namespace nhmm {

/// Bad user input: malformed files, calendar margin violations, config key errors.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what, long row = -1, std::string column = {})
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}

  long row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  long row_;
  std::string column_;
};

/// Non-finite likelihoods, failed initialisation and similar numerical breakdowns.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nhmm
