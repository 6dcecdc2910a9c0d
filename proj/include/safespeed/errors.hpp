#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace safespeed {

/// Invalid user input: a parameter, config key or CLI value. `key()` names
/// the offending field path (e.g. "flight.R") when there is one.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what, std::string key = {})
      : std::invalid_argument(key.empty() ? what : key + ": " + what),
        key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The candidate speed leaves no control time after the latency (T <= tau).
class LatencyInfeasible : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Internal numerical failure (non-monotone verdicts, runaway integration).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace safespeed
