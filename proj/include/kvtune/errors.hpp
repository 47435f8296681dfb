#pragma once

#include <stdexcept>
#include <string>

namespace kvtune {

/// Input rejected by a domain, dataset, or model contract.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A benchmark backend could not produce a measurement.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kvtune
