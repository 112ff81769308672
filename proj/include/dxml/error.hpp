#pragma once

#include <stdexcept>
#include <string>

namespace dxml {

/// Bad input data: malformed files, inconsistent dimensions, corrupt models.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or command-line usage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical failure during training (non-finite values).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dxml
