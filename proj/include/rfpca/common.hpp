#pragma once

#include <stdexcept>
#include <string>

namespace rfpca {

/// Malformed input file (bad magic, truncated payload, ragged rows, ...).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// A configured resource cap was exceeded (e.g. kernel-matrix size guards).
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rfpca
