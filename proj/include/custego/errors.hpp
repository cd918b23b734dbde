#pragma once

#include <stdexcept>
#include <string>

namespace custego {

/// Malformed or truncated input data (bitstreams, side info, video files).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Message does not fit into the available carriers.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Embedding or extraction could not be completed (infeasible STC, missing side info).
class ExtractionError : public std::runtime_error {
 public:
  explicit ExtractionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace custego
