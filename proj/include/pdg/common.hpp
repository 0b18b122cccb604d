#pragma once

#include <stdexcept>
#include <string>

namespace pdg {

/// Thrown when an API is called in a way its contract forbids
/// (bad argument combinations, missing required inputs). CLI exit code 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown on malformed or semantically invalid input data
/// (unparsable files, disconnected graphs where connectivity is required,
/// out-of-range configuration values). CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a numerical procedure fails to converge or produces
/// non-finite values. CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Largest node count for which matrices may be materialized densely.
/// Above this only matrix-free operator application is available.
inline constexpr int kDenseLimit = 4096;

}  // namespace pdg
