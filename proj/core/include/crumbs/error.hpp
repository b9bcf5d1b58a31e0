#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crumbs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite entries, wrong dimensions, or arguments outside their domain.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A direction too short to normalize (shrinking-rank adaptation).
class DegenerateDirection : public Error {
 public:
  using Error::Error;
};

/// A series with zero sample variance; carries the offending coordinate.
class DegenerateSeries : public Error {
 public:
  explicit DegenerateSeries(std::size_t coordinate)
      : Error("degenerate series (zero variance) at coordinate " +
              std::to_string(coordinate)),
        coordinate_(coordinate) {}

  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

/// Unknown target/method names or malformed experiment files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or unwritable files.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace crumbs
