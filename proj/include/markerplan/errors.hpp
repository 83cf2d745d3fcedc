#pragma once

#include <stdexcept>
#include <string>

namespace markerplan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegenerateSceneError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  RankDeficientError(int null_directions, const std::string& what)
      : Error(what), null_directions_(null_directions) {}
  int null_directions() const { return null_directions_; }

 private:
  int null_directions_;
};

/// Invalid command-line configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

class StaleCacheError : public Error {
 public:
  using Error::Error;
};

}  // namespace markerplan
