#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gpslam {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Parse,
  ReconstructionFailed,
  NoCorrespondences,
  DegenerateGeometry,
  UndefinedResult,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised when the alignment normal equations are rank deficient. Carries the
// names of the pose parameters ("tx", "ty", "tz", "roll", "pitch", "yaw") that
// dominate each null-space direction.
class DegenerateGeometryError : public Error {
 public:
  DegenerateGeometryError(const std::string& what, std::vector<std::string> unobservable)
      : Error(ErrorCode::DegenerateGeometry, what), unobservable_(std::move(unobservable)) {}
  const std::vector<std::string>& unobservable() const noexcept { return unobservable_; }

 private:
  std::vector<std::string> unobservable_;
};

}  // namespace gpslam
