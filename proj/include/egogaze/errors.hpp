#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace egogaze {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CoordinateError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised when a trace does not cover a contiguous run of frames.
class GapError : public Error {
 public:
  GapError(const std::string& what, std::vector<int> missing)
      : Error(what), missing_(std::move(missing)) {}
  const std::vector<int>& missing_frames() const { return missing_; }

 private:
  std::vector<int> missing_;
};

/// Malformed input file. `line` is 1-based for text inputs; for binary
/// payloads it is 0 and `offset` holds the byte position.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, std::size_t offset,
             const std::string& message)
      : Error(path + (line ? ":" + std::to_string(line) : "@" + std::to_string(offset)) +
              ": " + message),
        path_(path),
        line_(line),
        offset_(offset) {}
  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string path_;
  std::size_t line_;
  std::size_t offset_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace egogaze
