#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lconf {

// Base of every error the library raises. The CLI maps the concrete
// subclasses onto exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed something that violates a documented precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed binary file. offset is the byte position where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Malformed text file. line is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DegenerateGraphError : public Error {
 public:
  DegenerateGraphError(const std::string& what, std::size_t node)
      : Error(what + " (node " + std::to_string(node) + ")"), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (relative residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Mixture fit has nothing to separate (e.g. all losses identical).
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

}  // namespace lconf
