#pragma once

#include <stdexcept>
#include <string>

namespace wavesync {

// Base class for all recoverable wavesync errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class EmptyGraph : public Error {
 public:
  explicit EmptyGraph(const std::string& what = "graph is empty") : Error(what) {}
};

class NoCommonNodes : public Error {
 public:
  explicit NoCommonNodes(const std::string& what = "graphs share no node ids")
      : Error(what) {}
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class SingularElimination : public Error {
 public:
  explicit SingularElimination(const std::string& what = "eliminated block is singular")
      : Error(what) {}
};

class TooLarge : public Error {
 public:
  explicit TooLarge(const std::string& what) : Error(what) {}
};

class ConvergenceFailure : public Error {
 public:
  explicit ConvergenceFailure(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

class IndexOutOfRange : public Error {
 public:
  explicit IndexOutOfRange(const std::string& what) : Error(what) {}
};

class NonpositiveLambdaMax : public Error {
 public:
  explicit NonpositiveLambdaMax(const std::string& what = "lambda_max must be > 0")
      : Error(what) {}
};

class NoOverlap : public Error {
 public:
  explicit NoOverlap(const std::string& what = "no correspondence pairs matched")
      : Error(what) {}
};

class MissingAuxiliary : public Error {
 public:
  explicit MissingAuxiliary(const std::string& what) : Error(what) {}
};

class Disconnected : public Error {
 public:
  explicit Disconnected(const std::string& what) : Error(what) {}
};

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what) : Error(what) {}
};

class InvalidSpec : public Error {
 public:
  explicit InvalidSpec(const std::string& what) : Error(what) {}
};

class InvalidGraph : public Error {
 public:
  explicit InvalidGraph(const std::string& what) : Error(what) {}
};

}  // namespace wavesync
