#pragma once

#include <stdexcept>
#include <string>

namespace dgd {

// Shape disagreement between arrays (matmul inner dims, batch widths, ...).
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse: broken precondition that is a programming error, not bad data.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Math domain violation (log of a non-positive value, ...).
class NumericDomainError : public std::runtime_error {
 public:
  explicit NumericDomainError(const std::string& what) : std::runtime_error(what) {}
};

class IndexError : public std::out_of_range {
 public:
  explicit IndexError(const std::string& what) : std::out_of_range(what) {}
};

// Unusable input data (empty matrix, all-zero sample, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file content; carries a 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// NaN loss or NaN gradients during optimization; names the parameter group
// and, when known, the epoch/batch where it happened.
class TrainingDivergedError : public std::runtime_error {
 public:
  explicit TrainingDivergedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dgd
