#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace encdec {

// Dimension disagreement between operands (matmul, cell wiring, ...).
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid scalar argument (non-positive stddev, zero learning rate, ...).
struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller violated an input contract (e.g. sequence not EOS-terminated).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Token id outside the vocabulary, or vocab/table size disagreement.
struct VocabError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed text input; carries the 1-based line number.
struct ParseError : std::runtime_error {
  ParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  std::size_t line;
};

// Corrupt or incompatible checkpoint file.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown key, inconsistent dimensions, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf surfaced where finite values are contractual.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failure, reported with the offending path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace encdec
