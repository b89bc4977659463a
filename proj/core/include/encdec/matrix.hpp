#pragma once

#include <cstddef>
#include <vector>

#include "encdec/rng.hpp"
#include "encdec/types.hpp"

namespace encdec {

// Dense row-major matrix of 64-bit floats. The single numeric carrier for
// parameters, gradients and activations. All operations are plain sequential
// loops with a fixed evaluation order, so results are reproducible bit for
// bit for identical inputs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const double& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row_data(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_data(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Nonlinearity { Sigmoid, Tanh, MaxPair };

// Standard product; throws ShapeError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// Sigmoid/tanh map elementwise; MaxPair pools adjacent column pairs
// (cols must be even, output has cols/2).
Matrix elementwise(const Matrix& m, Nonlinearity kind);

// Row-wise softmax with per-row max subtraction. Rows sum to 1 within 1e-12.
Matrix softmax_rows(const Matrix& m);

// I.i.d. zero-mean Gaussian entries, row-major draw order. stddev must be > 0.
Matrix gaussian_init(std::size_t rows, std::size_t cols, double stddev, RngState& rng);

// Left-singular-vector matrix of a white Gaussian sample, computed by
// one-sided Jacobi. Square only. Q^T Q = I within 1e-10 per entry.
Matrix orthogonal_init(std::size_t rows, std::size_t cols, RngState& rng);

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

// --- vector kernels used by the recurrent cells -----------------------------

// out += m * v  (m: r x c, v: c, out: r)
void matvec_add(Vector& out, const Matrix& m, const Vector& v);

// out += m^T * v  (m: r x c, v: r, out: c)
void matvec_transpose_add(Vector& out, const Matrix& m, const Vector& v);

// m += u * v^T  (u: rows, v: cols)
void add_outer(Matrix& m, const Vector& u, const Vector& v);

Vector matvec(const Matrix& m, const Vector& v);

double sigmoid(double x);

// In-place stable softmax over a single vector of logits.
void softmax_inplace(Vector& logits);

double log_sum_exp(const Vector& logits);

}  // namespace encdec
