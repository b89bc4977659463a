#include "encdec/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "encdec/errors.hpp"

namespace encdec {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a.rows(), a.cols()) + " * " +
                     shape_str(b.rows(), b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.row_data(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* b_row = b.row_data(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix elementwise(const Matrix& m, Nonlinearity kind) {
  if (kind == Nonlinearity::MaxPair) {
    if (m.cols() % 2 != 0) {
      throw ShapeError("elementwise(max-pair): cols must be even, got " +
                       shape_str(m.rows(), m.cols()));
    }
    Matrix out(m.rows(), m.cols() / 2);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < out.cols(); ++j) {
        out(i, j) = std::max(m(i, 2 * j), m(i, 2 * j + 1));
      }
    }
    return out;
  }
  Matrix out(m.rows(), m.cols());
  const auto& src = m.data();
  auto& dst = out.data();
  if (kind == Nonlinearity::Sigmoid) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = sigmoid(src[i]);
  } else {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::tanh(src[i]);
  }
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* in_row = m.row_data(i);
    double* out_row = out.row_data(i);
    double max_v = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m.cols(); ++j) max_v = std::max(max_v, in_row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out_row[j] = std::exp(in_row[j] - max_v);
      sum += out_row[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < m.cols(); ++j) out_row[j] *= inv;
  }
  return out;
}

void softmax_inplace(Vector& logits) {
  double max_v = -std::numeric_limits<double>::infinity();
  for (double v : logits) max_v = std::max(max_v, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max_v);
    sum += v;
  }
  const double inv = 1.0 / sum;
  for (double& v : logits) v *= inv;
}

double log_sum_exp(const Vector& logits) {
  double max_v = -std::numeric_limits<double>::infinity();
  for (double v : logits) max_v = std::max(max_v, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - max_v);
  return max_v + std::log(sum);
}

Matrix gaussian_init(std::size_t rows, std::size_t cols, double stddev, RngState& rng) {
  if (!(stddev > 0.0)) {
    throw ParameterError("gaussian_init: stddev must be > 0");
  }
  Matrix out(rows, cols);
  for (double& v : out.data()) v = stddev * rng.next_gaussian();
  return out;
}

namespace {

// Orthogonalizes the columns of a in place by one-sided Jacobi rotations;
// at convergence the normalized columns are left singular vectors.
void jacobi_orthogonalize(Matrix& a) {
  const std::size_t n = a.cols();
  constexpr double kTol = 1e-14;
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
          const double vp = a(i, p), vq = a(i, q);
          app += vp * vp;
          aqq += vq * vq;
          apq += vp * vq;
        }
        if (std::abs(apq) <= kTol * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < a.rows(); ++i) {
          const double vp = a(i, p), vq = a(i, q);
          a(i, p) = c * vp - s * vq;
          a(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericError("orthogonal_init: Jacobi sweep limit exceeded");
}

}  // namespace

Matrix orthogonal_init(std::size_t rows, std::size_t cols, RngState& rng) {
  if (rows != cols) {
    throw ShapeError("orthogonal_init: square matrix required, got " +
                     shape_str(rows, cols));
  }
  Matrix a = gaussian_init(rows, cols, 1.0, rng);
  jacobi_orthogonalize(a);
  for (std::size_t j = 0; j < cols; ++j) {
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < rows; ++i) norm_sq += a(i, j) * a(i, j);
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t i = 0; i < rows; ++i) a(i, j) *= inv;
  }
  return a;
}

bool all_finite(const Matrix& m) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void matvec_add(Vector& out, const Matrix& m, const Vector& v) {
  if (m.cols() != v.size() || m.rows() != out.size()) {
    throw ShapeError("matvec_add: " + shape_str(m.rows(), m.cols()) + " * vec(" +
                     std::to_string(v.size()) + ") -> vec(" +
                     std::to_string(out.size()) + ")");
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row_data(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j] * v[j];
    out[i] += acc;
  }
}

void matvec_transpose_add(Vector& out, const Matrix& m, const Vector& v) {
  if (m.rows() != v.size() || m.cols() != out.size()) {
    throw ShapeError("matvec_transpose_add: " + shape_str(m.rows(), m.cols()) +
                     "^T * vec(" + std::to_string(v.size()) + ") -> vec(" +
                     std::to_string(out.size()) + ")");
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row_data(i);
    const double vi = v[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[j] * vi;
  }
}

void add_outer(Matrix& m, const Vector& u, const Vector& v) {
  if (m.rows() != u.size() || m.cols() != v.size()) {
    throw ShapeError("add_outer: " + shape_str(m.rows(), m.cols()) + " += vec(" +
                     std::to_string(u.size()) + ") x vec(" +
                     std::to_string(v.size()) + ")^T");
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* row = m.row_data(i);
    const double ui = u[i];
    for (std::size_t j = 0; j < m.cols(); ++j) row[j] += ui * v[j];
  }
}

Vector matvec(const Matrix& m, const Vector& v) {
  Vector out(m.rows(), 0.0);
  matvec_add(out, m, v);
  return out;
}

}  // namespace encdec
