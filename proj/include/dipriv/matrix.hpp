#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "dipriv/errors.hpp"

namespace dipriv {

/// Dense 2-D array of doubles, row-major. The convention throughout the
/// library is: rows = feature/unit dimension, one column per batch element.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto& row : rows) {
      if (row.size() != m.cols_) throw ShapeError("from_rows: ragged initializer");
      std::size_t c = 0;
      for (double v : row) m(r, c++) = v;
      ++r;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Products. The *_into variants accumulate into a preallocated result and are
// the hot path of the forward/backward passes; the value-returning wrappers
// are the public face.
// ---------------------------------------------------------------------------

/// out += a * b
inline void matmul_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.rows(),
                  "matmul: inner dimensions differ (" + detail::shape_str(a) + " * " +
                      detail::shape_str(b) + ")");
  detail::require(out.rows() == a.rows() && out.cols() == b.cols(),
                  "matmul: result shape mismatch");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* out_row = out.row_ptr(i);
    const double* a_row = a.row_ptr(i);
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a_row[l];
      const double* b_row = b.row_ptr(l);
      for (std::size_t j = 0; j < n; ++j) out_row[j] += av * b_row[j];
    }
  }
}

/// out += a * b^T
inline void matmul_nt_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.cols(),
                  "matmul_nt: inner dimensions differ (" + detail::shape_str(a) + " * " +
                      detail::shape_str(b) + "^T)");
  detail::require(out.rows() == a.rows() && out.cols() == b.rows(),
                  "matmul_nt: result shape mismatch");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a.row_ptr(i);
    double* out_row = out.row_ptr(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* b_row = b.row_ptr(j);
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += a_row[l] * b_row[l];
      out_row[j] += acc;
    }
  }
}

/// out += a^T * b
inline void matmul_tn_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows(),
                  "matmul_tn: inner dimensions differ (" + detail::shape_str(a) + "^T * " +
                      detail::shape_str(b) + ")");
  detail::require(out.rows() == a.cols() && out.cols() == b.cols(),
                  "matmul_tn: result shape mismatch");
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  for (std::size_t l = 0; l < k; ++l) {
    const double* a_row = a.row_ptr(l);
    const double* b_row = b.row_ptr(l);
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a_row[i];
      double* out_row = out.row_ptr(i);
      for (std::size_t j = 0; j < n; ++j) out_row[j] += av * b_row[j];
    }
  }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  matmul_acc(out, a, b);
  return out;
}

inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  matmul_nt_acc(out, a, b);
  return out;
}

inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  matmul_tn_acc(out, a, b);
  return out;
}

/// W*x + b with the bias column broadcast across the columns of x.
inline Matrix affine(const Matrix& w, const Matrix& x, const Matrix& b) {
  detail::require(b.rows() == w.rows() && b.cols() == 1,
                  "affine: bias must be a (rows(W) x 1) column");
  Matrix out(w.rows(), x.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* row = out.row_ptr(i);
    const double bv = b(i, 0);
    for (std::size_t j = 0; j < out.cols(); ++j) row[j] = bv;
  }
  matmul_acc(out, w, x);
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise operations
// ---------------------------------------------------------------------------

enum class Unary { sigmoid, tanh, exp, log };

inline double sigmoid(double v) {
  // Split on sign so exp never overflows.
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline Matrix map_elementwise(const Matrix& m, Unary f) {
  Matrix out(m.rows(), m.cols());
  const double* src = m.data();
  double* dst = out.data();
  const std::size_t n = m.size();
  switch (f) {
    case Unary::sigmoid:
      for (std::size_t i = 0; i < n; ++i) dst[i] = sigmoid(src[i]);
      break;
    case Unary::tanh:
      for (std::size_t i = 0; i < n; ++i) dst[i] = std::tanh(src[i]);
      break;
    case Unary::exp:
      for (std::size_t i = 0; i < n; ++i) dst[i] = std::exp(src[i]);
      break;
    case Unary::log:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(src[i] > 0.0)) throw DomainError("map_elementwise: log of non-positive entry");
        dst[i] = std::log(src[i]);
      }
      break;
  }
  return out;
}

/// Column-wise softmax with max subtraction. Each output column is a
/// probability vector (non-negative, sums to 1).
inline Matrix softmax_columns(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.rows(); ++i) mx = std::max(mx, m(i, j));
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double e = std::exp(m(i, j) - mx);
      out(i, j) = e;
      sum += e;
    }
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) /= sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small elementwise helpers used by the recurrent passes
// ---------------------------------------------------------------------------

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  detail::require(a.same_shape(b), "hadamard: shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  detail::require(a.same_shape(b), "add: shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
  detail::require(a.same_shape(b), "sub: shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

inline Matrix scale(const Matrix& a, double s) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * s;
  return out;
}

inline void add_in_place(Matrix& a, const Matrix& b) {
  detail::require(a.same_shape(b), "add_in_place: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

/// Sum over columns, producing a (rows x 1) column.
inline Matrix row_sums(const Matrix& m) {
  Matrix out(m.rows(), 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    const double* row = m.row_ptr(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s += row[j];
    out(i, 0) = s;
  }
  return out;
}

inline Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  detail::require(top.cols() == bottom.cols(), "vstack: column counts differ");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  std::copy(top.data(), top.data() + top.size(), out.data());
  std::copy(bottom.data(), bottom.data() + bottom.size(), out.data() + top.size());
  return out;
}

}  // namespace dipriv
