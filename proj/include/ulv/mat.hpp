#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ulv/kernels.hpp"

namespace ulv {

/// Row-major dense double matrix. Value semantics; all arithmetic goes
/// through the active kernel backend.
struct Mat {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(size_t i, size_t j) {
    assert(i < rows && j < cols);
    return a[i * cols + j];
  }
  double operator()(size_t i, size_t j) const {
    assert(i < rows && j < cols);
    return a[i * cols + j];
  }
  double* row(size_t i) { return a.data() + i * cols; }
  const double* row(size_t i) const { return a.data() + i * cols; }
  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  friend bool operator==(const Mat&, const Mat&) = default;

  bool all_finite() const {
    for (double v : a) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void fill(double v) {
    for (double& x : a) x = v;
  }
};

inline Mat matmul(const Mat& x, const Mat& y) {
  assert(x.cols == y.rows);
  Mat c(x.rows, y.cols);
  kern::active().matmul(c.a.data(), x.a.data(), y.a.data(), x.rows, x.cols, y.cols, false);
  return c;
}

/// x^T * y where x is (m*k): result (k*n).
inline Mat matmul_at_b(const Mat& x, const Mat& y) {
  assert(x.rows == y.rows);
  Mat c(x.cols, y.cols);
  kern::active().matmul_at_b(c.a.data(), x.a.data(), y.a.data(), x.rows, x.cols, y.cols, false);
  return c;
}

/// x * y^T where y is (n*k): result (m*n).
inline Mat matmul_a_bt(const Mat& x, const Mat& y) {
  assert(x.cols == y.cols);
  Mat c(x.rows, y.rows);
  kern::active().matmul_a_bt(c.a.data(), x.a.data(), y.a.data(), x.rows, x.cols, y.rows, false);
  return c;
}

/// Each row of m gets bias added elementwise.
inline void add_row_vector(Mat& m, const std::vector<double>& bias) {
  assert(bias.size() == m.cols);
  for (size_t i = 0; i < m.rows; ++i) {
    kern::active().axpy(m.row(i), 1.0, bias.data(), m.cols);
  }
}

inline std::vector<double> col_sums(const Mat& m) {
  std::vector<double> s(m.cols, 0.0);
  for (size_t i = 0; i < m.rows; ++i) {
    kern::active().axpy(s.data(), 1.0, m.row(i), m.cols);
  }
  return s;
}

}  // namespace ulv
