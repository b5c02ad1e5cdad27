#include <cmath>
#include <cstddef>

#include "ulv/kernels.hpp"

// Reference backend. The 4-lane blocked reductions mirror the SIMD register
// layout exactly: lane j holds elements j, j+4, j+8, ..., the lanes are
// reduced as (l0+l2)+(l1+l3), and the tail past n&~3 is added sequentially.

namespace ulv::kern {
namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
  const size_t n4 = n & ~size_t{3};
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (size_t i = 0; i < n4; i += 4) {
    l0 += a[i] * b[i];
    l1 += a[i + 1] * b[i + 1];
    l2 += a[i + 2] * b[i + 2];
    l3 += a[i + 3] * b[i + 3];
  }
  double s = (l0 + l2) + (l1 + l3);
  for (size_t i = n4; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double* y, double alpha, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double* x, double alpha, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double l1_norm_scalar(const double* x, size_t n) {
  const size_t n4 = n & ~size_t{3};
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (size_t i = 0; i < n4; i += 4) {
    l0 += std::fabs(x[i]);
    l1 += std::fabs(x[i + 1]);
    l2 += std::fabs(x[i + 2]);
    l3 += std::fabs(x[i + 3]);
  }
  double s = (l0 + l2) + (l1 + l3);
  for (size_t i = n4; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

void relu_scalar(double* y, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_scalar(double* dx, const double* dy, const double* pre, size_t n) {
  for (size_t i = 0; i < n; ++i) dx[i] = pre[i] > 0.0 ? dy[i] : 0.0;
}

// ikj order: the inner update is an axpy over a row of B, so each C element
// accumulates sequentially over k regardless of vector width.
void matmul_scalar(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                   bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) {
      for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
    }
    const double* arow = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      axpy_scalar(crow, arow[p], b + p * n, n);
    }
  }
}

void matmul_at_b_scalar(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                        bool accumulate) {
  if (!accumulate) {
    for (size_t i = 0; i < k * n; ++i) c[i] = 0.0;
  }
  for (size_t p = 0; p < m; ++p) {
    const double* arow = a + p * k;
    const double* brow = b + p * n;
    for (size_t i = 0; i < k; ++i) {
      axpy_scalar(c + i * n, arow[i], brow, n);
    }
  }
}

void matmul_a_bt_scalar(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                        bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double d = dot_scalar(arow, b + j * k, k);
      crow[j] = accumulate ? crow[j] + d : d;
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",        dot_scalar,    axpy_scalar,          scal_scalar,
      l1_norm_scalar,  relu_scalar,   relu_bwd_scalar,      matmul_scalar,
      matmul_at_b_scalar, matmul_a_bt_scalar,
  };
  return table;
}

}  // namespace ulv::kern
