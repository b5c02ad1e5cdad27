// NEON backend (aarch64). float64x2 is 2 wide, so two registers form the same
// 4-lane accumulator layout as the scalar reference: lanes {0,1} in acc01,
// lanes {2,3} in acc23, reduced as (l0+l2)+(l1+l3). vmulq/vaddq stay separate
// (no vfmaq) to keep rounding identical to the reference.

#include "ulv/kernels.hpp"

#if defined(__aarch64__) || defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>

namespace ulv::kern {
namespace {

inline double reduce4(float64x2_t acc01, float64x2_t acc23) {
  const float64x2_t s2 = vaddq_f64(acc01, acc23);  // [l0+l2, l1+l3]
  return vgetq_lane_f64(s2, 0) + vgetq_lane_f64(s2, 1);
}

double dot_neon(const double* a, const double* b, size_t n) {
  const size_t n4 = n & ~size_t{3};
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  for (size_t i = 0; i < n4; i += 4) {
    acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double s = reduce4(acc01, acc23);
  for (size_t i = n4; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double* y, double alpha, const double* x, size_t n) {
  const size_t n2 = n & ~size_t{1};
  const float64x2_t av = vdupq_n_f64(alpha);
  for (size_t i = 0; i < n2; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(av, vld1q_f64(x + i))));
  }
  for (size_t i = n2; i < n; ++i) y[i] += alpha * x[i];
}

void scal_neon(double* x, double alpha, size_t n) {
  const size_t n2 = n & ~size_t{1};
  const float64x2_t av = vdupq_n_f64(alpha);
  for (size_t i = 0; i < n2; i += 2) {
    vst1q_f64(x + i, vmulq_f64(av, vld1q_f64(x + i)));
  }
  for (size_t i = n2; i < n; ++i) x[i] *= alpha;
}

double l1_norm_neon(const double* x, size_t n) {
  const size_t n4 = n & ~size_t{3};
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  for (size_t i = 0; i < n4; i += 4) {
    acc01 = vaddq_f64(acc01, vabsq_f64(vld1q_f64(x + i)));
    acc23 = vaddq_f64(acc23, vabsq_f64(vld1q_f64(x + i + 2)));
  }
  double s = reduce4(acc01, acc23);
  for (size_t i = n4; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

void relu_neon(double* y, const double* x, size_t n) {
  const size_t n2 = n & ~size_t{1};
  const float64x2_t zero = vdupq_n_f64(0.0);
  for (size_t i = 0; i < n2; i += 2) {
    vst1q_f64(y + i, vmaxq_f64(vld1q_f64(x + i), zero));
  }
  for (size_t i = n2; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_neon(double* dx, const double* dy, const double* pre, size_t n) {
  const size_t n2 = n & ~size_t{1};
  const float64x2_t zero = vdupq_n_f64(0.0);
  for (size_t i = 0; i < n2; i += 2) {
    const uint64x2_t mask = vcgtq_f64(vld1q_f64(pre + i), zero);
    const uint64x2_t dyv = vreinterpretq_u64_f64(vld1q_f64(dy + i));
    vst1q_f64(dx + i, vreinterpretq_f64_u64(vandq_u64(mask, dyv)));
  }
  for (size_t i = n2; i < n; ++i) dx[i] = pre[i] > 0.0 ? dy[i] : 0.0;
}

void matmul_neon(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                 bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) {
      for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
    }
    const double* arow = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      axpy_neon(crow, arow[p], b + p * n, n);
    }
  }
}

void matmul_at_b_neon(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                      bool accumulate) {
  if (!accumulate) {
    for (size_t i = 0; i < k * n; ++i) c[i] = 0.0;
  }
  for (size_t p = 0; p < m; ++p) {
    const double* arow = a + p * k;
    const double* brow = b + p * n;
    for (size_t i = 0; i < k; ++i) {
      axpy_neon(c + i * n, arow[i], brow, n);
    }
  }
}

void matmul_a_bt_neon(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                      bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double d = dot_neon(arow, b + j * k, k);
      crow[j] = accumulate ? crow[j] + d : d;
    }
  }
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{
      "neon",        dot_neon,    axpy_neon,          scal_neon,
      l1_norm_neon,  relu_neon,   relu_bwd_neon,      matmul_neon,
      matmul_at_b_neon, matmul_a_bt_neon,
  };
  return &table;
}

}  // namespace ulv::kern

#endif  // arm
