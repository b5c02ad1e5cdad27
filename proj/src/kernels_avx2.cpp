// AVX2 backend. Compiled with -mavx2 on x86-64 only; entered solely through
// the dispatch table after a cpuid check. Multiply and add stay separate
// (_mm256_mul_pd + _mm256_add_pd) so rounding matches the scalar reference.

#include "ulv/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>

namespace ulv::kern {
namespace {

inline double reduce4(__m256d acc) {
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d s2 = _mm_add_pd(lo, hi);  // [l0+l2, l1+l3]
  return _mm_cvtsd_f64(s2) + _mm_cvtsd_f64(_mm_unpackhi_pd(s2, s2));
}

double dot_avx2(const double* a, const double* b, size_t n) {
  const size_t n4 = n & ~size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double s = reduce4(acc);
  for (size_t i = n4; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double* y, double alpha, const double* x, size_t n) {
  const size_t n4 = n & ~size_t{3};
  const __m256d av = _mm256_set1_pd(alpha);
  for (size_t i = 0; i < n4; i += 4) {
    const __m256d t = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, t);
  }
  for (size_t i = n4; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double* x, double alpha, size_t n) {
  const size_t n4 = n & ~size_t{3};
  const __m256d av = _mm256_set1_pd(alpha);
  for (size_t i = 0; i < n4; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  }
  for (size_t i = n4; i < n; ++i) x[i] *= alpha;
}

double l1_norm_avx2(const double* x, size_t n) {
  const size_t n4 = n & ~size_t{3};
  const __m256d signmask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  for (size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(signmask, _mm256_loadu_pd(x + i)));
  }
  double s = reduce4(acc);
  for (size_t i = n4; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

void relu_avx2(double* y, const double* x, size_t n) {
  const size_t n4 = n & ~size_t{3};
  const __m256d zero = _mm256_setzero_pd();
  for (size_t i = 0; i < n4; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (size_t i = n4; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_avx2(double* dx, const double* dy, const double* pre, size_t n) {
  const size_t n4 = n & ~size_t{3};
  const __m256d zero = _mm256_setzero_pd();
  for (size_t i = 0; i < n4; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(dx + i, _mm256_and_pd(mask, _mm256_loadu_pd(dy + i)));
  }
  for (size_t i = n4; i < n; ++i) dx[i] = pre[i] > 0.0 ? dy[i] : 0.0;
}

void matmul_avx2(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                 bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) {
      for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
    }
    const double* arow = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      axpy_avx2(crow, arow[p], b + p * n, n);
    }
  }
}

void matmul_at_b_avx2(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                      bool accumulate) {
  if (!accumulate) {
    for (size_t i = 0; i < k * n; ++i) c[i] = 0.0;
  }
  for (size_t p = 0; p < m; ++p) {
    const double* arow = a + p * k;
    const double* brow = b + p * n;
    for (size_t i = 0; i < k; ++i) {
      axpy_avx2(c + i * n, arow[i], brow, n);
    }
  }
}

void matmul_a_bt_avx2(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                      bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double d = dot_avx2(arow, b + j * k, k);
      crow[j] = accumulate ? crow[j] + d : d;
    }
  }
}

}  // namespace

const KernelTable* avx2_table() {
  if (!__builtin_cpu_supports("avx2")) return nullptr;
  static const KernelTable table{
      "avx2",        dot_avx2,    axpy_avx2,          scal_avx2,
      l1_norm_avx2,  relu_avx2,   relu_bwd_avx2,      matmul_avx2,
      matmul_at_b_avx2, matmul_a_bt_avx2,
  };
  return &table;
}

}  // namespace ulv::kern

#endif  // x86
