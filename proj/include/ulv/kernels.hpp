#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Dense double-precision kernels behind the GNN engine. Every backend must
// produce bit-identical results: reductions use a fixed 4-lane accumulation
// with the reduce order (l0+l2)+(l1+l3) followed by a sequential tail, and
// multiply-add is always two rounded operations (no FMA). The scalar table is
// the reference; AVX2/NEON variants are selected at runtime and are verified
// against it by the equivalence tests.

namespace ulv::kern {

struct KernelTable {
  const char* name;

  // sum_i a[i]*b[i], 4-lane blocked.
  double (*dot)(const double* a, const double* b, size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double* y, double alpha, const double* x, size_t n);
  // x[i] *= alpha
  void (*scal)(double* x, double alpha, size_t n);
  // sum_i |x[i]|, 4-lane blocked.
  double (*l1_norm)(const double* x, size_t n);
  // y[i] = max(x[i], 0)
  void (*relu)(double* y, const double* x, size_t n);
  // dx[i] = pre[i] > 0 ? dy[i] : 0
  void (*relu_bwd)(double* dx, const double* dy, const double* pre, size_t n);

  // C(m*n) = A(m*k) * B(k*n), row major; accumulate adds into C instead of
  // overwriting. Inner accumulation is sequential over k per element.
  void (*matmul)(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                 bool accumulate);
  // C(k*n) = A(m*k)^T * B(m*n); sequential over m per element.
  void (*matmul_at_b)(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                      bool accumulate);
  // C(m*n) = A(m*k) * B(n*k)^T; rows of A dotted with rows of B (4-lane blocked).
  void (*matmul_a_bt)(double* c, const double* a, const double* b, size_t m, size_t k, size_t n,
                      bool accumulate);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when unsupported (build or cpu)
const KernelTable* neon_table();

/// Backends usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// The active backend: best available, unless overridden by set_backend()
/// or the ULV_KERNELS environment variable (scalar|avx2|neon).
const KernelTable& active();

/// Force a backend by name; returns false if unknown or unavailable here.
bool set_backend(std::string_view name);

}  // namespace ulv::kern
