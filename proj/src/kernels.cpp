#include "vabal/kernels.hpp"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vabal::kern {

namespace {

bool g_parallel =
#ifdef _OPENMP
    true;
#else
    false;
#endif

// Shared row kernels. Both the serial and the OpenMP loops call these, so
// per-element floating point order (and any FMA contraction the compiler
// applies) is identical across paths.

inline void row_nn(const double* a, const double* b, double* c,
                   std::size_t k, std::size_t n) {
  for (std::size_t l = 0; l < k; ++l) {
    const double av = a[l];
    const double* br = b + l * n;
    for (std::size_t j = 0; j < n; ++j) c[j] += av * br[j];
  }
}

inline void row_nt(const double* a, const double* b, double* c,
                   std::size_t k, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* br = b + j * k;
    double acc = c[j];
    for (std::size_t l = 0; l < k; ++l) acc += a[l] * br[l];
    c[j] = acc;
  }
}

// c row i of a^T * b: c[i,:] += sum_l a[l*k + i] * b[l,:]
inline void row_tn(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, std::size_t i) {
  for (std::size_t l = 0; l < m; ++l) {
    const double av = a[l * k + i];
    const double* br = b + l * n;
    for (std::size_t j = 0; j < n; ++j) c[j] += av * br[j];
  }
}

inline void clear_output(double* c, std::size_t count, bool accumulate) {
  if (!accumulate) std::memset(c, 0, count * sizeof(double));
}

}  // namespace

bool parallel_enabled() { return g_parallel; }
void set_parallel(bool enabled) { g_parallel = enabled; }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_output(c, m * n, accumulate);
  for (std::size_t i = 0; i < m; ++i) row_nn(a + i * k, b, c + i * n, k, n);
}

void matmul_parallel(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_output(c, m * n, accumulate);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i)
    row_nn(a + i * k, b, c + i * n, k, n);
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (g_parallel && m > 1)
    matmul_parallel(a, b, c, m, k, n, accumulate);
  else
    matmul_serial(a, b, c, m, k, n, accumulate);
}

void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_output(c, m * n, accumulate);
  for (std::size_t i = 0; i < m; ++i) row_nt(a + i * k, b, c + i * n, k, n);
}

void matmul_nt_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_output(c, m * n, accumulate);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i)
    row_nt(a + i * k, b, c + i * n, k, n);
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (g_parallel && m > 1)
    matmul_nt_parallel(a, b, c, m, k, n, accumulate);
  else
    matmul_nt_serial(a, b, c, m, k, n, accumulate);
}

void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_output(c, k * n, accumulate);
  for (std::size_t i = 0; i < k; ++i) row_tn(a, b, c + i * n, m, k, n, i);
}

void matmul_tn_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  clear_output(c, k * n, accumulate);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(k); ++i)
    row_tn(a, b, c + i * n, m, k, n, i);
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (g_parallel && k > 1)
    matmul_tn_parallel(a, b, c, m, k, n, accumulate);
  else
    matmul_tn_serial(a, b, c, m, k, n, accumulate);
}

void add_row_vector(const double* a, const double* v, double* c,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* ar = a + i * cols;
    double* cr = c + i * cols;
    for (std::size_t j = 0; j < cols; ++j) cr[j] = ar[j] + v[j];
  }
}

}  // namespace vabal::kern
