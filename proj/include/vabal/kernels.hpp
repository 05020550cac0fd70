#pragma once

#include <cstddef>

namespace vabal::kern {

/// Whether the OpenMP paths are used by the dispatching kernels below.
/// Defaults to true when compiled with OpenMP and more than one thread is
/// available. The serial reference kernels stay callable either way; tests
/// assert both paths produce bit-identical results.
bool parallel_enabled();
void set_parallel(bool enabled);
int max_threads();

// All matrices are row-major. The *_serial variants are the reference
// implementations; the dispatching functions pick the OpenMP path when
// parallel_enabled(). Per output element the accumulation order is identical
// in both paths, so results match bit for bit.

/// c[m,n] = a[m,k] * b[k,n]  (c overwritten unless accumulate)
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_parallel(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// c[m,n] = a[m,k] * b[n,k]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_nt_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// c[k,n] = a[m,k]^T * b[m,n]
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_tn_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// row-broadcast: c[i,:] = a[i,:] + v for every row i
void add_row_vector(const double* a, const double* v, double* c,
                    std::size_t rows, std::size_t cols);

}  // namespace vabal::kern
