#include <immintrin.h>

#include <cmath>

#include "nsgf/kernels.hpp"

namespace nsgf::kernels::avx2 {
namespace {

inline double a_at(const GemmArgs& g, std::size_t i, std::size_t p) {
  return g.a[static_cast<std::ptrdiff_t>(i) * g.a_row_stride +
             static_cast<std::ptrdiff_t>(p) * g.a_col_stride];
}

// MR rows by 4*NV columns, accumulated in registers over the full k range.
template <int MR, int NV>
inline void micro_kernel(const GemmArgs& g, std::size_t i, std::size_t j) {
  __m256d acc[MR][NV];
  for (int r = 0; r < MR; ++r) {
    for (int v = 0; v < NV; ++v) {
      acc[r][v] = g.accumulate ? _mm256_loadu_pd(g.c + (i + r) * g.ldc + j + 4 * v)
                               : _mm256_setzero_pd();
    }
  }
  const double* a_base[MR];
  for (int r = 0; r < MR; ++r) a_base[r] = g.a + static_cast<std::ptrdiff_t>(i + r) * g.a_row_stride;
  for (std::size_t p = 0; p < g.k; ++p) {
    const double* b_row = g.b + p * g.ldb + j;
    __m256d bv[NV];
    for (int v = 0; v < NV; ++v) bv[v] = _mm256_loadu_pd(b_row + 4 * v);
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(p) * g.a_col_stride;
    for (int r = 0; r < MR; ++r) {
      const __m256d av = _mm256_broadcast_sd(a_base[r] + off);
      for (int v = 0; v < NV; ++v) acc[r][v] = _mm256_fmadd_pd(av, bv[v], acc[r][v]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    for (int v = 0; v < NV; ++v) _mm256_storeu_pd(g.c + (i + r) * g.ldc + j + 4 * v, acc[r][v]);
  }
}

inline void scalar_element(const GemmArgs& g, std::size_t i, std::size_t j) {
  double acc = g.accumulate ? g.c[i * g.ldc + j] : 0.0;
  for (std::size_t p = 0; p < g.k; ++p) acc = std::fma(a_at(g, i, p), g.b[p * g.ldb + j], acc);
  g.c[i * g.ldc + j] = acc;
}

template <int MR>
inline void row_block(const GemmArgs& g, std::size_t i) {
  std::size_t j = 0;
  for (; j + 12 <= g.n; j += 12) micro_kernel<MR, 3>(g, i, j);
  for (; j + 8 <= g.n; j += 8) micro_kernel<MR, 2>(g, i, j);
  for (; j + 4 <= g.n; j += 4) micro_kernel<MR, 1>(g, i, j);
  for (; j < g.n; ++j) {
    for (int r = 0; r < MR; ++r) scalar_element(g, i + r, j);
  }
}

}  // namespace

void gemm(const GemmArgs& g) {
  std::size_t i = 0;
  for (; i + 4 <= g.m; i += 4) row_block<4>(g, i);
  for (; i < g.m; ++i) row_block<1>(g, i);
}

void column_sum_accumulate(std::size_t rows, std::size_t cols, const double* src,
                           std::size_t ld, double* dst) {
  std::size_t j = 0;
  for (; j + 4 <= cols; j += 4) {
    __m256d acc = _mm256_loadu_pd(dst + j);
    for (std::size_t i = 0; i < rows; ++i) acc = _mm256_add_pd(acc, _mm256_loadu_pd(src + i * ld + j));
    _mm256_storeu_pd(dst + j, acc);
  }
  for (; j < cols; ++j) {
    double acc = dst[j];
    for (std::size_t i = 0; i < rows; ++i) acc += src[i * ld + j];
    dst[j] = acc;
  }
}

void multiply_inplace(std::size_t n, double* x, const double* y) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) x[i] *= y[i];
}

}  // namespace nsgf::kernels::avx2
