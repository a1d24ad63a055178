#include <cmath>

#include "nsgf/kernels.hpp"

namespace nsgf::kernels::scalar {

void gemm(const GemmArgs& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    const double* a_row = g.a + static_cast<std::ptrdiff_t>(i) * g.a_row_stride;
    double* c_row = g.c + i * g.ldc;
    for (std::size_t j = 0; j < g.n; ++j) {
      double acc = g.accumulate ? c_row[j] : 0.0;
      for (std::size_t p = 0; p < g.k; ++p) {
        acc = std::fma(a_row[static_cast<std::ptrdiff_t>(p) * g.a_col_stride], g.b[p * g.ldb + j], acc);
      }
      c_row[j] = acc;
    }
  }
}

void column_sum_accumulate(std::size_t rows, std::size_t cols, const double* src,
                           std::size_t ld, double* dst) {
  for (std::size_t j = 0; j < cols; ++j) {
    double acc = dst[j];
    for (std::size_t i = 0; i < rows; ++i) acc += src[i * ld + j];
    dst[j] = acc;
  }
}

void multiply_inplace(std::size_t n, double* x, const double* y) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= y[i];
}

}  // namespace nsgf::kernels::scalar
