#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

// Dense arithmetic used by the network layers. Every kernel has a portable
// scalar reference and, on x86-64, an AVX2/FMA variant chosen at runtime.
// Both variants perform the same floating-point operations in the same order
// per output element, so their results are bit-identical.
namespace nsgf::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// ISA picked by CPU detection, honouring NSGF_ISA=scalar|avx2.
Isa detected_isa();
// ISA currently used by the dispatching entry points.
Isa active_isa();
bool isa_supported(Isa isa);
// Pins the dispatch to `isa` (tests/benchmarks). std::nullopt restores detection.
void set_isa_override(std::optional<Isa> isa);

// C(m x n) = [C +] A(m x k) * B(k x n).
// A(i, p) is read at a[i * a_row_stride + p * a_col_stride], which lets the
// same kernel multiply by a transposed operand. B and C are row-major.
// Element C(i, j) is reduced as fma(A(i,p), B(p,j), acc) for p = 0..k-1,
// starting from C(i, j) when accumulating and from zero otherwise.
struct GemmArgs {
  std::size_t m = 0, n = 0, k = 0;
  const double* a = nullptr;
  std::ptrdiff_t a_row_stride = 0, a_col_stride = 1;
  const double* b = nullptr;
  std::size_t ldb = 0;
  double* c = nullptr;
  std::size_t ldc = 0;
  bool accumulate = false;
};

void gemm(const GemmArgs& args);

// dst[j] += sum_i src[i * ld + j], rows summed in ascending order.
void column_sum_accumulate(std::size_t rows, std::size_t cols, const double* src,
                           std::size_t ld, double* dst);

// x[i] *= y[i]
void multiply_inplace(std::size_t n, double* x, const double* y);

namespace scalar {
void gemm(const GemmArgs& args);
void column_sum_accumulate(std::size_t rows, std::size_t cols, const double* src,
                           std::size_t ld, double* dst);
void multiply_inplace(std::size_t n, double* x, const double* y);
}  // namespace scalar

namespace avx2 {
void gemm(const GemmArgs& args);
void column_sum_accumulate(std::size_t rows, std::size_t cols, const double* src,
                           std::size_t ld, double* dst);
void multiply_inplace(std::size_t n, double* x, const double* y);
}  // namespace avx2

}  // namespace nsgf::kernels
