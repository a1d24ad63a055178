#include <atomic>
#include <cstdlib>
#include <string>

#include "nsgf/kernels.hpp"

namespace nsgf::kernels {
namespace {

// -1: no override, otherwise static_cast<int>(Isa).
std::atomic<int> g_override{-1};

bool cpu_has_avx2() {
#if defined(NSGF_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  const bool avx2 = cpu_has_avx2();
  if (const char* env = std::getenv("NSGF_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && avx2) return Isa::kAvx2;
  }
  return avx2 ? Isa::kAvx2 : Isa::kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

Isa detected_isa() {
  static const Isa isa = detect();
  return isa;
}

bool isa_supported(Isa isa) {
  if (isa == Isa::kScalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

Isa active_isa() {
  const int o = g_override.load(std::memory_order_relaxed);
  return o < 0 ? detected_isa() : static_cast<Isa>(o);
}

void set_isa_override(std::optional<Isa> isa) {
  if (isa && !isa_supported(*isa)) isa = Isa::kScalar;
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

#if defined(NSGF_HAVE_AVX2_KERNELS)
#define NSGF_DISPATCH(fn, ...)                              \
  if (active_isa() == Isa::kAvx2) return avx2::fn(__VA_ARGS__); \
  return scalar::fn(__VA_ARGS__)
#else
#define NSGF_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void gemm(const GemmArgs& args) { NSGF_DISPATCH(gemm, args); }

void column_sum_accumulate(std::size_t rows, std::size_t cols, const double* src,
                           std::size_t ld, double* dst) {
  NSGF_DISPATCH(column_sum_accumulate, rows, cols, src, ld, dst);
}

void multiply_inplace(std::size_t n, double* x, const double* y) {
  NSGF_DISPATCH(multiply_inplace, n, x, y);
}

#undef NSGF_DISPATCH

#if !defined(NSGF_HAVE_AVX2_KERNELS)
// Keep the avx2 namespace linkable on targets without the AVX2 translation unit.
namespace avx2 {
void gemm(const GemmArgs& args) { scalar::gemm(args); }
void column_sum_accumulate(std::size_t rows, std::size_t cols, const double* src,
                           std::size_t ld, double* dst) {
  scalar::column_sum_accumulate(rows, cols, src, ld, dst);
}
void multiply_inplace(std::size_t n, double* x, const double* y) { scalar::multiply_inplace(n, x, y); }
}  // namespace avx2
#endif

}  // namespace nsgf::kernels
