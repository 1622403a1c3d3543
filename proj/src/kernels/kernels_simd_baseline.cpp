// Portable-width SIMD variant: native_simd at the build's default target
// (SSE2 on x86-64, NEON on aarch64).

#include "qsolchain/kernels.hpp"

#if defined(__has_include)
#if __has_include(<experimental/simd>)
#define QSOL_SIMD_AVAILABLE 1
#endif
#endif

#if defined(QSOL_SIMD_AVAILABLE)

#define QSOL_SIMD_NS simd_base
#define QSOL_SIMD_NAME "simd"
#include "kernels_simd.inc"
#undef QSOL_SIMD_NS
#undef QSOL_SIMD_NAME

#else

namespace qsol::kernels::simd_base {
const Kernels* get() { return nullptr; }
}  // namespace qsol::kernels::simd_base

#endif
