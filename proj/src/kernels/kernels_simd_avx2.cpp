// AVX2+FMA variant; this TU is compiled with -mavx2 -mfma and only ever
// called after a runtime CPU check.

#include "qsolchain/kernels.hpp"

#if defined(__AVX2__) && defined(__has_include)
#if __has_include(<experimental/simd>)
#define QSOL_SIMD_AVAILABLE 1
#endif
#endif

#if defined(QSOL_SIMD_AVAILABLE)

#define QSOL_SIMD_NS simd_avx2
#define QSOL_SIMD_NAME "avx2"
#include "kernels_simd.inc"
#undef QSOL_SIMD_NS
#undef QSOL_SIMD_NAME

#else

namespace qsol::kernels::simd_avx2 {
const Kernels* get() { return nullptr; }
}  // namespace qsol::kernels::simd_avx2

#endif
