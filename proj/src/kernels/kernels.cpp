#include "qsolchain/kernels.hpp"

#include <cstdlib>
#include <string>

#include "qsolchain/errors.hpp"

namespace qsol::kernels {

namespace scalar_impl {
extern const Kernels table;
}
namespace simd_base {
const Kernels* get();
}
namespace simd_avx2 {
const Kernels* get();
}

std::size_t ll_scratch_len(std::size_t n) { return 15 * n + 6; }

const Kernels& scalar() { return scalar_impl::table; }

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* select() {
  const Kernels* best = &scalar_impl::table;
  if (const Kernels* k = simd_base::get()) best = k;
  if (cpu_has_avx2())
    if (const Kernels* k = simd_avx2::get()) best = k;

  if (const char* env = std::getenv("QSOLCHAIN_KERNEL")) {
    const std::string want(env);
    if (!want.empty()) {
      for (const Kernels* k : available())
        if (want == k->name) return k;
      throw DomainError("QSOLCHAIN_KERNEL requests unavailable variant '" +
                        want + "'");
    }
  }
  return best;
}

}  // namespace

std::vector<const Kernels*> available() {
  std::vector<const Kernels*> out{&scalar_impl::table};
  if (const Kernels* k = simd_base::get()) out.push_back(k);
  if (cpu_has_avx2())
    if (const Kernels* k = simd_avx2::get()) out.push_back(k);
  return out;
}

const Kernels& active() {
  static const Kernels* chosen = select();
  return *chosen;
}

}  // namespace qsol::kernels
