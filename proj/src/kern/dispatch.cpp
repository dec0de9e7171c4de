#include <cstdlib>
#include <cstring>

#include "evlog/kern/kernels.hpp"

namespace evlog::kern {

const Kernels* avx2_kernels_impl();  // defined in kernels_avx2.cpp

const Kernels* avx2_kernels() {
#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return avx2_kernels_impl();
  }
#endif
  return nullptr;
}

namespace {

const Kernels& select() {
  const char* forced = std::getenv("EVLOG_KERNEL");
  if (forced != nullptr) {
    if (std::strcmp(forced, "scalar") == 0) return scalar_kernels();
    if (std::strcmp(forced, "avx2") == 0) {
      const Kernels* t = avx2_kernels();
      if (t != nullptr) return *t;
      // Requested variant unavailable on this CPU: fall through to default
      // selection rather than crash in a vector instruction.
    }
  }
  const Kernels* t = avx2_kernels();
  return t != nullptr ? *t : scalar_kernels();
}

}  // namespace

const Kernels& active() {
  static const Kernels& chosen = select();
  return chosen;
}

}  // namespace evlog::kern
