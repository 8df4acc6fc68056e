#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace compaudit::kernels {

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::avx512: return "avx512";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
#if COMPAUDIT_X86
    case Backend::avx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Backend::avx512:
      return __builtin_cpu_supports("avx512f");
#endif
#if COMPAUDIT_AARCH64
    case Backend::neon:
      return true;
#endif
    default:
      return false;
  }
}

const Ops& ops_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return scalar_ops();
#if COMPAUDIT_X86
    case Backend::avx2:
      if (backend_available(Backend::avx2)) return avx2_ops();
      break;
    case Backend::avx512:
      if (backend_available(Backend::avx512)) return avx512_ops();
      break;
#endif
#if COMPAUDIT_AARCH64
    case Backend::neon:
      return neon_ops();
#endif
    default:
      break;
  }
  throw std::runtime_error(std::string("kernel backend not available: ") + backend_name(b));
}

namespace {

Backend select_backend() {
  const char* env = std::getenv("COMPAUDIT_SIMD");
  if (env != nullptr && env[0] != '\0') {
    const std::string want(env);
    if (want != "auto") {
      for (Backend b : {Backend::scalar, Backend::avx2, Backend::avx512, Backend::neon}) {
        if (want == backend_name(b)) {
          if (!backend_available(b)) {
            throw std::runtime_error("COMPAUDIT_SIMD requests unavailable backend: " + want);
          }
          return b;
        }
      }
      throw std::runtime_error("COMPAUDIT_SIMD: unknown backend name: " + want);
    }
  }
  if (backend_available(Backend::avx512)) return Backend::avx512;
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

}  // namespace

Backend active_backend() {
  static const Backend b = select_backend();
  return b;
}

const Ops& ops() {
  static const Ops& table = ops_for(active_backend());
  return table;
}

}  // namespace compaudit::kernels
