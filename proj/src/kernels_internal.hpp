#pragma once

#include "compaudit/kernels.hpp"

namespace compaudit::kernels {

const Ops& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
#define COMPAUDIT_X86 1
const Ops& avx2_ops();
const Ops& avx512_ops();
#else
#define COMPAUDIT_X86 0
#endif

#if defined(__aarch64__)
#define COMPAUDIT_AARCH64 1
const Ops& neon_ops();
#else
#define COMPAUDIT_AARCH64 0
#endif

}  // namespace compaudit::kernels
