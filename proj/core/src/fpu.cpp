#include "celo/fpu.hpp"

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
#include <xmmintrin.h>
#define CELO_X86_SSE 1
#endif

namespace celo {

void flush_denormals_to_zero() {
#ifdef CELO_X86_SSE
  _mm_setcsr(_mm_getcsr() | 0x8040);  // FTZ (bit 15) + DAZ (bit 6)
#endif
}

}  // namespace celo
