#include <cstdlib>
#include <string_view>

#include "gsflow/kernels.hpp"

namespace gsflow::kernels {

#ifdef GSFLOW_HAVE_AVX2
const Table& avx2_table();
#endif

const Table* avx2() {
#ifdef GSFLOW_HAVE_AVX2
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const Table& active() {
  static const Table& chosen = [] () -> const Table& {
    const char* env = std::getenv("GSFLOW_SIMD");
    if (env && std::string_view(env) == "scalar") return scalar();
    if (const Table* t = avx2()) return *t;
    return scalar();
  }();
  return chosen;
}

}  // namespace gsflow::kernels
