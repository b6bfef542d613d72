#include "afba/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace afba::kernels {
namespace {

const Backend* pick() {
  // AFBA_FORCE_SCALAR=1 pins the reference kernels (used by the
  // equivalence tests and handy when bisecting numerical differences).
  if (const char* env = std::getenv("AFBA_FORCE_SCALAR");
      env && std::strcmp(env, "0") != 0) {
    return &kScalarBackend;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return &kAvx2Backend;
  }
#endif
  return &kScalarBackend;
}

}  // namespace

const Backend& active() {
  static const Backend* chosen = pick();
  return *chosen;
}

}  // namespace afba::kernels
