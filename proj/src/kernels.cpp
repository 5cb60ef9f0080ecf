#include "retsim/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace retsim::kernels {

#if defined(RETSIM_HAVE_AVX2)
const Ops* avx2_ops_impl();
#endif

const Ops* avx2_ops_or_null() {
#if defined(RETSIM_HAVE_AVX2)
  return avx2_ops_impl();
#else
  return nullptr;
#endif
}

bool avx2_available() {
#if defined(RETSIM_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

namespace {

std::atomic<const Ops*> g_active{nullptr};

const Ops* choose_initial() {
  if (const char* env = std::getenv("RETSIM_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(env, "avx2") == 0 && avx2_available())
      return avx2_ops_or_null();
    // Unknown or unavailable request falls through to auto-detection.
  }
  if (avx2_available()) return avx2_ops_or_null();
  return &scalar_ops();
}

}  // namespace

const Ops& active() {
  const Ops* ops = g_active.load(std::memory_order_acquire);
  if (!ops) {
    ops = choose_initial();
    g_active.store(ops, std::memory_order_release);
  }
  return *ops;
}

bool select(const char* name) {
  if (std::strcmp(name, "scalar") == 0) {
    g_active.store(&scalar_ops(), std::memory_order_release);
    return true;
  }
  if (std::strcmp(name, "avx2") == 0 && avx2_available()) {
    g_active.store(avx2_ops_or_null(), std::memory_order_release);
    return true;
  }
  return false;
}

}  // namespace retsim::kernels
