#include <atomic>
#include <cstdlib>
#include <string>

#include "logsd/common.hpp"
#include "logsd/kernels.hpp"

namespace logsd::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() {
  const bool avx2 = avx2_table() != nullptr && cpu_has_avx2();
  if (const char* env = std::getenv("LOGSD_SIMD")) {
    const std::string_view v(env);
    if (v == "scalar") return Backend::kScalar;
    if (v == "avx2" && avx2) return Backend::kAvx2;
  }
  return avx2 ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{&table(detect())};
  return current;
}

}  // namespace

bool backend_available(Backend b) {
  if (b == Backend::kScalar) return true;
  return avx2_table() != nullptr && cpu_has_avx2();
}

const KernelTable& table(Backend b) {
  if (b == Backend::kAvx2 && backend_available(b)) return *avx2_table();
  return scalar_table();
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

Backend current_backend() {
  return &active() == &scalar_table() ? Backend::kScalar : Backend::kAvx2;
}

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw ConfigError("SIMD backend '" + std::string(backend_name(b)) +
                      "' is not available on this CPU");
  }
  slot().store(&table(b), std::memory_order_relaxed);
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  if (name == "auto") return detect();
  throw ConfigError("unknown SIMD backend '" + std::string(name) + "'");
}

std::string_view backend_name(Backend b) { return b == Backend::kAvx2 ? "avx2" : "scalar"; }

}  // namespace logsd::kernels
