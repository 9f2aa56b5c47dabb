#pragma once

// Inner-loop arithmetic used by the network layers. Every routine has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant. The variant is
// chosen once at startup from CPUID and can be forced with LOGSD_SIMD
// (scalar | avx2 | auto) or set_backend().

#include <cstddef>
#include <span>
#include <string_view>

namespace logsd::kernels {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i (a_i - b_i)^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
  // y[r] += dot(a + r * stride, x, n) for r in [0, rows)
  void (*dot_rows)(const double* a, std::size_t rows, std::size_t stride, const double* x,
                   std::size_t n, double* y);
};

const KernelTable& scalar_table();
// nullptr when the build target has no AVX2 path.
const KernelTable* avx2_table();

bool backend_available(Backend b);
const KernelTable& table(Backend b);
const KernelTable& active();
Backend current_backend();
// Throws ConfigError if the backend is not usable on this CPU.
void set_backend(Backend b);
Backend parse_backend(std::string_view name);
std::string_view backend_name(Backend b);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  return active().sq_dist(a.data(), b.data(), a.size());
}

}  // namespace logsd::kernels
