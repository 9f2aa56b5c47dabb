#include "logsd/kernels.hpp"

namespace logsd::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sq_dist_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

void dot_rows_scalar(const double* a, std::size_t rows, std::size_t stride, const double* x,
                     std::size_t n, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_scalar(a + r * stride, x, n);
}

constexpr KernelTable kScalarTable{"scalar", dot_scalar, axpy_scalar, sq_dist_scalar,
                                   dot_rows_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

}  // namespace logsd::kernels
