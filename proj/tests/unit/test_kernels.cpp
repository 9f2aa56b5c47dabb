#include <doctest.h>

#include <cmath>
#include <vector>

#include "logsd/common.hpp"
#include "logsd/kernels.hpp"

using namespace logsd;
namespace k = logsd::kernels;

namespace {

std::vector<double> random_vec(Rng& r, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * r.uniform01() - 1.0;
  return v;
}

// Independent oracle in long double, fixed left-to-right order.
long double ref_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

void check_close(double got, long double want, std::size_t n) {
  // Summation-order error bound for n terms of magnitude <= 1.
  const double tol = 4.0 * static_cast<double>(n + 1) * 1.2e-16;
  CHECK(std::abs(got - static_cast<double>(want)) <= tol);
}

void exercise(const k::KernelTable& t) {
  Rng r(99);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto a = random_vec(r, n), b = random_vec(r, n);
    check_close(t.dot(a.data(), b.data(), n), ref_dot(a, b), n);

    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    check_close(t.sq_dist(a.data(), b.data(), n), ref_dot(diff, diff), n);

    auto y = b;
    t.axpy(0.75, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - (b[i] + 0.75 * a[i])) <= 1e-15);

    const std::size_t rows = 3, stride = n + 2;
    const auto m = random_vec(r, rows * stride);
    std::vector<double> out(rows, 0.5);
    t.dot_rows(m.data(), rows, stride, a.data(), n, out.data());
    for (std::size_t row = 0; row < rows; ++row) {
      std::vector<double> mr(m.begin() + row * stride, m.begin() + row * stride + n);
      check_close(out[row], 0.5L + ref_dot(mr, a), n);
    }
  }
}

}  // namespace

TEST_CASE("scalar kernels match the long-double oracle") { exercise(k::scalar_table()); }

TEST_CASE("avx2 kernels match the long-double oracle") {
  if (!k::backend_available(k::Backend::kAvx2)) {
    MESSAGE("AVX2 not available on this CPU; skipped");
    return;
  }
  exercise(*k::avx2_table());
}

TEST_CASE("scalar and avx2 agree to rounding on every length") {
  if (!k::backend_available(k::Backend::kAvx2)) return;
  const auto& s = k::scalar_table();
  const auto& v = *k::avx2_table();
  Rng r(5);
  for (std::size_t n = 0; n <= 130; ++n) {
    const auto a = random_vec(r, n), b = random_vec(r, n);
    const double tol = 8.0 * static_cast<double>(n + 1) * 1.2e-16;
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) <= tol);
    CHECK(std::abs(s.sq_dist(a.data(), b.data(), n) - v.sq_dist(a.data(), b.data(), n)) <= tol);
    auto ys = b, yv = b;
    s.axpy(-1.25, a.data(), ys.data(), n);
    v.axpy(-1.25, a.data(), yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ys[i] - yv[i]) <= 1e-15);
  }
}

TEST_CASE("backend selection") {
  const auto before = k::current_backend();
  k::set_backend(k::Backend::kScalar);
  CHECK(k::current_backend() == k::Backend::kScalar);
  CHECK(std::string(k::active().name) == "scalar");
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(k::dot(a, b) == 32.0);
  CHECK(k::sq_dist(a, b) == 27.0);
  if (k::backend_available(k::Backend::kAvx2)) {
    k::set_backend(k::Backend::kAvx2);
    CHECK(k::current_backend() == k::Backend::kAvx2);
    CHECK(k::dot(a, b) == 32.0);
  }
  CHECK(k::parse_backend("scalar") == k::Backend::kScalar);
  CHECK_THROWS_AS(k::parse_backend("neon"), ConfigError);
  k::set_backend(before);
}
