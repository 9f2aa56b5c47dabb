#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "logsd/common.hpp"

using namespace logsd;

TEST_CASE("fnv1a64 matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("splitmix64 reference sequence from state 0") {
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(s) == 0x06c45d188009454fULL);
}

TEST_CASE("derive_seed separates tags and is stable") {
  CHECK(derive_seed(42, "split") == derive_seed(42, "split"));
  CHECK(derive_seed(42, "split") != derive_seed(42, "init"));
  CHECK(derive_seed(42, "split") != derive_seed(43, "split"));
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 123456789.123456789, 1.0 / 3.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("Rng draws are reproducible and in range") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.uniform_index(13);
    CHECK(x == b.uniform_index(13));
    CHECK(x < 13);
    const double u = a.uniform01();
    CHECK(u == b.uniform01());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("Rng shuffle is a permutation") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng r(3);
  r.shuffle(v.begin(), v.end());
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
  CHECK_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST_CASE("uniform_index is close to uniform") {
  Rng r(11);
  std::vector<int> hist(5, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++hist[r.uniform_index(5)];
  for (int h : hist) CHECK(std::abs(h / double(n) - 0.2) < 0.01);
}

TEST_CASE("label helpers") {
  CHECK(label_to_int(Label::kAnomalous) == 1);
  CHECK(label_to_int(Label::kNormal) == 0);
  CHECK(label_from_int(1) == Label::kAnomalous);
  CHECK(label_from_int(0) == Label::kNormal);
}
