#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace logsd {

// Error categories map onto CLI exit codes: data 1, config 2, numeric 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label : std::uint8_t { kNormal = 0, kAnomalous = 1 };

inline int label_to_int(Label l) { return l == Label::kAnomalous ? 1 : 0; }
inline Label label_from_int(int v) { return v != 0 ? Label::kAnomalous : Label::kNormal; }

/// FNV-1a, 64 bit. Stable across platforms; used for token hashing and
/// config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a base seed with a tag into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

std::string hex64(std::uint64_t v);

/// Shortest text that round-trips the double exactly.
std::string format_double(double v);

/// Seeded generator with platform-independent draws. std::mt19937_64 output is
/// fixed by the standard; the distribution helpers here avoid the
/// implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  bool coin() { return (engine_() >> 63) != 0; }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = uniform_index(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace logsd
