#pragma once

#include <cassert>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace lematch {

// mt19937_64 with fixed output derivations, so that streams replay bit-identically
// across standard libraries (the std:: distributions are not portable).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // uniform in [0, 1) with 53-bit resolution
  double canonical() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * canonical(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = bits();
    while (x >= limit) x = bits();
    return x % n;
  }

  // uniform integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    assert(hi >= lo);
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[below(k)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lematch
