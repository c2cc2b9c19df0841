#pragma once

#include <cstdint>

namespace rlv {

// Deterministic splitmix64 generator. We avoid <random> engines/distributions
// so that streams (and everything derived from them) are identical across
// platforms and standard libraries; frozen test values depend on this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Multiply-shift; bias is < n / 2^64, irrelevant here.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Uniform in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Independent substream. Different tags give uncorrelated child streams and
  // do not advance this generator, so adding a consumer of one stream never
  // perturbs another.
  Rng fork(std::uint64_t tag) const {
    Rng child(state_ ^ (tag * 0xd2b74407b1ce6e93ull) ^ 0xa5a5a5a55a5a5a5aull);
    child.next_u64();
    return child;
  }

 private:
  std::uint64_t state_;
};

}  // namespace rlv
