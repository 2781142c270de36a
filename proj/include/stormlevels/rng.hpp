#pragma once

#include <cmath>
#include <cstdint>

namespace stormlevels {

/* Counter-based random stream built on the splitmix64 mixer. A stream is
 * (key, counter); derive() hashes a tag into a new key, so independent
 * streams can be addressed by (seed, iteration, block, ...) paths without
 * sharing state. Draw order inside one stream is sequential; streams as a
 * whole can be consumed in any order, which is what makes sampler output
 * independent of the worker count. */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  Rng derive(std::uint64_t tag) const {
    return Rng(FromKey{}, mix(key_ + 0x9e3779b97f4a7c15ULL * (tag + 1)));
  }
  Rng derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }
  Rng derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return derive(a).derive(b).derive(c);
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * (++counter_)); }

  // uniform on the open interval (0,1)
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential() { return -std::log(uniform()); }

  // standard normal, Marsaglia polar method with a cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    while (true) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
      }
    }
  }

  // value in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

 private:
  struct FromKey {};
  Rng(FromKey, std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stormlevels
