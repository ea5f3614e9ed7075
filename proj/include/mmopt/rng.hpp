#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random streams. Every draw is a pure function of
// (seed, stream, index), so runs are order-independent and bit-reproducible
// regardless of how work is scheduled.

namespace mmopt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index) {
  std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ull);
  h = splitmix64(h ^ stream);
  return splitmix64(h ^ index);
}

// uniform in [0,1)
inline double uniform01(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t index) {
  return static_cast<double>(mix_key(seed, stream, index) >> 11) * 0x1.0p-53;
}

// standard normal via Box-Muller; one value per index (cos branch only)
inline double normal(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t index) {
  const double u1 = 1.0 - uniform01(seed, stream, 2 * index);      // (0,1]
  const double u2 = uniform01(seed, stream, 2 * index + 1);        // [0,1)
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

// convenience stateful view over one (seed, stream) lane
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  double normal() { return mmopt::normal(seed_, stream_, next_++); }
  double uniform01() { return mmopt::uniform01(seed_, stream_, next_++); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }
  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) %
           n;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t next_ = 0;
};

}  // namespace mmopt
