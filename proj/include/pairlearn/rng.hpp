#pragma once
#include <cstdint>
#include <cmath>

namespace pairlearn {

// Counter-based RNG: every draw is a pure function of (seed, stream, counter),
// so results never depend on evaluation order or thread count.  The mixer is
// the splitmix64 finalizer applied to a weyl-combined key.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(uint64_t seed, uint64_t stream = 0)
      : key_(mix64(mix64(seed) ^ (0x6a09e667f3bcc909ULL + stream * 0x3c6ef372fe94f82bULL))) {}

  uint64_t bits(uint64_t counter) const { return mix64(key_ ^ (counter * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL)); }

  // uniform in [0,1): 53 random bits scaled
  double uniform(uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }
  double uniform(uint64_t counter, double a, double b) const {
    return a + (b - a) * uniform(counter);
  }
  // standard normal via Box-Muller; two sub-draws derived from one counter
  double normal(uint64_t counter) const {
    double u1 = static_cast<double>(bits(counter * 2) >> 11) * 0x1.0p-53;
    double u2 = static_cast<double>(bits(counter * 2 + 1) >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log1p(-u1));  // u1 in [0,1) => 1-u1 in (0,1]
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }
  int rademacher(uint64_t counter) const { return (bits(counter) & 1) ? 1 : -1; }

  // integer in [0, n)
  uint64_t below(uint64_t counter, uint64_t n) const {
    // 64-bit multiply-shift; bias is < 2^-53 for the small n used here
    return static_cast<uint64_t>((static_cast<unsigned __int128>(bits(counter)) * n) >> 64);
  }

 private:
  uint64_t key_;
};

// convenience: sequential draws when a stream of values is the natural shape
class SeqRng {
 public:
  explicit SeqRng(uint64_t seed, uint64_t stream = 0) : rng_(seed, stream) {}
  double uniform() { return rng_.uniform(ctr_++); }
  double uniform(double a, double b) { return rng_.uniform(ctr_++, a, b); }
  double normal() { return rng_.normal(ctr_++); }
  int rademacher() { return rng_.rademacher(ctr_++); }
  uint64_t below(uint64_t n) { return rng_.below(ctr_++, n); }

 private:
  CounterRng rng_;
  uint64_t ctr_ = 0;
};

}  // namespace pairlearn
