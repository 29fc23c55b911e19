#pragma once

#include <cmath>
#include <cstdint>

namespace gar {

// splitmix64 finalizer; the basis of all randomness in the artifact.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double u01(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;  // (0,1)
}

// Counter-based random stream: draw i depends only on (seed, i), so parallel
// or out-of-order sampling reproduces the same sequence.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    double uniform(std::uint64_t counter) const {
        return u01(mix64(seed_ ^ mix64(counter)));
    }
    double uniform(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * uniform(counter);
    }
    // Box-Muller over two counter draws.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    CounterRng stream(std::uint64_t substream) const {
        return CounterRng(mix64(seed_ ^ (0xa0761d6478bd642fULL + substream)));
    }

  private:
    std::uint64_t seed_;
};

// Stateful convenience wrapper over the counter stream.
class SequentialRng {
  public:
    explicit SequentialRng(std::uint64_t seed) : rng_(seed) {}
    double uniform() { return rng_.uniform(next_++); }
    double uniform(double lo, double hi) { return rng_.uniform(next_++, lo, hi); }
    double normal() { return rng_.normal(next_++); }
    std::uint64_t integer(std::uint64_t n) {  // uniform in [0, n)
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

  private:
    CounterRng rng_;
    std::uint64_t next_ = 0;
};

}  // namespace gar
