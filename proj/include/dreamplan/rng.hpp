#ifndef DREAMPLAN_RNG_HPP_
#define DREAMPLAN_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace dreamplan {

// splitmix64 finalizer. Cheap, full-period, and portable: identical bits on
// every platform, which the reproducibility contract relies on.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministically derives a child seed from a root seed and a stream tag.
// Used to give every environment lane, planner candidate, and iteration its
// own independent stream so that results do not depend on evaluation order
// or thread count.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  std::uint64_t s = root ^ (0x9e3779b97f4a7c15ULL + (tag << 1));
  std::uint64_t a = splitmix64_next(s);
  std::uint64_t b = splitmix64_next(s);
  return a ^ (b >> 1);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag_a,
                                 std::uint64_t tag_b) {
  return derive_seed(derive_seed(root, tag_a), tag_b);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag_a,
                                 std::uint64_t tag_b, std::uint64_t tag_c) {
  return derive_seed(derive_seed(root, tag_a, tag_b), tag_c);
}

// Minimal counter-based generator over splitmix64. Stateless apart from the
// 64-bit counter, so draws are reproducible bit-for-bit regardless of how
// calls interleave with other streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in (0, 1]; never returns 0, safe under log().
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Consumes two uniforms and discards the
  // second variate: slightly wasteful but stateless, so a stream's n-th
  // gaussian never depends on earlier call patterns.
  double gaussian() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace dreamplan

#endif  // DREAMPLAN_RNG_HPP_
