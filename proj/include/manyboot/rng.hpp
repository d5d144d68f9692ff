#pragma once

#include <cmath>
#include <cstdint>

namespace manyboot {

// Counter-based splittable random streams.
//
// A StreamKey identifies a stream by a 64-bit state derived from a master
// seed and a path of (purpose, index) pairs.  Substreams are derived by
// absorbing the pair into the key with a strong 64-bit mixer, so any worker
// can reconstruct its stream from the master seed without skip-ahead, and
// the overall schedule of parallel work cannot change the draws.

enum class Purpose : std::uint64_t {
  Design = 1,       // covariate matrix draws
  Regressor = 2,    // regressor-of-interest draws
  Noise = 3,        // error-term draws
  Weights = 4,      // bootstrap weight draws
  Replication = 5,  // Monte Carlo replication substreams
  Cell = 6,         // simulation cell substreams
  Attempt = 7,      // redraw attempts within a replication
};

namespace detail {

// Finalizer from the splitmix64 generator (public-domain constants).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

struct StreamKey {
  std::uint64_t state = 0;
};

inline StreamKey master_key(std::uint64_t seed) {
  return StreamKey{detail::mix64(seed ^ 0x6d616e79626f6f74ULL)};
}

// Pure: the same (key, purpose, index) always yields the same child key, and
// distinct (purpose, index) pairs yield distinct children.
inline StreamKey derive(StreamKey key, Purpose purpose, std::uint64_t index) {
  std::uint64_t tag =
      detail::mix64(static_cast<std::uint64_t>(purpose) * detail::kGolden + index);
  return StreamKey{detail::mix64(key.state ^ tag)};
}

// Value-type stream: output i is mix64(key + i*golden), a counter-based
// generator with no shared state.
class Stream {
 public:
  explicit Stream(StreamKey key) : key_(key.state) {}

  std::uint64_t next_u64() {
    counter_ += detail::kGolden;
    return detail::mix64(key_ + counter_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u in (0, 1] so that log(u) is finite.
    double u = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    double theta = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // +1 or -1 with equal probability.
  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  // Two-point law with mean 0, variance 1 and third moment 1:
  // -(sqrt(5)-1)/2 with probability (sqrt(5)+1)/(2*sqrt(5)), else (sqrt(5)+1)/2.
  double mammen() {
    static const double lo = -(std::sqrt(5.0) - 1.0) / 2.0;
    static const double hi = (std::sqrt(5.0) + 1.0) / 2.0;
    static const double p_lo = (std::sqrt(5.0) + 1.0) / (2.0 * std::sqrt(5.0));
    return uniform01() < p_lo ? lo : hi;
  }

  // 1 with probability pi, else 0.
  double bernoulli(double pi) { return uniform01() < pi ? 1.0 : 0.0; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace manyboot
