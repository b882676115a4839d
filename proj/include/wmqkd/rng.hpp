#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace wmqkd {

// SplitMix64 keyed by (seed, stream). Each signal index gets its own stream so
// results do not depend on how signals are split across workers.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : state_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

template <class Urbg>
double uniform01(Urbg& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

template <class Urbg>
double standard_normal(Urbg& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

template <class Urbg>
bool bernoulli(Urbg& rng, double p) {
  return uniform01(rng) < p;
}

}  // namespace wmqkd
