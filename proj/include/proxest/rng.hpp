#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace proxest {

// Counter-based seed derivation. Every stochastic component receives a
// SeedStream and derives child streams by key, so results are independent of
// execution schedule: stream identity depends only on (root seed, key path).
struct SeedStream {
  std::uint64_t state = 0;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static SeedStream root(std::uint64_t seed) { return SeedStream{mix(seed)}; }

  SeedStream derive(std::uint64_t key) const {
    return SeedStream{mix(state ^ mix(key))};
  }

  SeedStream derive(std::string_view tag) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return derive(h);
  }
};

// Deterministic sampler. The standard <random> distributions are
// implementation-defined, so all draws are produced here from raw engine
// output; identical seeds give identical draws on any conforming platform.
class Rng {
public:
  explicit Rng(SeedStream s) : eng_(s.state) {}
  explicit Rng(std::uint64_t seed) : eng_(SeedStream::root(seed).state) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1) with 53-bit resolution
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // unbiased integer in [0, n)
  std::size_t uniform_below(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return static_cast<std::size_t>(v % bound);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller without caching; one draw consumes two engine outputs.
  double normal() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // index sampled from an (unnormalized-tolerant) probability vector
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double total = probs.sum();
    double u = uniform01() * total;
    for (int i = 0; i + 1 < probs.size(); ++i) {
      u -= probs[i];
      if (u < 0.0) return i;
    }
    return static_cast<int>(probs.size()) - 1;
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace proxest
