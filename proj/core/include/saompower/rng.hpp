#pragma once
// Deterministic random number generation with hierarchical seed derivation.
//
// Every unit of work (scenario, replication, group, estimation phase, run)
// owns a generator seeded from its position in the experiment tree, so
// results do not depend on scheduling or thread count.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace saom {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Mixes a base seed with a path of stream identifiers.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = detail::splitmix64(base ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t p : path) s = detail::splitmix64(s ^ detail::splitmix64(p));
  return s;
}

/// Stable 64-bit hash of a string (FNV-1a), for deriving streams from ids.
inline std::uint64_t hash_id(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(std::uniform_int_distribution<std::uint32_t>(
        0, static_cast<std::uint32_t>(n - 1))(engine_));
  }

  /// Exponential waiting time with the given rate.
  double exponential(double rate) {
    return std::exponential_distribution<double>(rate)(engine_);
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }

  /// Samples an index proportional to the (non-negative) weights.
  int categorical(std::span<const double> weights, double total) {
    double u = uniform() * total;
    for (std::size_t a = 0; a + 1 < weights.size(); ++a) {
      u -= weights[a];
      if (u < 0.0) return static_cast<int>(a);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  /// Draws k distinct indices from [0, n) (partial Fisher-Yates); result is
  /// in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      const int j = i + uniform_int(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace saom
