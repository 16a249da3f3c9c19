#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace tomoplan {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hash a master seed with stream coordinates into an independent key.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

/// Counter-based generator: output k is splitmix64(key + k * golden).
/// Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tomoplan
