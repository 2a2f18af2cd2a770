#pragma once

#include <cstdint>
#include <random>

namespace tiltnet {

// RNG wrapper used everywhere. Raw mt19937_64 output is mapped to
// doubles/ints with fixed arithmetic so streams do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0.
  int uniform_int(int n) {
    return static_cast<int>(
        (static_cast<unsigned __int128>(gen_()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Named seed streams keep the RNG state of unrelated concerns disjoint
// (training drops never share a stream with evaluation drops, etc.).
enum class Stream : std::uint64_t {
  deployment = 1,
  user_drop = 2,
  calibration = 3,
  net_init = 4,
  exploration = 5,
  replay = 6,
  eval_drop = 7,
  coupling = 8,
  sweep = 9,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  std::uint64_t s = splitmix64(master + static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ull);
  return splitmix64(s ^ splitmix64(index + 0x51ed2701ab0e4c8dull));
}

}  // namespace tiltnet
