#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cilab {

// All stochastic code draws from an explicitly owned 64-bit Mersenne Twister.
// Independent streams are obtained by hashing (master seed, stream ids...)
// through SplitMix64, so a worker's stream depends only on its ids and never
// on scheduling order.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Splitting rule: h = splitmix(master); for each id, h = splitmix(h ^ splitmix(id + 1)).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(master);
  for (auto id : ids) h = splitmix64(h ^ splitmix64(id + 1));
  return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> ids = {}) {
  return Rng(derive_seed(master, ids));
}

// Uniform double in the open interval (0, 1), built from the top 53 bits so the
// stream is reproducible across standard library implementations.
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by multiply-shift.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  __extension__ using u128 = unsigned __int128;
  return static_cast<std::uint64_t>((static_cast<u128>(rng()) * bound) >> 64);
}

// Buffers 64 fair coin flips per engine call.
class CoinStream {
 public:
  explicit CoinStream(Rng& rng) : rng_(rng) {}

  bool next() {
    if (left_ == 0) {
      bits_ = rng_();
      left_ = 64;
    }
    const bool b = bits_ & 1U;
    bits_ >>= 1;
    --left_;
    return b;
  }

 private:
  Rng& rng_;
  std::uint64_t bits_ = 0;
  int left_ = 0;
};

}  // namespace cilab
