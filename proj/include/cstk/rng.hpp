#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace cstk {

// splitmix64 finalizer. All toolkit randomness goes through this so results
// are identical across platforms, standard libraries, and thread counts.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// One global seed, split per stage by label. Call order never matters.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return mix64(seed ^ fnv1a64(label));
}

// Counter-based stream: the value at (seed, stream, index) is stateless, so
// parallel consumers draw identical numbers no matter how work is divided.
inline std::uint64_t hash_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(seed ^ stream * 0xd6e8feb86659fd93ULL) ^ index);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, n). Modulo bias is < 2^-53 for any n we draw here.
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

// Fisher-Yates with our own Rng; std::shuffle leaves the draw sequence
// implementation-defined.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.below(i))]);
  }
}

}  // namespace cstk
