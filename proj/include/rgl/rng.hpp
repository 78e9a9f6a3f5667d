#pragma once

#include <cstdint>
#include <vector>

namespace rgl {

// Deterministic 64-bit generator (splitmix64 core). std:: distributions are
// implementation-defined, so everything seeded goes through this to keep
// outputs byte-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n > 0
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream, stable under reordering of draws on the parent.
  static Rng child(std::uint64_t seed, std::uint64_t stream) {
    Rng mix(seed ^ (0xd1b54a32d192ed03ull * (stream + 1)));
    Rng out(mix.next_u64());
    return out;
  }

 private:
  std::uint64_t state_;
};

}  // namespace rgl
