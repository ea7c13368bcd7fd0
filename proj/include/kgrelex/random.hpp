#ifndef KGRELEX_RANDOM_HPP
#define KGRELEX_RANDOM_HPP

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace kgrelex {

// mt19937_64 has a standard-mandated output sequence; the distributions in
// <random> do not, so the few we need are written out here to keep
// checkpoints byte-identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0, n)
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace kgrelex

#endif  // KGRELEX_RANDOM_HPP
