#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gpmvc {

/// Seeded random source with a fully specified algorithm.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard library distributions are implementation-defined,
/// so every derived draw (bounded integers, uniforms, normals, shuffles) is
/// implemented here. Masks and initializations are therefore bit-portable
/// across compilers and standard libraries.
///
///  - uniform_index(n): rejection sampling on the top of the 64-bit range
///    (draw r; reject if r >= 2^64 - (2^64 mod n); return r mod n).
///  - uniform01(): (r >> 11) * 2^-53.
///  - normal(): Box-Muller, using u1 = 1 - uniform01() so that log(u1) is finite.
///  - shuffle(): Fisher-Yates from the last element down, j = uniform_index(i + 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::uint64_t uniform_index(std::uint64_t n);
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  /// 0..n-1 in a uniformly random order.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace gpmvc
