#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace mnb {

/// Deterministic splittable PRNG. All randomness in a run flows from one
/// 64-bit seed; every consumer derives a named stream instead of sharing a
/// global generator. Streams are derived from the parent's seed only, so
/// drawing from a parent never perturbs its children.
///
/// Core generator is splitmix64; distributions are implemented here rather
/// than with <random> so that sequences are identical across standard
/// libraries.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  /// Child stream keyed by name. stream("a").stream("b") != stream("b").stream("a").
  SplitRng stream(std::string_view name) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  double next_double();                      // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);      // [lo, hi)
  double normal();                           // standard normal (Box-Muller)
  std::size_t below(std::size_t n);          // uniform in [0, n), n >= 1

  template <typename T>
  void shuffle(std::vector<T>& items) {      // Fisher-Yates
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      std::swap(items[i], items[below(i + 1)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace mnb
