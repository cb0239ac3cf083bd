#include "mnb/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mnb {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

SplitRng SplitRng::stream(std::string_view name) const {
  return SplitRng(mix64(seed_ ^ (fnv1a64(name) + 0x9E3779B97F4A7C15ULL)));
}

std::uint64_t SplitRng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return mix64(state_);
}

double SplitRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SplitRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

double SplitRng::normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t SplitRng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("SplitRng::below requires n >= 1");
  return static_cast<std::size_t>(next_u64() % n);
}

}  // namespace mnb
