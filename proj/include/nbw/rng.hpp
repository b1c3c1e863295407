#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace nbw {

/// SplitMix64 finalizer; bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a sequence of words into one stream key. Order matters.
std::uint64_t stream_key(std::initializer_list<std::uint64_t> words);
std::uint64_t stream_key(std::uint64_t prefix, std::span<const std::int64_t> words);

/// Maps 64 random bits to a double in (0, 1).
constexpr double to_unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-based generator: the n-th draw is a pure function of (key, n),
/// so any stream can be reproduced or skipped ahead without replay.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }
  double uniform() { return to_unit_open((*this)()); }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream domains keep unrelated consumers of one master seed apart.
enum class StreamDomain : std::uint64_t {
  disorder = 1,
  layout = 2,
  delone = 3,
  levy = 4,
  bootstrap = 5,
  fuzz = 6,
};

}  // namespace nbw
