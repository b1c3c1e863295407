#include "nbw/rng.hpp"

namespace nbw {

std::uint64_t stream_key(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto w : words) h = mix64(h ^ mix64(w));
  return h;
}

std::uint64_t stream_key(std::uint64_t prefix, std::span<const std::int64_t> words) {
  std::uint64_t h = mix64(prefix ^ 0x3c6ef372fe94f82bULL);
  h = mix64(h ^ mix64(words.size()));
  for (auto w : words) h = mix64(h ^ mix64(static_cast<std::uint64_t>(w)));
  return h;
}

std::uint64_t CounterRng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = max() - max() % n;
  for (;;) {
    const auto r = (*this)();
    if (r < limit) return r % n;
  }
}

}  // namespace nbw
