#include "scf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "scf/error.hpp"

namespace scf {

std::uint64_t mix64(std::uint64_t x) noexcept {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix64(seed ^ mix64(stream ^ 0x243f6a8885a308d3ULL))) {}

Rng Rng::derive(std::uint64_t id) const {
  return Rng(seed_, mix64(stream_ * 0x100000001b3ULL + id + 1));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw InvalidArgument("uniform_index: empty range");
  const std::uint64_t bound = n;
  // Reject the low residue band so every value is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

double Rng::gaussian() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t choice(Rng& rng, std::span<const std::size_t> candidates) {
  if (candidates.empty()) throw InvalidArgument("empty selection set");
  if (std::is_sorted(candidates.begin(), candidates.end())) {
    return candidates[rng.uniform_index(candidates.size())];
  }
  std::vector<std::size_t> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[rng.uniform_index(sorted.size())];
}

}  // namespace scf
