#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace scf {

/// Seeded deterministic generator. A (seed, stream) pair fully determines the
/// output sequence; derived substreams are independent generators keyed off
/// the parent's identity, never off its current state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Generator for substream `id` of this one (depends only on seed/stream).
  Rng derive(std::uint64_t id) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Unbiased integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller.
  double gaussian();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Uniform pick from a set of indices. The set is sorted before the draw so
/// the result does not depend on the caller's iteration order.
std::size_t choice(Rng& rng, std::span<const std::size_t> candidates);

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace scf
