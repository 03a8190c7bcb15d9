#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "scf/losses.hpp"
#include "scf/rng.hpp"

namespace scf {

struct PairCounts {
  std::size_t supcl_terms = 0;   // sum over classes of C(C-1)
  std::size_t stegcl_terms = 0;  // sum over classes of max(C-1, 0)
  std::size_t dedup_terms = 0;   // sum over classes of C(C-1)/2
  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

PairCounts pair_count_audit(std::span<const Label> labels);

struct BenchResult {
  ContrastiveVariant variant = ContrastiveVariant::stegcl;
  std::size_t batch_size = 0;
  std::size_t feature_dim = 0;
  std::size_t repeats = 0;
  std::int64_t median_ns = 0;
  std::int64_t p10_ns = 0;
  std::int64_t p90_ns = 0;
  std::size_t term_count = 0;
};

/// Times forward + gradient of one loss on a fixed random balanced batch
/// (labels alternate cover/stego). Three untimed warmup runs precede
/// `repeats` timed runs on the calling thread. For stegcl the positive
/// selection is redone inside every timed run; selfcl pairs each sample with
/// the next sample of its class.
BenchResult time_loss(ContrastiveVariant variant, std::size_t batch_size, std::size_t feature_dim,
                      std::size_t repeats, Rng& rng, const LossConfig& cfg = {});

void write_bench_header(std::ostream& out);
void write_bench_row(std::ostream& out, const BenchResult& r);

}  // namespace scf
