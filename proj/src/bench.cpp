#include "scf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <vector>

#include "scf/error.hpp"

namespace scf {

PairCounts pair_count_audit(std::span<const Label> labels) {
  std::map<Label, std::size_t> sizes;
  for (Label l : labels) ++sizes[l];
  PairCounts out;
  for (const auto& [label, c] : sizes) {
    out.supcl_terms += c * (c - 1);
    out.dedup_terms += c * (c - 1) / 2;
    out.stegcl_terms += c - 1;
  }
  return out;
}

namespace {

template <class T>
inline void keep(const T& value) {
  asm volatile("" : : "g"(&value) : "memory");
}

std::int64_t quantile(const std::vector<std::int64_t>& sorted, double q) {
  const auto pos = static_cast<std::size_t>(std::lround(q * static_cast<double>(sorted.size() - 1)));
  return sorted[pos];
}

}  // namespace

BenchResult time_loss(ContrastiveVariant variant, std::size_t batch_size, std::size_t feature_dim,
                      std::size_t repeats, Rng& rng, const LossConfig& cfg) {
  if (repeats < 5) throw InvalidArgument("time_loss: repeats must be at least 5");
  if (variant == ContrastiveVariant::none) throw InvalidArgument("time_loss: invalid variant 'none'");
  if (batch_size < 4 || batch_size % 2 != 0) throw InvalidArgument("time_loss: batch must be even and at least 4");
  if (feature_dim < 1) throw InvalidArgument("time_loss: feature_dim must be positive");

  FeatureBatch batch{Matrix(batch_size, feature_dim), std::vector<Label>(batch_size)};
  for (double& v : batch.z.values()) v = rng.gaussian();
  for (std::size_t i = 0; i < batch_size; ++i) batch.labels[i] = static_cast<Label>(i % 2);
  std::vector<std::size_t> positive_map(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) positive_map[i] = (i + 2) % batch_size;

  auto run = [&]() -> LossOutput {
    switch (variant) {
      case ContrastiveVariant::selfcl: return self_cl(batch, positive_map, cfg);
      case ContrastiveVariant::supcl: return sup_cl(batch, cfg);
      case ContrastiveVariant::stegcl: return steg_cl(batch, select_positives(batch.labels, rng), cfg);
      case ContrastiveVariant::none: break;
    }
    throw InvalidArgument("time_loss: invalid variant");
  };

  LossOutput last;
  for (int w = 0; w < 3; ++w) {
    last = run();
    keep(last);
  }
  std::vector<std::int64_t> samples;
  samples.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    last = run();
    keep(last);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  }
  std::sort(samples.begin(), samples.end());

  BenchResult res;
  res.variant = variant;
  res.batch_size = batch_size;
  res.feature_dim = feature_dim;
  res.repeats = repeats;
  res.median_ns = quantile(samples, 0.5);
  res.p10_ns = quantile(samples, 0.1);
  res.p90_ns = quantile(samples, 0.9);
  res.term_count = last.term_count;
  return res;
}

void write_bench_header(std::ostream& out) {
  out << "variant,batch,dim,repeats,median_ns,p10_ns,p90_ns,terms\n";
}

void write_bench_row(std::ostream& out, const BenchResult& r) {
  out << to_string(r.variant) << ',' << r.batch_size << ',' << r.feature_dim << ',' << r.repeats << ','
      << r.median_ns << ',' << r.p10_ns << ',' << r.p90_ns << ',' << r.term_count << '\n';
}

}  // namespace scf
