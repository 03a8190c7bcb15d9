#pragma once

// Brute-force reference implementations used only by the tests. They share
// no code with the library paths they check: plain nested loops, naive
// exp/log, no log-sum-exp shift.

#include <cstddef>
#include <span>
#include <vector>

#include "scf/losses.hpp"
#include "scf/metrics.hpp"
#include "scf/rng.hpp"

namespace scf::oracle {

// Feature rows as the losses see them (optionally unit-normalized).
std::vector<std::vector<double>> view(const FeatureBatch& batch, bool normalize);

double self_cl(const FeatureBatch& batch, std::span<const std::size_t> positive_map, const LossConfig& cfg);

// Optionally reports how many log terms were evaluated.
double sup_cl(const FeatureBatch& batch, const LossConfig& cfg, std::size_t* terms = nullptr);

double steg_cl(const FeatureBatch& batch, const PairSelection& pairs, const LossConfig& cfg);

// Evaluates 1/2 (P_FA + P_MD) at every candidate threshold by recounting.
PeResult p_e_sweep(std::span<const double> scores, std::span<const Label> labels);

// Connected components by repeated label propagation over an edge list.
std::vector<std::size_t> components(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

// Random features with every row norm at most max_norm.
FeatureBatch random_batch(Rng& rng, std::size_t batch, std::size_t dim, double max_norm = 2.0);

// Random labels in {0, 1} with at least two of each (one each below four samples).
std::vector<Label> random_binary_labels(Rng& rng, std::size_t batch);

}  // namespace scf::oracle
