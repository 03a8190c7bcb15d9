#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scf/rng.hpp"

namespace scf {

using Label = int;

struct PositivePair {
  std::size_t anchor;
  std::size_t positive;
  friend bool operator==(const PositivePair&, const PositivePair&) = default;
};

// Anchor -> positive pairs chosen by the random selection strategy.
struct PairSelection {
  std::vector<PositivePair> pairs;
  std::vector<Label> skipped_classes;  // labels with fewer than two samples
  friend bool operator==(const PairSelection&, const PairSelection&) = default;
};

/// Random selection strategy, applied independently to every label class.
///
/// Members of a class start in singleton sets. Anchors are visited in
/// ascending sample order, skipping the class's last member; each anchor
/// picks a positive uniformly among the class members outside its own set,
/// and the two sets are merged. A class of C members therefore yields C - 1
/// pairs that form a spanning tree over the class. Classes are processed in
/// ascending label order.
PairSelection select_positives(std::span<const Label> labels, Rng& rng);

}  // namespace scf
