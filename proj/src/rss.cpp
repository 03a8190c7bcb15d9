#include "scf/rss.hpp"

#include <map>

#include "scf/disjoint_set.hpp"
#include "scf/error.hpp"

namespace scf {

PairSelection select_positives(std::span<const Label> labels, Rng& rng) {
  if (labels.empty()) throw InvalidArgument("select_positives: empty batch");

  std::map<Label, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < labels.size(); ++i) classes[labels[i]].push_back(i);

  PairSelection out;
  std::vector<std::size_t> candidates;
  for (const auto& [label, members] : classes) {
    const std::size_t c = members.size();
    if (c < 2) {
      out.skipped_classes.push_back(label);
      continue;
    }
    // Local indices 0..c-1 stand for members[0..c-1].
    DisjointSet sets(c);
    for (std::size_t a = 0; a + 1 < c; ++a) {
      const std::size_t root = sets.find(a);
      candidates.clear();
      for (std::size_t k = 0; k < c; ++k) {
        if (sets.find(k) != root) candidates.push_back(k);
      }
      const std::size_t p = choice(rng, candidates);
      sets.unite(a, p);
      out.pairs.push_back({members[a], members[p]});
    }
  }
  return out;
}

}  // namespace scf
