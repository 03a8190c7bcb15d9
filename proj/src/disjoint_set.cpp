#include "scf/disjoint_set.hpp"

#include <numeric>
#include <string>

#include "scf/error.hpp"

namespace scf {

DisjointSet::DisjointSet(std::size_t n) : parent_(n), rank_(n, 0), components_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

void DisjointSet::check(std::size_t i) const {
  if (i >= parent_.size()) {
    throw InvalidArgument("DisjointSet: index " + std::to_string(i) + " out of range (size " +
                          std::to_string(parent_.size()) + ")");
  }
}

std::size_t DisjointSet::find(std::size_t i) {
  check(i);
  std::size_t root = i;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[i] != root) {
    const std::size_t next = parent_[i];
    parent_[i] = root;
    i = next;
  }
  return root;
}

bool DisjointSet::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  --components_;
  return true;
}

}  // namespace scf
