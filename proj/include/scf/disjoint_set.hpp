#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace scf {

// Union-find forest with union by rank and path compression.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n);

  std::size_t size() const noexcept { return parent_.size(); }
  std::size_t components() const noexcept { return components_; }

  // Root of i's tree. Compresses the path it walks.
  std::size_t find(std::size_t i);

  // Merges the sets holding a and b. Returns false if they were already joined.
  bool unite(std::size_t a, std::size_t b);

  bool same(std::size_t a, std::size_t b) { return find(a) == find(b); }

 private:
  void check(std::size_t i) const;

  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::size_t components_;
};

}  // namespace scf
