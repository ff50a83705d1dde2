#pragma once

#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

namespace wsiroi::detail {

// Disjoint-set forest with union by size and path compression.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t v) {
    std::size_t root = v;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[v] != root) v = std::exchange(parent_[v], root);
    return root;
  }

  // Returns the surviving root.
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

  std::size_t size(std::size_t v) { return size_[find(v)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace wsiroi::detail
