#pragma once

#include <cstdint>
#include <vector>

#include "dbal/metric.hpp"
#include "dbal/types.hpp"

namespace dbal {

// Forest of randomized median-split KD-trees for approximate nearest
// neighbour. Each node splits on a feature drawn uniformly from a seeded
// stream, at the lower median of that feature among the node's points; rows
// below the median go left, the rest right. A node whose split would leave
// either side empty becomes a leaf, which also terminates duplicate-heavy
// regions. Queries descend to one leaf per tree and brute-force it, so the
// returned distance is an upper bound on the exact nearest distance.
//
// The forest keeps a pointer to the indexed points; they must outlive it.
class KdtForest {
 public:
  struct Node {
    std::int32_t split_feature = -1;  // -1 marks a leaf
    double split_value = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t begin = 0;  // leaf range into Tree::items
    std::uint32_t count = 0;
  };

  struct Tree {
    std::vector<Node> nodes;  // node 0 is the root
    std::vector<std::uint32_t> items;
  };

  const std::vector<Tree>& trees() const { return trees_; }
  const Matrix& points() const { return *points_; }
  std::size_t leaf_cap() const { return leaf_cap_; }

  friend KdtForest build_forest(const Matrix& points, std::size_t tree_count,
                                std::size_t leaf_cap, std::uint64_t seed);

 private:
  const Matrix* points_ = nullptr;
  std::vector<Tree> trees_;
  std::size_t leaf_cap_ = 1;
};

std::size_t default_leaf_cap(std::size_t point_count);

// Deterministic for a given (points, tree_count, leaf_cap, seed); trees are
// built concurrently but each from its own sub-stream.
KdtForest build_forest(const Matrix& points, std::size_t tree_count, std::size_t leaf_cap,
                       std::uint64_t seed);

// Best candidate over all trees; ties resolved toward the smaller index.
NearestPoint forest_nn(const KdtForest& forest, std::span<const double> x, Metric metric);

// Per-row forest_nn distances; parallel over queries, order-stable.
std::vector<double> all_nn_distances(const KdtForest& forest, const Matrix& queries, Metric metric);

}  // namespace dbal
