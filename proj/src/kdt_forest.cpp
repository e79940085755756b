#include "dbal/kdt_forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbal/parallel.hpp"
#include "dbal/rng.hpp"

namespace dbal {
namespace {

struct TreeBuilder {
  const Matrix& points;
  std::size_t leaf_cap;
  Rng rng;
  KdtForest::Tree tree;
  std::vector<double> values;  // scratch for median selection

  // Builds the subtree over items[begin, end) and returns its node index.
  // Depth-first, left before right, so the rng draw order is deterministic.
  std::int32_t build(std::uint32_t begin, std::uint32_t end) {
    const std::int32_t node_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::uint32_t count = end - begin;

    if (count <= leaf_cap) {
      tree.nodes[node_id].begin = begin;
      tree.nodes[node_id].count = count;
      return node_id;
    }

    const std::size_t feature = static_cast<std::size_t>(rng.below(points.cols()));
    values.resize(count);
    for (std::uint32_t i = 0; i < count; ++i)
      values[i] = points.at(tree.items[begin + i], feature);
    const std::size_t mid = count / 2;  // lower median
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double split = values[mid];

    auto* items = tree.items.data();
    const auto boundary = std::stable_partition(
        items + begin, items + end,
        [&](std::uint32_t idx) { return points.at(idx, feature) < split; });
    const std::uint32_t left_count = static_cast<std::uint32_t>(boundary - (items + begin));

    if (left_count == 0 || left_count == count) {
      // unsplittable on this feature: terminate as a leaf
      tree.nodes[node_id].begin = begin;
      tree.nodes[node_id].count = count;
      return node_id;
    }

    tree.nodes[node_id].split_feature = static_cast<std::int32_t>(feature);
    tree.nodes[node_id].split_value = split;
    const std::int32_t left = build(begin, begin + left_count);
    const std::int32_t right = build(begin + left_count, end);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

}  // namespace

std::size_t default_leaf_cap(std::size_t point_count) {
  if (point_count <= 2) return 1;
  return static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(point_count))));
}

KdtForest build_forest(const Matrix& points, std::size_t tree_count, std::size_t leaf_cap,
                       std::uint64_t seed) {
  if (points.empty()) throw std::invalid_argument("build_forest: empty point set");
  if (tree_count == 0) throw std::invalid_argument("build_forest: need at least one tree");
  if (leaf_cap == 0) leaf_cap = default_leaf_cap(points.rows());

  KdtForest forest;
  forest.points_ = &points;
  forest.leaf_cap_ = leaf_cap;
  forest.trees_.resize(tree_count);

  parallel_for(tree_count, [&](std::size_t t) {
    TreeBuilder builder{points, leaf_cap, Rng(seed, "kdt-tree", t), {}, {}};
    builder.tree.items.resize(points.rows());
    for (std::uint32_t i = 0; i < points.rows(); ++i) builder.tree.items[i] = i;
    builder.build(0, static_cast<std::uint32_t>(points.rows()));
    forest.trees_[t] = std::move(builder.tree);
  });
  return forest;
}

NearestPoint forest_nn(const KdtForest& forest, std::span<const double> x, Metric metric) {
  const Matrix& points = forest.points();
  if (x.size() != points.cols()) throw std::invalid_argument("forest_nn: dimension mismatch");

  NearestPoint best{std::numeric_limits<double>::infinity(), 0};
  bool found = false;
  for (const auto& tree : forest.trees()) {
    const KdtForest::Node* node = &tree.nodes[0];
    while (node->split_feature >= 0) {
      node = x[static_cast<std::size_t>(node->split_feature)] < node->split_value
                 ? &tree.nodes[node->left]
                 : &tree.nodes[node->right];
    }
    for (std::uint32_t i = node->begin; i < node->begin + node->count; ++i) {
      const std::uint32_t idx = tree.items[i];
      const double d = pairwise_distance(x.data(), points.row(idx), x.size(), metric);
      if (!found || d < best.distance || (d == best.distance && idx < best.index)) {
        best = {d, idx};
        found = true;
      }
    }
  }
  return best;
}

std::vector<double> all_nn_distances(const KdtForest& forest, const Matrix& queries,
                                     Metric metric) {
  if (queries.cols() != forest.points().cols())
    throw std::invalid_argument("all_nn_distances: dimension mismatch");
  std::vector<double> out(queries.rows());
  parallel_for(queries.rows(),
               [&](std::size_t i) { out[i] = forest_nn(forest, queries.row_span(i), metric).distance; });
  return out;
}

}  // namespace dbal
