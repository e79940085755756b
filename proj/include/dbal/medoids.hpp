#pragma once

#include <cstdint>
#include <limits>
#include <span>

#include "dbal/metric.hpp"
#include "dbal/types.hpp"

namespace dbal {

// Source-anchored K-medoids. Every routine takes d0, the per-target distance
// to the labeled source set; use +inf entries for the pure-clustering case
// with no source. All ties resolve toward the smallest index.

// Greedy selection: at each step picks the target x' minimizing
// sum_x min(d(x, x'), d^x) and updates d^x. criterion_trace[i] is that total
// cost after i+1 medoids; it is non-increasing.
Selection greedy_kmedoids(const Matrix& targets, std::span<const double> d0, std::size_t K,
                          Metric metric);

// Swap-based refinement: accepts the best strictly-improving
// (medoid, non-medoid) swap per sweep until convergence or max_sweeps.
// criterion_trace holds the prefix costs of the refined medoid sequence, so
// its last entry is the final cost (never above the input cost).
Selection pam_refine(const Matrix& targets, std::span<const double> d0, const Selection& selection,
                     Metric metric, std::size_t max_sweeps = 30);

struct BbParams {
  std::size_t batch_size = 1;
  std::size_t max_passes = std::numeric_limits<std::size_t>::max();
  double confidence_width_factor = 2.0;
};

struct MedoidResult {
  std::size_t index;  // row within the cluster matrix
  double criterion;   // running mean distance over the points accumulated
};

// Branch-&-bound medoid search inside one cluster. Rows are shuffled once
// with `seed`, then consumed in batches of batch_size; every surviving
// candidate accumulates its distances to each batch. After batch i the
// threshold becomes min(t, C* + w*sigma*/sqrt(Bi)) for the running argmin,
// and candidates with C_x - w*sigma_x/sqrt(Bi) >= t are dropped. The running
// argmin itself is exempt, so the survivor set is never empty. With
// batch_size >= cluster size this is the exact medoid.
MedoidResult bb_medoid(const Matrix& cluster, double prev_criterion, const BbParams& params,
                       Metric metric, std::uint64_t seed);

// Assignment of every target to the closest of {source, medoid_1..medoid_K}:
// owner 0 means the source side is nearest (ties prefer the source, then the
// lower-numbered medoid), dmin the winning distance.
struct ClusterAssignment {
  std::vector<std::uint32_t> owner;
  std::vector<double> dmin;
  double total_cost = 0.0;  // sum of dmin
};

ClusterAssignment assign_to_medoids(const Matrix& targets, std::span<const double> d0,
                                    std::span<const std::size_t> medoids, Metric metric);

struct LargeKmedoidsParams {
  std::size_t budget = 0;        // K
  std::size_t init_batch = 5000; // greedy initialization subsample size
  std::size_t forest_trees = 50;
  std::size_t leaf_cap = 0;      // 0: max(1, ceil(log2(m)))
  std::size_t bb_batch = 0;      // 0: ceil(sqrt(cluster size)), per cluster
  std::size_t bb_max_passes = std::numeric_limits<std::size_t>::max();
  double bb_width = 2.0;
  Metric metric = Metric::L1;
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  std::size_t exact_nn_threshold = 4096;  // brute-force d0 below this source size
};

// Scalable pipeline: (1) d0 from a KD-tree forest over the source (exact
// scan for small sources, +inf with no source); (2) greedy initialization on
// a seeded subsample of init_batch targets; (3) assignment of every target
// to the closest of {source, medoids}; (4) per-cluster branch-&-bound medoid
// updates, repeating 3-4 until no medoid moves or max_iters update sweeps.
// A cluster that lost all members keeps its medoid for that sweep.
// criterion_trace records sum_x min(d0^x, min_j d(x, medoid_j)) after each
// assignment pass.
Selection large_kmedoids(const Matrix& source, const Matrix& targets,
                         const LargeKmedoidsParams& params);

}  // namespace dbal
