#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "dbal/metric.hpp"
#include "dbal/pldm.hpp"
#include "dbal/types.hpp"

namespace dbal {

enum class StrategyKind {
  Random,
  KMedoidsGreedy,
  KMedoidsPAM,
  KMedoidsLarge,
  PLDM,
  KCenter,
  Diversity,
  KMeans,
  WeightedKMeans,
};

// Canonical CLI strings: random, kmedoids-greedy, kmedoids-pam,
// kmedoids-large, pldm, kcenter, diversity, kmeans, wkmeans.
StrategyKind strategy_from_string(std::string_view s);
std::string to_string(StrategyKind kind);

// K distinct uniform indices, deterministic per seed. Empty criterion trace.
Selection random_select(std::size_t n, std::size_t K, std::uint64_t seed);

// Repeatedly queries the target farthest from the labeled set (source plus
// queries so far). trace[i] is the max-min-distance after query i.
Selection kcenter_greedy(const Matrix& source, const Matrix& targets, std::size_t K,
                         Metric metric);

// Queries the target with the largest mean distance to the labeled set.
// trace[i] is that mean for the picked point.
Selection diversity_greedy(const Matrix& source, const Matrix& targets, std::size_t K,
                           Metric metric);

struct KmeansOptions {
  std::size_t K = 0;
  std::uint64_t seed = 0;
  const std::vector<double>* weights = nullptr;  // uniform when null
  std::size_t minibatch = 0;                     // 0: full-batch Lloyd
  std::size_t max_iters = 300;
  double tol = 1e-6;  // relative center movement
};

// Weighted k-means++ seeding plus Lloyd iterations, always in L2 geometry.
// Returns the nearest target per centroid; a repeated index falls through to
// the next-nearest unused target. With minibatch = n the trajectory matches
// full-batch exactly.
Selection kmeans_select(const Matrix& targets, const KmeansOptions& options);

// The measurable bound quantities for a selection: mean and max distance from
// the targets to source u selection (computed exactly), plus the mean
// envelope-gap loss when envelopes are supplied.
struct CriterionReport {
  double mean_min_dist = 0.0;
  double max_min_dist = 0.0;
  std::optional<double> envelope_gap_mean;
};

CriterionReport criterion_report(const Matrix& source, const Matrix& targets,
                                 const Selection& selection, Metric metric,
                                 const Envelopes* envelopes = nullptr,
                                 const Loss* loss = nullptr);

}  // namespace dbal
