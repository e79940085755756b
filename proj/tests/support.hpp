#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here recomputes results by direct enumeration so the library paths have
// something to be checked against.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dbal/metric.hpp"
#include "dbal/rng.hpp"
#include "dbal/types.hpp"

namespace testsupport {

inline dbal::Matrix random_uniform(dbal::Rng& rng, std::size_t n, std::size_t p, double lo = 0.0,
                                   double hi = 1.0) {
  dbal::Matrix m(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m.at(i, j) = lo + (hi - lo) * rng.next_double();
  return m;
}

inline dbal::Matrix random_normal(dbal::Rng& rng, std::size_t n, std::size_t p) {
  dbal::Matrix m(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m.at(i, j) = rng.next_normal();
  return m;
}

inline dbal::Matrix column(std::initializer_list<double> values) {
  dbal::Matrix m(values.size(), 1);
  std::size_t i = 0;
  for (double v : values) m.at(i++, 0) = v;
  return m;
}

// Plain-loop nearest neighbour, written independently of dist_to_set.
inline dbal::NearestPoint brute_nn(std::span<const double> x, const dbal::Matrix& set,
                                   dbal::Metric metric) {
  dbal::NearestPoint best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < set.rows(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < set.cols(); ++j) {
      const double diff = x[j] - set.at(i, j);
      if (metric == dbal::Metric::L1) d += std::abs(diff);
      else if (metric == dbal::Metric::L2) d += diff * diff;
      else d = std::max(d, std::abs(diff));
    }
    if (metric == dbal::Metric::L2) d = std::sqrt(d);
    if (d < best.distance) best = {d, i};
  }
  return best;
}

inline bool next_combination(std::vector<std::size_t>& comb, std::size_t n) {
  const std::size_t K = comb.size();
  std::size_t i = K;
  while (i > 0) {
    --i;
    if (comb[i] != i + n - K) {
      ++comb[i];
      for (std::size_t j = i + 1; j < K; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

// Total K-medoids cost sum_x min(d0[x], d(x, S)) for a candidate medoid set.
inline double medoid_cost(const dbal::Matrix& targets, std::span<const double> d0,
                          std::span<const std::size_t> medoids, dbal::Metric metric) {
  double total = 0.0;
  for (std::size_t x = 0; x < targets.rows(); ++x) {
    double best = d0[x];
    for (std::size_t m : medoids)
      best = std::min(best, dbal::pairwise_distance(targets.row_span(x), targets.row_span(m), metric));
    total += best;
  }
  return total;
}

// Minimum cost over every K-subset of {0..n-1}.
inline double best_subset_cost(const dbal::Matrix& targets, std::span<const double> d0,
                               std::size_t K, dbal::Metric metric) {
  std::vector<std::size_t> comb(K);
  for (std::size_t i = 0; i < K; ++i) comb[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, medoid_cost(targets, d0, comb, metric));
  } while (next_combination(comb, targets.rows()));
  return best;
}

// Minimum over K-subsets of the max-min-distance to source u subset.
inline double best_kcenter_value(const dbal::Matrix& source, const dbal::Matrix& targets,
                                 std::size_t K, dbal::Metric metric) {
  const std::size_t n = targets.rows();
  std::vector<double> d0(n);
  for (std::size_t i = 0; i < n; ++i) d0[i] = brute_nn(targets.row_span(i), source, metric).distance;

  std::vector<std::size_t> comb(K);
  for (std::size_t i = 0; i < K; ++i) comb[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      double dmin = d0[x];
      for (std::size_t m : comb)
        dmin = std::min(dmin,
                        dbal::pairwise_distance(targets.row_span(x), targets.row_span(m), metric));
      worst = std::max(worst, dmin);
    }
    best = std::min(best, worst);
  } while (next_combination(comb, n));
  return best;
}

// Exact medoid of a cluster: full pairwise scan, criterion = mean distance.
inline std::pair<std::size_t, double> exact_medoid(const dbal::Matrix& cluster,
                                                   dbal::Metric metric) {
  const std::size_t n = cluster.rows();
  std::vector<double> sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dbal::pairwise_distance(cluster.row_span(i), cluster.row_span(j), metric);
      sums[i] += d;
      sums[j] += d;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (sums[i] < sums[best]) best = i;
  return {best, sums[best] / static_cast<double>(n)};
}

}  // namespace testsupport
