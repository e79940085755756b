#include "dbal/medoids.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dbal/kdt_forest.hpp"
#include "dbal/parallel.hpp"
#include "dbal/rng.hpp"

namespace dbal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Full pairwise matrices are cached below this row count (~0.5 GB); larger
// inputs recompute distances per step.
constexpr std::size_t kDistCacheRows = 8192;

void validate_d0(std::span<const double> d0, std::size_t n, const char* who) {
  if (d0.size() != n) throw std::invalid_argument(std::string(who) + ": d0 length mismatch");
  for (double v : d0) {
    if (std::isnan(v) || v < 0.0)
      throw std::invalid_argument(std::string(who) + ": d0 entries must be >= 0");
  }
}

struct DistCache {
  std::size_t n = 0;
  std::vector<double> d;
  bool cached() const { return !d.empty(); }
  const double* row(std::size_t i) const { return d.data() + i * n; }
};

template <Metric M>
DistCache build_cache(const Matrix& pts) {
  DistCache c;
  c.n = pts.rows();
  if (c.n == 0 || c.n > kDistCacheRows) return c;
  c.d.assign(c.n * c.n, 0.0);
  const std::size_t p = pts.cols();
  parallel_for(c.n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < c.n; ++j) {
      const double v = detail::distance_impl<M>(pts.row(i), pts.row(j), p);
      c.d[i * c.n + j] = v;
      c.d[j * c.n + i] = v;
    }
  });
  return c;
}

template <Metric M>
Selection greedy_impl(const Matrix& targets, std::span<const double> d0, std::size_t K) {
  const std::size_t n = targets.rows();
  const std::size_t p = targets.cols();

  Selection sel;
  if (K == 0) return sel;

  const DistCache cache = build_cache<M>(targets);
  std::vector<double> dcur(d0.begin(), d0.end());
  std::vector<double> cost(n);
  std::vector<char> taken(n, 0);

  for (std::size_t step = 0; step < K; ++step) {
    parallel_for(n, [&](std::size_t cand) {
      if (taken[cand]) {
        cost[cand] = kInf;
        return;
      }
      double total = 0.0;
      if (cache.cached()) {
        const double* row = cache.row(cand);
        for (std::size_t x = 0; x < n; ++x) total += std::min(row[x], dcur[x]);
      } else {
        const double* c = targets.row(cand);
        for (std::size_t x = 0; x < n; ++x)
          total += std::min(detail::distance_impl<M>(c, targets.row(x), p), dcur[x]);
      }
      cost[cand] = total;
    });

    std::size_t best = 0;
    for (std::size_t cand = 1; cand < n; ++cand)
      if (cost[cand] < cost[best]) best = cand;

    taken[best] = 1;
    sel.indices.push_back(best);
    sel.criterion_trace.push_back(cost[best]);
    if (cache.cached()) {
      const double* row = cache.row(best);
      for (std::size_t x = 0; x < n; ++x) dcur[x] = std::min(dcur[x], row[x]);
    } else {
      const double* b = targets.row(best);
      parallel_for(n, [&](std::size_t x) {
        dcur[x] = std::min(dcur[x], detail::distance_impl<M>(b, targets.row(x), p));
      });
    }
  }
  return sel;
}

template <Metric M>
void fill_column(const Matrix& pts, std::size_t cand, const DistCache& cache,
                 std::vector<double>& col) {
  const std::size_t n = pts.rows();
  if (cache.cached()) {
    const double* row = cache.row(cand);
    col.assign(row, row + n);
    return;
  }
  col.resize(n);
  const double* c = pts.row(cand);
  parallel_for(n, [&](std::size_t x) {
    col[x] = detail::distance_impl<M>(c, pts.row(x), pts.cols());
  });
}

template <Metric M>
Selection pam_impl(const Matrix& targets, std::span<const double> d0, const Selection& selection,
                   std::size_t max_sweeps) {
  const std::size_t n = targets.rows();
  const std::size_t K = selection.indices.size();
  std::vector<std::size_t> S = selection.indices;

  Selection out;
  out.indices = S;
  if (K == 0) return out;

  const DistCache cache = build_cache<M>(targets);

  // med_dist[j*n + x] = d(x, S[j])
  std::vector<double> med_dist(K * n);
  std::vector<double> col;
  for (std::size_t j = 0; j < K; ++j) {
    fill_column<M>(targets, S[j], cache, col);
    std::copy(col.begin(), col.end(), med_dist.begin() + j * n);
  }

  // d1/d2: two smallest of {d0[x]} u {d(x, S[j])}; owner: j attaining d1, -1 for the source.
  std::vector<double> d1(n), d2(n);
  std::vector<std::int64_t> owner(n);
  double total = 0.0;
  auto recompute_neighbors = [&]() {
    total = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      double a = d0[x], b = kInf;
      std::int64_t who = -1;
      for (std::size_t j = 0; j < K; ++j) {
        const double v = med_dist[j * n + x];
        if (v < a) {
          b = a;
          a = v;
          who = static_cast<std::int64_t>(j);
        } else if (v < b) {
          b = v;
        }
      }
      d1[x] = a;
      d2[x] = b;
      owner[x] = who;
      total += a;
    }
  };
  recompute_neighbors();

  std::vector<char> is_medoid(n, 0);
  for (std::size_t j : S) is_medoid[j] = 1;
  std::vector<double> adjust(K);

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    const double tol = 1e-12 * std::max(1.0, std::abs(total));
    double best_delta = -tol;
    std::size_t best_j = K, best_c = n;

    for (std::size_t cand = 0; cand < n; ++cand) {
      if (is_medoid[cand]) continue;
      fill_column<M>(targets, cand, cache, col);
      double common = 0.0;
      std::fill(adjust.begin(), adjust.end(), 0.0);
      for (std::size_t x = 0; x < n; ++x) {
        const double v = col[x];
        const double kept = std::min(d1[x], v);
        common += kept - d1[x];
        if (owner[x] >= 0) adjust[static_cast<std::size_t>(owner[x])] += std::min(d2[x], v) - kept;
      }
      for (std::size_t j = 0; j < K; ++j) {
        const double delta = common + adjust[j];
        if (delta < best_delta) {
          best_delta = delta;
          best_j = j;
          best_c = cand;
        }
      }
    }

    if (best_j == K) break;  // no strictly improving swap
    is_medoid[S[best_j]] = 0;
    is_medoid[best_c] = 1;
    S[best_j] = best_c;
    fill_column<M>(targets, best_c, cache, col);
    std::copy(col.begin(), col.end(), med_dist.begin() + best_j * n);
    recompute_neighbors();
  }

  // Prefix costs of the refined sequence; last entry is the final cost.
  out.indices = S;
  out.criterion_trace.resize(K);
  std::vector<double> pc(d0.begin(), d0.end());
  for (std::size_t j = 0; j < K; ++j) {
    double sum = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      pc[x] = std::min(pc[x], med_dist[j * n + x]);
      sum += pc[x];
    }
    out.criterion_trace[j] = sum;
  }
  return out;
}

template <Metric M>
MedoidResult bb_impl(const Matrix& cluster, double prev_criterion, const BbParams& params,
                     std::uint64_t seed) {
  const std::size_t n_c = cluster.rows();
  const std::size_t p = cluster.cols();
  const std::size_t B = params.batch_size;
  const double w = params.confidence_width_factor;

  std::vector<std::uint32_t> order(n_c);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  shuffle_vec(order, rng);

  std::vector<std::uint32_t> survivors(n_c);
  std::iota(survivors.begin(), survivors.end(), 0u);
  std::vector<double> sum(n_c, 0.0), sumsq(n_c, 0.0);

  double t = prev_criterion;
  std::size_t pos = 0, seen = 0, pass = 0;

  auto mean_of = [&](std::uint32_t x) { return sum[x] / static_cast<double>(seen); };
  auto sigma_of = [&](std::uint32_t x) {
    const double m = mean_of(x);
    return std::sqrt(std::max(0.0, sumsq[x] / static_cast<double>(seen) - m * m));
  };

  while (pos < n_c && pass < params.max_passes) {
    const std::size_t take = std::min(B, n_c - pos);
    parallel_for(survivors.size(), [&](std::size_t s) {
      const std::uint32_t x = survivors[s];
      const double* xr = cluster.row(x);
      double acc = 0.0, accsq = 0.0;
      for (std::size_t b = pos; b < pos + take; ++b) {
        const double d = detail::distance_impl<M>(xr, cluster.row(order[b]), p);
        acc += d;
        accsq += d * d;
      }
      sum[x] += acc;
      sumsq[x] += accsq;
    });
    pos += take;
    seen += take;
    ++pass;

    std::uint32_t star = survivors[0];
    double star_mean = mean_of(star);
    for (std::uint32_t x : survivors) {
      const double m = mean_of(x);
      if (m < star_mean) {
        star = x;
        star_mean = m;
      }
    }
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(seen));
    t = std::min(t, star_mean + w * sigma_of(star) * inv_sqrt);

    std::vector<std::uint32_t> kept;
    kept.reserve(survivors.size());
    for (std::uint32_t x : survivors) {
      if (x == star || mean_of(x) - w * sigma_of(x) * inv_sqrt < t) kept.push_back(x);
    }
    survivors.swap(kept);
  }

  std::uint32_t best = survivors[0];
  double best_mean = mean_of(best);
  for (std::uint32_t x : survivors) {
    const double m = mean_of(x);
    if (m < best_mean) {
      best = x;
      best_mean = m;
    }
  }
  return {static_cast<std::size_t>(best), best_mean};
}

}  // namespace

Selection greedy_kmedoids(const Matrix& targets, std::span<const double> d0, std::size_t K,
                          Metric metric) {
  if (targets.empty()) throw std::invalid_argument("greedy_kmedoids: empty targets");
  if (K > targets.rows()) throw std::invalid_argument("greedy_kmedoids: K exceeds target count");
  validate_d0(d0, targets.rows(), "greedy_kmedoids");
  switch (metric) {
    case Metric::L1: return greedy_impl<Metric::L1>(targets, d0, K);
    case Metric::L2: return greedy_impl<Metric::L2>(targets, d0, K);
    case Metric::Linf: return greedy_impl<Metric::Linf>(targets, d0, K);
  }
  throw std::logic_error("greedy_kmedoids: unreachable");
}

Selection pam_refine(const Matrix& targets, std::span<const double> d0, const Selection& selection,
                     Metric metric, std::size_t max_sweeps) {
  if (targets.empty()) throw std::invalid_argument("pam_refine: empty targets");
  validate_d0(d0, targets.rows(), "pam_refine");
  std::vector<char> seen(targets.rows(), 0);
  for (std::size_t i : selection.indices) {
    if (i >= targets.rows()) throw std::invalid_argument("pam_refine: selection index out of range");
    if (seen[i]) throw std::invalid_argument("pam_refine: duplicate selection index");
    seen[i] = 1;
  }
  switch (metric) {
    case Metric::L1: return pam_impl<Metric::L1>(targets, d0, selection, max_sweeps);
    case Metric::L2: return pam_impl<Metric::L2>(targets, d0, selection, max_sweeps);
    case Metric::Linf: return pam_impl<Metric::Linf>(targets, d0, selection, max_sweeps);
  }
  throw std::logic_error("pam_refine: unreachable");
}

MedoidResult bb_medoid(const Matrix& cluster, double prev_criterion, const BbParams& params,
                       Metric metric, std::uint64_t seed) {
  if (cluster.empty()) throw std::invalid_argument("bb_medoid: empty cluster");
  if (params.batch_size == 0) throw std::invalid_argument("bb_medoid: batch size must be >= 1");
  if (params.max_passes == 0) throw std::invalid_argument("bb_medoid: max_passes must be >= 1");
  switch (metric) {
    case Metric::L1: return bb_impl<Metric::L1>(cluster, prev_criterion, params, seed);
    case Metric::L2: return bb_impl<Metric::L2>(cluster, prev_criterion, params, seed);
    case Metric::Linf: return bb_impl<Metric::Linf>(cluster, prev_criterion, params, seed);
  }
  throw std::logic_error("bb_medoid: unreachable");
}

ClusterAssignment assign_to_medoids(const Matrix& targets, std::span<const double> d0,
                                    std::span<const std::size_t> medoids, Metric metric) {
  const std::size_t n = targets.rows();
  validate_d0(d0, n, "assign_to_medoids");
  for (std::size_t m : medoids) {
    if (m >= n) throw std::invalid_argument("assign_to_medoids: medoid index out of range");
  }
  ClusterAssignment out;
  out.owner.resize(n);
  out.dmin.resize(n);
  parallel_for(n, [&](std::size_t x) {
    double best = d0[x];
    std::uint32_t who = 0;
    const double* xr = targets.row(x);
    for (std::size_t j = 0; j < medoids.size(); ++j) {
      const double d = pairwise_distance(xr, targets.row(medoids[j]), targets.cols(), metric);
      if (d < best) {
        best = d;
        who = static_cast<std::uint32_t>(j + 1);
      }
    }
    out.owner[x] = who;
    out.dmin[x] = best;
  });
  for (double v : out.dmin) out.total_cost += v;
  return out;
}

Selection large_kmedoids(const Matrix& source, const Matrix& targets,
                         const LargeKmedoidsParams& params) {
  const std::size_t n = targets.rows();
  const std::size_t K = params.budget;
  if (targets.empty()) throw std::invalid_argument("large_kmedoids: empty targets");
  if (K > n) throw std::invalid_argument("large_kmedoids: K exceeds target count");
  if (params.init_batch < K)
    throw std::invalid_argument("large_kmedoids: init batch smaller than K");
  if (source.rows() > 0 && source.cols() != targets.cols())
    throw std::invalid_argument("large_kmedoids: source/target dimension mismatch");

  Selection out;
  if (K == 0) return out;
  const Metric metric = params.metric;

  // 1: distance to the closest source for every target
  std::vector<double> d0(n, kInf);
  if (source.rows() > 0 && source.rows() <= params.exact_nn_threshold) {
    parallel_for(n, [&](std::size_t i) {
      d0[i] = dist_to_set(targets.row_span(i), source, metric).distance;
    });
  } else if (source.rows() > 0) {
    const KdtForest forest =
        build_forest(source, params.forest_trees, params.leaf_cap, mix_seed(params.seed, "nn-forest"));
    d0 = all_nn_distances(forest, targets, metric);
  }

  // 2: greedy initialization on a seeded subsample
  const std::size_t b0 = std::min(params.init_batch, n);
  std::vector<std::size_t> sample;
  if (b0 == n) {
    sample.resize(n);
    std::iota(sample.begin(), sample.end(), std::size_t{0});
  } else {
    Rng rng(params.seed, "init-sample");
    sample = sample_without_replacement(n, b0, rng);
    std::sort(sample.begin(), sample.end());
  }
  const Matrix sub = targets.gather_rows(sample);
  std::vector<double> sub_d0(b0);
  for (std::size_t i = 0; i < b0; ++i) sub_d0[i] = d0[sample[i]];
  const Selection init = greedy_kmedoids(sub, sub_d0, K, metric);

  std::vector<std::size_t> medoids(K);
  for (std::size_t j = 0; j < K; ++j) medoids[j] = sample[init.indices[j]];

  // 3 + 4: assignment / branch-&-bound update until stable
  std::vector<std::uint32_t> assignment(n);
  auto assign_and_record = [&]() {
    ClusterAssignment a = assign_to_medoids(targets, d0, medoids, metric);
    assignment = std::move(a.owner);
    out.criterion_trace.push_back(a.total_cost);
  };

  assign_and_record();
  std::vector<double> criterion(K, kInf);
  std::vector<std::vector<std::size_t>> members(K);

  for (std::size_t it = 1; it <= params.max_iters; ++it) {
    for (auto& m : members) m.clear();
    for (std::size_t x = 0; x < n; ++x) {
      if (assignment[x] > 0) members[assignment[x] - 1].push_back(x);
    }

    bool changed = false;
    for (std::size_t j = 0; j < K; ++j) {
      if (members[j].empty()) continue;  // medoid retained this sweep
      const Matrix cluster = targets.gather_rows(members[j]);
      BbParams bb;
      bb.batch_size = params.bb_batch != 0
                          ? params.bb_batch
                          : static_cast<std::size_t>(
                                std::ceil(std::sqrt(static_cast<double>(cluster.rows()))));
      bb.max_passes = params.bb_max_passes;
      bb.confidence_width_factor = params.bb_width;
      const MedoidResult res =
          bb_medoid(cluster, criterion[j], bb, metric, mix_seed(params.seed, "bb", it * K + j));
      criterion[j] = res.criterion;
      const std::size_t new_medoid = members[j][res.index];
      if (new_medoid != medoids[j]) {
        medoids[j] = new_medoid;
        changed = true;
      }
    }
    if (!changed) break;
    assign_and_record();
  }

  out.indices = medoids;
  return out;
}

}  // namespace dbal
