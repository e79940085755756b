#include "dbal/pldm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dbal/parallel.hpp"
#include "dbal/rng.hpp"

namespace dbal {
namespace {

constexpr std::size_t kPldmCacheRows = 8192;   // full target-target cache limit
constexpr std::size_t kPldmSoftCap = 20'000;   // warn above this; O(n^2) per step

}  // namespace

LossKind loss_from_string(std::string_view s) {
  if (s == "l1") return LossKind::L1;
  if (s == "l2") return LossKind::L2;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "' (expected l1 or l2)");
}

double knn_predict(const LabeledPool& train, std::span<const double> x, std::size_t k_neighbors,
                   Metric metric) {
  train.validate();
  if (train.size() == 0) throw std::invalid_argument("knn_predict: empty pool");
  if (k_neighbors == 0 || k_neighbors > train.size())
    throw std::invalid_argument("knn_predict: k_neighbors out of range");

  std::vector<std::pair<double, std::size_t>> order(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    order[i] = {pairwise_distance(x, train.points.row_span(i), metric), i};
  std::partial_sort(order.begin(), order.begin() + k_neighbors, order.end());

  double sum = 0.0;
  for (std::size_t i = 0; i < k_neighbors; ++i) sum += train.labels[order[i].second];
  return sum / static_cast<double>(k_neighbors);
}

double estimate_lipschitz(const Matrix& points, std::span<const double> values, Metric metric,
                          std::uint64_t pair_budget, std::uint64_t seed) {
  const std::size_t n = points.rows();
  if (n < 2) throw std::invalid_argument("estimate_lipschitz: need at least two points");
  if (values.size() != n) throw std::invalid_argument("estimate_lipschitz: values length mismatch");

  auto slope = [&](std::size_t i, std::size_t j, double& best) {
    const double d = pairwise_distance(points.row(i), points.row(j), points.cols(), metric);
    const double dv = std::abs(values[i] - values[j]);
    if (d == 0.0) {
      if (dv > 0.0)
        throw InconsistentDuplicates("estimate_lipschitz: coincident points with different values");
      return;
    }
    best = std::max(best, dv / d);
  };

  double best = 0.0;
  const std::uint64_t total_pairs =
      static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
  if (total_pairs <= pair_budget) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) slope(i, j, best);
  } else {
    Rng rng(seed);
    for (std::uint64_t s = 0; s < pair_budget; ++s) {
      const std::size_t i = static_cast<std::size_t>(rng.below(n));
      std::size_t j = static_cast<std::size_t>(rng.below(n - 1));
      if (j >= i) ++j;
      slope(i, j, best);
    }
  }
  return best;
}

Envelopes compute_envelopes(const Matrix& targets, const LabeledPool& labeled, double k,
                            Metric metric) {
  labeled.validate();
  if (labeled.size() == 0) throw std::invalid_argument("compute_envelopes: empty labeled pool");
  if (k < 0.0 || std::isnan(k)) throw std::invalid_argument("compute_envelopes: k must be >= 0");
  if (targets.rows() > 0 && targets.cols() != labeled.points.cols())
    throw std::invalid_argument("compute_envelopes: dimension mismatch");

  Envelopes env;
  env.k = k;
  env.upper.resize(targets.rows());
  env.lower.resize(targets.rows());
  parallel_for(targets.rows(), [&](std::size_t i) {
    const double* x = targets.row(i);
    double up = std::numeric_limits<double>::infinity();
    double lo = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < labeled.size(); ++s) {
      const double d = pairwise_distance(x, labeled.points.row(s), targets.cols(), metric);
      up = std::min(up, labeled.labels[s] + k * d);
      lo = std::max(lo, labeled.labels[s] - k * d);
    }
    env.upper[i] = up;
    env.lower[i] = lo;
  });
  return env;
}

Selection pldm_select(const LabeledPool& source_pseudo, const Matrix& targets,
                      std::span<const double> target_pseudo, std::size_t K,
                      const PldmOptions& options, PldmDiagnostics* diagnostics) {
  source_pseudo.validate();
  const std::size_t n = targets.rows();
  if (source_pseudo.size() == 0) throw std::invalid_argument("pldm_select: empty source pool");
  if (target_pseudo.size() != n)
    throw std::invalid_argument("pldm_select: target pseudo-labels length mismatch");
  if (K > n) throw std::invalid_argument("pldm_select: K exceeds target count");
  if (n > kPldmSoftCap)
    std::fprintf(stderr, "pldm_select: n=%zu exceeds the supported size for the O(n^2) step\n", n);

  const Metric metric = options.metric;
  const Loss& loss = options.loss;

  // Lipschitz constant over source u targets with their pseudo-label values.
  Matrix combined = source_pseudo.points;
  for (std::size_t i = 0; i < n; ++i) combined.append_row(targets.row_span(i));
  std::vector<double> combined_values(source_pseudo.labels.begin(), source_pseudo.labels.end());
  combined_values.insert(combined_values.end(), target_pseudo.begin(), target_pseudo.end());
  const double k_emp = estimate_lipschitz(combined, combined_values, metric, options.pair_budget,
                                          mix_seed(options.seed, "lipschitz"));
  const double k = options.lipschitz.value_or(k_emp);
  if (diagnostics) {
    diagnostics->k_used = k;
    diagnostics->k_empirical = k_emp;
    diagnostics->k_below_empirical = k < k_emp;
  }
  if (k < k_emp)
    std::fprintf(stderr, "pldm_select: supplied k=%g is below the empirical constant %g\n", k, k_emp);

  Envelopes env = compute_envelopes(targets, source_pseudo, k, metric);

  // Optional target-target distance cache; otherwise columns are recomputed
  // per step.
  const bool cached = n <= kPldmCacheRows;
  std::vector<double> dmat;
  if (cached) {
    dmat.assign(n * n, 0.0);
    parallel_for(n, [&](std::size_t i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = pairwise_distance(targets.row(i), targets.row(j), targets.cols(), metric);
        dmat[i * n + j] = v;
        dmat[j * n + i] = v;
      }
    });
  }
  auto dist_ij = [&](std::size_t i, std::size_t j) {
    return cached ? dmat[i * n + j]
                  : pairwise_distance(targets.row(i), targets.row(j), targets.cols(), metric);
  };

  Selection sel;
  std::vector<char> taken(n, 0);
  std::vector<double> score(n);

  for (std::size_t step = 0; step < K; ++step) {
    parallel_for(n, [&](std::size_t cand) {
      if (taken[cand]) {
        score[cand] = std::numeric_limits<double>::infinity();
        return;
      }
      const double pl = target_pseudo[cand];
      double total = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        const double kd = env.k * dist_ij(x, cand);
        const double cand_up = pl + kd;
        const double cand_lo = pl - kd;
        const double delta =
            std::min(std::min(loss_eval(env.upper[x], env.lower[x], loss),
                              loss_eval(env.upper[x], cand_lo, loss)),
                     std::min(loss_eval(cand_up, env.lower[x], loss),
                              loss_eval(cand_up, cand_lo, loss)));
        total += delta;
      }
      score[cand] = total;
    });

    std::size_t best = 0;
    for (std::size_t cand = 1; cand < n; ++cand)
      if (score[cand] < score[best]) best = cand;

    taken[best] = 1;
    sel.indices.push_back(best);
    const double pl = target_pseudo[best];
    double gap_total = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      const double kd = env.k * dist_ij(x, best);
      env.upper[x] = std::min(env.upper[x], pl + kd);
      env.lower[x] = std::max(env.lower[x], pl - kd);
      gap_total += loss_eval(env.upper[x], env.lower[x], loss);
    }
    sel.criterion_trace.push_back(gap_total / static_cast<double>(n));
  }
  return sel;
}

}  // namespace dbal
