#include "dbal/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dbal/parallel.hpp"
#include "dbal/rng.hpp"

namespace dbal {

StrategyKind strategy_from_string(std::string_view s) {
  if (s == "random") return StrategyKind::Random;
  if (s == "kmedoids-greedy") return StrategyKind::KMedoidsGreedy;
  if (s == "kmedoids-pam") return StrategyKind::KMedoidsPAM;
  if (s == "kmedoids-large") return StrategyKind::KMedoidsLarge;
  if (s == "pldm") return StrategyKind::PLDM;
  if (s == "kcenter") return StrategyKind::KCenter;
  if (s == "diversity") return StrategyKind::Diversity;
  if (s == "kmeans") return StrategyKind::KMeans;
  if (s == "wkmeans") return StrategyKind::WeightedKMeans;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Random: return "random";
    case StrategyKind::KMedoidsGreedy: return "kmedoids-greedy";
    case StrategyKind::KMedoidsPAM: return "kmedoids-pam";
    case StrategyKind::KMedoidsLarge: return "kmedoids-large";
    case StrategyKind::PLDM: return "pldm";
    case StrategyKind::KCenter: return "kcenter";
    case StrategyKind::Diversity: return "diversity";
    case StrategyKind::KMeans: return "kmeans";
    case StrategyKind::WeightedKMeans: return "wkmeans";
  }
  return "?";
}

Selection random_select(std::size_t n, std::size_t K, std::uint64_t seed) {
  if (K > n) throw std::invalid_argument("random_select: K exceeds n");
  Rng rng(seed);
  Selection sel;
  sel.indices = sample_without_replacement(n, K, rng);
  return sel;
}

Selection kcenter_greedy(const Matrix& source, const Matrix& targets, std::size_t K,
                         Metric metric) {
  if (source.empty()) throw std::invalid_argument("kcenter_greedy: empty source");
  if (K > targets.rows()) throw std::invalid_argument("kcenter_greedy: K exceeds target count");
  const std::size_t n = targets.rows();

  std::vector<double> dcur(n);
  parallel_for(n, [&](std::size_t i) {
    dcur[i] = dist_to_set(targets.row_span(i), source, metric).distance;
  });

  Selection sel;
  std::vector<char> taken(n, 0);
  for (std::size_t step = 0; step < K; ++step) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || dcur[i] > dcur[best]) best = i;
    }
    taken[best] = 1;
    sel.indices.push_back(best);
    const double* b = targets.row(best);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dcur[i] = std::min(dcur[i], pairwise_distance(b, targets.row(i), targets.cols(), metric));
      worst = std::max(worst, dcur[i]);
    }
    sel.criterion_trace.push_back(worst);
  }
  return sel;
}

Selection diversity_greedy(const Matrix& source, const Matrix& targets, std::size_t K,
                           Metric metric) {
  if (source.empty()) throw std::invalid_argument("diversity_greedy: empty source");
  if (K > targets.rows()) throw std::invalid_argument("diversity_greedy: K exceeds target count");
  const std::size_t n = targets.rows();

  std::vector<double> dist_sum(n);  // to source u queries so far
  parallel_for(n, [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < source.rows(); ++j)
      s += pairwise_distance(targets.row(i), source.row(j), targets.cols(), metric);
    dist_sum[i] = s;
  });

  Selection sel;
  std::vector<char> taken(n, 0);
  for (std::size_t step = 0; step < K; ++step) {
    const double labeled_count = static_cast<double>(source.rows() + step);
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || dist_sum[i] > dist_sum[best]) best = i;
    }
    taken[best] = 1;
    sel.indices.push_back(best);
    sel.criterion_trace.push_back(dist_sum[best] / labeled_count);
    const double* b = targets.row(best);
    for (std::size_t i = 0; i < n; ++i)
      dist_sum[i] += pairwise_distance(b, targets.row(i), targets.cols(), metric);
  }
  return sel;
}

namespace {

double sq_l2(const double* a, const double* b, std::size_t p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Categorical draw proportional to mass[i]; falls back to the last positive
// entry if rounding pushes the scan past the end.
std::size_t weighted_pick(std::span<const double> mass, Rng& rng) {
  double total = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    total += mass[i];
    if (mass[i] > 0.0) last_positive = i;
  }
  if (total <= 0.0) return 0;
  double u = rng.next_double() * total;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    u -= mass[i];
    if (u <= 0.0 && mass[i] > 0.0) return i;
  }
  return last_positive;
}

}  // namespace

Selection kmeans_select(const Matrix& targets, const KmeansOptions& options) {
  const std::size_t n = targets.rows();
  const std::size_t p = targets.cols();
  const std::size_t K = options.K;
  if (targets.empty()) throw std::invalid_argument("kmeans_select: empty targets");
  if (K > n) throw std::invalid_argument("kmeans_select: K exceeds target count");

  std::vector<double> weights;
  if (options.weights) {
    weights = *options.weights;
    if (weights.size() != n) throw std::invalid_argument("kmeans_select: weights length mismatch");
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0 || std::isnan(w))
        throw std::invalid_argument("kmeans_select: weights must be >= 0");
      total += w;
    }
    if (total == 0.0) throw std::invalid_argument("kmeans_select: weights must not be all zero");
  } else {
    weights.assign(n, 1.0);
  }

  Selection sel;
  if (K == 0) return sel;
  Rng rng(options.seed);

  // weighted k-means++ seeding
  Matrix centers(K, p);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  {
    std::vector<double> prob(n);
    const std::size_t first = weighted_pick(weights, rng);
    std::copy(targets.row(first), targets.row(first) + p, centers.row(0));
    for (std::size_t c = 1; c < K; ++c) {
      const double* prev = centers.row(c - 1);
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::min(d2[i], sq_l2(targets.row(i), prev, p));
        prob[i] = weights[i] * d2[i];
      }
      const std::size_t pick = weighted_pick(prob, rng);
      std::copy(targets.row(pick), targets.row(pick) + p, centers.row(c));
    }
  }

  // Lloyd iterations; with minibatch set, each pass works on a seeded sample
  // taken without replacement and accumulated in ascending index order, so
  // minibatch = n reproduces the full-batch trajectory.
  std::vector<std::uint32_t> assign(n);
  std::vector<double> center_weight(K);
  Matrix new_centers(K, p);
  std::vector<std::size_t> batch;

  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    if (options.minibatch > 0 && options.minibatch < n) {
      batch = sample_without_replacement(n, options.minibatch, rng);
      std::sort(batch.begin(), batch.end());
    } else if (options.minibatch > 0) {
      batch = sample_without_replacement(n, n, rng);
      std::sort(batch.begin(), batch.end());
    } else {
      batch.resize(n);
      std::iota(batch.begin(), batch.end(), std::size_t{0});
    }

    parallel_for(batch.size(), [&](std::size_t bi) {
      const std::size_t i = batch[bi];
      double best = sq_l2(targets.row(i), centers.row(0), p);
      std::uint32_t who = 0;
      for (std::size_t c = 1; c < K; ++c) {
        const double d = sq_l2(targets.row(i), centers.row(c), p);
        if (d < best) {
          best = d;
          who = static_cast<std::uint32_t>(c);
        }
      }
      assign[i] = who;
    });

    std::fill(center_weight.begin(), center_weight.end(), 0.0);
    std::fill(new_centers.data().begin(), new_centers.data().end(), 0.0);
    for (std::size_t i : batch) {
      const std::uint32_t c = assign[i];
      center_weight[c] += weights[i];
      const double* r = targets.row(i);
      double* acc = new_centers.row(c);
      for (std::size_t j = 0; j < p; ++j) acc[j] += weights[i] * r[j];
    }

    double movement = 0.0;
    for (std::size_t c = 0; c < K; ++c) {
      if (center_weight[c] <= 0.0) continue;  // empty cluster keeps its center
      double norm_old = 0.0, delta = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double updated = new_centers.at(c, j) / center_weight[c];
        const double d = updated - centers.at(c, j);
        delta += d * d;
        norm_old += centers.at(c, j) * centers.at(c, j);
        centers.at(c, j) = updated;
      }
      movement = std::max(movement, std::sqrt(delta) / (1.0 + std::sqrt(norm_old)));
    }
    if (movement <= options.tol) break;
  }

  // nearest target per centroid, skipping already-used indices
  std::vector<char> used(n, 0);
  for (std::size_t c = 0; c < K; ++c) {
    std::size_t best = n;
    double best_d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double d = sq_l2(targets.row(i), centers.row(c), p);
      if (best == n || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    used[best] = 1;
    sel.indices.push_back(best);
  }
  return sel;
}

CriterionReport criterion_report(const Matrix& source, const Matrix& targets,
                                 const Selection& selection, Metric metric,
                                 const Envelopes* envelopes, const Loss* loss) {
  const std::size_t n = targets.rows();
  if (n == 0) throw std::invalid_argument("criterion_report: empty targets");
  std::vector<char> seen(n, 0);
  for (std::size_t i : selection.indices) {
    if (i >= n) throw std::invalid_argument("criterion_report: selection index out of range");
    if (seen[i]) throw std::invalid_argument("criterion_report: duplicate selection index");
    seen[i] = 1;
  }
  if (source.empty() && selection.indices.empty())
    throw std::invalid_argument("criterion_report: labeled set is empty");
  if (!source.empty() && source.cols() != targets.cols())
    throw std::invalid_argument("criterion_report: dimension mismatch");

  std::vector<double> dmin(n);
  parallel_for(n, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    if (!source.empty()) best = dist_to_set(targets.row_span(i), source, metric).distance;
    for (std::size_t s : selection.indices) {
      best = std::min(best,
                      pairwise_distance(targets.row(i), targets.row(s), targets.cols(), metric));
    }
    dmin[i] = best;
  });

  CriterionReport report;
  double sum = 0.0, worst = 0.0;
  for (double v : dmin) {
    sum += v;
    worst = std::max(worst, v);
  }
  report.mean_min_dist = sum / static_cast<double>(n);
  report.max_min_dist = worst;

  if (envelopes) {
    if (!loss) throw std::invalid_argument("criterion_report: envelopes given without a loss");
    if (envelopes->upper.size() != n || envelopes->lower.size() != n)
      throw std::invalid_argument("criterion_report: envelope length mismatch");
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      gap += loss_eval(envelopes->upper[i], envelopes->lower[i], *loss);
    report.envelope_gap_mean = gap / static_cast<double>(n);
  }
  return report;
}

}  // namespace dbal
