#include "dbal/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dbal/kdt_forest.hpp"
#include "dbal/parallel.hpp"
#include "dbal/rng.hpp"
#include "dbal/split.hpp"

namespace dbal {
namespace {

double dual_norm(std::span<const double> w, Metric metric) {
  double l1 = 0.0, l2 = 0.0, linf = 0.0;
  for (double v : w) {
    l1 += std::abs(v);
    l2 += v * v;
    linf = std::max(linf, std::abs(v));
  }
  switch (metric) {
    case Metric::L1: return linf;  // dual of the L1 metric
    case Metric::L2: return std::sqrt(l2);
    case Metric::Linf: return l1;
  }
  return 1.0;
}

std::vector<double> unit_direction(std::size_t p, Rng& rng) {
  std::vector<double> w(p);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : w) {
      v = rng.next_normal();
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : w) v /= norm;
  return w;
}

// k_f-Lipschitz labeling under `metric`: k_f sin(<w, x>) / ||w||*.
struct Labeler {
  std::vector<double> w;
  double inv_dual;
  double k_f;

  double operator()(const double* x, std::size_t p) const {
    double dot = 0.0;
    for (std::size_t j = 0; j < p; ++j) dot += w[j] * x[j];
    return k_f * std::sin(dot) * inv_dual;
  }
};

std::pair<LabeledPool, LabeledPool> make_gaussian_shift(const ShiftSpec& spec) {
  std::vector<double> shift_vec(spec.p, 0.0);
  if (spec.shift.size() == spec.p) {
    shift_vec = spec.shift;
  } else if (spec.shift.size() == 1) {
    Rng dir_rng(spec.seed, "shift-dir");
    shift_vec = unit_direction(spec.p, dir_rng);
    for (double& v : shift_vec) v *= spec.shift[0];
  } else if (!spec.shift.empty()) {
    throw std::invalid_argument("make_shift_dataset: shift must be scalar or length p");
  }

  Rng label_rng(spec.seed, "label-dir");
  Labeler f{unit_direction(spec.p, label_rng), 0.0, spec.label_lipschitz};
  f.inv_dual = 1.0 / dual_norm(f.w, spec.metric);

  auto draw = [&](std::size_t count, bool shifted, std::string_view stream) {
    Rng rng(spec.seed, stream);
    Rng noise(spec.seed, std::string(stream) + "-noise");
    LabeledPool pool;
    pool.points = Matrix(count, spec.p);
    pool.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      double* row = pool.points.row(i);
      for (std::size_t j = 0; j < spec.p; ++j) {
        row[j] = rng.next_normal();
        if (shifted) row[j] += shift_vec[j];
      }
      pool.labels[i] = f(row, spec.p) + spec.noise_sd * noise.next_normal();
    }
    return pool;
  };

  return {draw(spec.n_source, false, "source"), draw(spec.n_target, true, "target")};
}

std::pair<LabeledPool, LabeledPool> make_feature_split(const ShiftSpec& spec) {
  double rho = 0.5;
  if (spec.shift.size() == 1) rho = std::clamp(spec.shift[0], 0.0, 0.95);
  else if (!spec.shift.empty())
    throw std::invalid_argument("make_shift_dataset: feature_split takes a scalar shift");

  const std::size_t total = spec.n_source + spec.n_target;
  Rng rng(spec.seed, "latent");
  Rng noise(spec.seed, "label-noise");
  Rng label_rng(spec.seed, "label-dir");
  Labeler f{unit_direction(spec.p, label_rng), 0.0, spec.label_lipschitz};
  f.inv_dual = 1.0 / dual_norm(f.w, spec.metric);

  Matrix all(total, spec.p + 1);
  const double residual = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < total; ++i) {
    double* row = all.row(i);
    const double t = rng.next_normal();
    row[0] = t;
    for (std::size_t j = 1; j <= spec.p; ++j) row[j] = rho * t + residual * rng.next_normal();
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return all.at(a, 0) < all.at(b, 0); });

  auto take = [&](std::size_t begin, std::size_t count) {
    LabeledPool pool;
    pool.points =
        all.gather_rows(std::span<const std::size_t>(order.data() + begin, count)).drop_column(0);
    pool.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      pool.labels[i] = f(pool.points.row(i), spec.p) + spec.noise_sd * noise.next_normal();
    return pool;
  };

  return {take(0, spec.n_source), take(spec.n_source, spec.n_target)};
}

}  // namespace

std::pair<LabeledPool, LabeledPool> make_shift_dataset(const ShiftSpec& spec) {
  if (spec.p == 0) throw std::invalid_argument("make_shift_dataset: p must be >= 1");
  if (spec.n_source == 0 || spec.n_target == 0)
    throw std::invalid_argument("make_shift_dataset: need at least one point per domain");
  if (spec.label_lipschitz < 0.0 || spec.noise_sd < 0.0)
    throw std::invalid_argument("make_shift_dataset: negative k_f or noise_sd");
  return spec.mode == ShiftMode::GaussianShift ? make_gaussian_shift(spec)
                                               : make_feature_split(spec);
}

namespace {

// k smallest (distance, index) pairs, ascending.
std::vector<std::pair<double, std::size_t>> k_nearest(const Matrix& points,
                                                      std::span<const double> x, std::size_t k,
                                                      Metric metric) {
  std::vector<std::pair<double, std::size_t>> order(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i)
    order[i] = {pairwise_distance(x, points.row_span(i), metric), i};
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  order.resize(k);
  return order;
}

}  // namespace

EvalResult evaluate(const LabeledPool& source, const LabeledPool& target,
                    const Selection& selection, std::size_t k_neighbors, Metric metric, Task task,
                    bool include_queried) {
  source.validate();
  target.validate();
  const std::size_t n = target.size();
  std::vector<char> queried(n, 0);
  for (std::size_t i : selection.indices) {
    if (i >= n) throw std::invalid_argument("evaluate: selection index out of range");
    queried[i] = 1;
  }

  LabeledPool train = source;
  for (std::size_t i : selection.indices) {
    train.points.append_row(target.points.row_span(i));
    train.labels.push_back(target.labels[i]);
  }
  if (train.size() == 0) throw std::invalid_argument("evaluate: empty training pool");
  if (k_neighbors == 0 || k_neighbors > train.size())
    throw std::invalid_argument("evaluate: k_neighbors out of range");

  std::vector<std::size_t> eval_rows;
  for (std::size_t i = 0; i < n; ++i)
    if (include_queried || !queried[i]) eval_rows.push_back(i);
  if (eval_rows.empty()) throw std::invalid_argument("evaluate: empty evaluation set");

  std::vector<double> per_point(eval_rows.size());
  parallel_for(eval_rows.size(), [&](std::size_t e) {
    const std::size_t i = eval_rows[e];
    const auto nn = k_nearest(train.points, target.points.row_span(i), k_neighbors, metric);
    if (task == Task::MAE) {
      double pred = 0.0;
      for (const auto& [d, idx] : nn) pred += train.labels[idx];
      pred /= static_cast<double>(k_neighbors);
      per_point[e] = std::abs(pred - target.labels[i]);
    } else {
      // majority vote over integer classes; ties by smaller summed distance,
      // then smaller class
      std::map<long long, std::pair<std::size_t, double>> votes;  // class -> (count, dist sum)
      for (const auto& [d, idx] : nn) {
        const long long cls = std::llround(train.labels[idx]);
        auto& v = votes[cls];
        v.first += 1;
        v.second += d;
      }
      long long best_cls = 0;
      std::size_t best_count = 0;
      double best_dist = 0.0;
      for (const auto& [cls, v] : votes) {
        if (v.first > best_count || (v.first == best_count && v.second < best_dist)) {
          best_cls = cls;
          best_count = v.first;
          best_dist = v.second;
        }
      }
      per_point[e] = best_cls == std::llround(target.labels[i]) ? 1.0 : 0.0;
    }
  });

  EvalResult result;
  result.n_eval = eval_rows.size();
  result.K = selection.indices.size();
  double sum = 0.0;
  for (double v : per_point) sum += v;
  result.score = sum / static_cast<double>(per_point.size());
  return result;
}

namespace {

std::vector<double> source_distances(const Matrix& source, const Matrix& targets, Metric metric,
                                     std::uint64_t seed, const StrategyKnobs& knobs) {
  std::vector<double> d0(targets.rows(), std::numeric_limits<double>::infinity());
  if (source.rows() == 0) return d0;
  if (source.rows() <= knobs.exact_nn_threshold) {
    parallel_for(targets.rows(), [&](std::size_t i) {
      d0[i] = dist_to_set(targets.row_span(i), source, metric).distance;
    });
  } else {
    const KdtForest forest =
        build_forest(source, knobs.forest_trees, 0, mix_seed(seed, "nn-forest"));
    d0 = all_nn_distances(forest, targets, metric);
  }
  return d0;
}

}  // namespace

Selection run_strategy(StrategyKind kind, const LabeledPool& source, const Matrix& targets,
                       std::size_t K, Metric metric, std::uint64_t seed,
                       const StrategyKnobs& knobs, const std::vector<double>* weights,
                       const std::vector<double>* target_pseudo, PldmDiagnostics* pldm_diag) {
  switch (kind) {
    case StrategyKind::Random:
      return random_select(targets.rows(), K, mix_seed(seed, "random"));
    case StrategyKind::KMedoidsGreedy: {
      const auto d0 = source_distances(source.points, targets, metric, seed, knobs);
      return greedy_kmedoids(targets, d0, K, metric);
    }
    case StrategyKind::KMedoidsPAM: {
      const auto d0 = source_distances(source.points, targets, metric, seed, knobs);
      const Selection greedy = greedy_kmedoids(targets, d0, K, metric);
      return pam_refine(targets, d0, greedy, metric, knobs.pam_sweeps);
    }
    case StrategyKind::KMedoidsLarge: {
      LargeKmedoidsParams params;
      params.budget = K;
      params.init_batch = std::max(knobs.init_batch, K);
      params.forest_trees = knobs.forest_trees;
      params.bb_batch = knobs.bb_batch;
      params.metric = metric;
      params.seed = mix_seed(seed, "kmedoids-large");
      params.exact_nn_threshold = knobs.exact_nn_threshold;
      return large_kmedoids(source.points, targets, params);
    }
    case StrategyKind::PLDM: {
      PldmOptions options;
      options.loss = knobs.loss;
      options.metric = metric;
      options.lipschitz = knobs.lipschitz;
      options.pair_budget = knobs.pair_budget;
      options.seed = mix_seed(seed, "pldm");
      if (target_pseudo && source.labels.size() == source.size()) {
        return pldm_select(source, targets, *target_pseudo, K, options, pldm_diag);
      }
      source.validate();
      if (source.size() == 0) throw std::invalid_argument("pldm needs a labeled source pool");
      // k-NN pseudo-labeler fitted on the source stands in for the model
      const std::size_t kn = std::min(knobs.knn_k, source.size());
      LabeledPool source_pseudo;
      source_pseudo.points = source.points;
      source_pseudo.labels.resize(source.size());
      parallel_for(source.size(), [&](std::size_t i) {
        source_pseudo.labels[i] = knn_predict(source, source.points.row_span(i), kn, metric);
      });
      std::vector<double> pseudo(targets.rows());
      parallel_for(targets.rows(), [&](std::size_t i) {
        pseudo[i] = knn_predict(source, targets.row_span(i), kn, metric);
      });
      return pldm_select(source_pseudo, targets, pseudo, K, options, pldm_diag);
    }
    case StrategyKind::KCenter:
      return kcenter_greedy(source.points, targets, K, metric);
    case StrategyKind::Diversity:
      return diversity_greedy(source.points, targets, K, metric);
    case StrategyKind::KMeans:
    case StrategyKind::WeightedKMeans: {
      if (kind == StrategyKind::WeightedKMeans && !weights)
        throw std::invalid_argument("wkmeans needs a weight vector");
      KmeansOptions options;
      options.K = K;
      options.seed = mix_seed(seed, "kmeans");
      options.weights = kind == StrategyKind::WeightedKMeans ? weights : nullptr;
      options.minibatch = knobs.kmeans_minibatch;
      return kmeans_select(targets, options);
    }
  }
  throw std::logic_error("run_strategy: unreachable");
}

Envelopes pldm_report_envelopes(const LabeledPool& source, const Matrix& targets,
                                const Selection& selection, const StrategyKnobs& knobs,
                                Metric metric, double k_used,
                                const std::vector<double>* target_pseudo) {
  const bool external = target_pseudo && source.labels.size() == source.size();
  LabeledPool pool;
  pool.points = source.points;
  if (external) {
    pool.labels = source.labels;
  } else {
    source.validate();
    const std::size_t kn = std::min(knobs.knn_k, source.size());
    pool.labels.resize(source.size());
    parallel_for(source.size(), [&](std::size_t i) {
      pool.labels[i] = knn_predict(source, source.points.row_span(i), kn, metric);
    });
  }
  for (std::size_t i : selection.indices) {
    pool.points.append_row(targets.row_span(i));
    if (external) {
      pool.labels.push_back((*target_pseudo)[i]);
    } else {
      const std::size_t kn = std::min(knobs.knn_k, source.size());
      pool.labels.push_back(knn_predict(source, targets.row_span(i), kn, metric));
    }
  }
  return compute_envelopes(targets, pool, k_used, metric);
}

CriterionReport criterion_report_scaled(const Matrix& source, const Matrix& targets,
                                        const Selection& selection, Metric metric,
                                        std::uint64_t seed, const StrategyKnobs& knobs,
                                        const Envelopes* envelopes, const Loss* loss) {
  if (source.rows() <= knobs.exact_nn_threshold)
    return criterion_report(source, targets, selection, metric, envelopes, loss);

  const std::size_t n = targets.rows();
  if (n == 0) throw std::invalid_argument("criterion_report_scaled: empty targets");
  const KdtForest forest =
      build_forest(source, knobs.forest_trees, 0, mix_seed(seed, "report-forest"));
  const std::vector<double> d0 = all_nn_distances(forest, targets, metric);
  std::vector<double> dmin(n);
  parallel_for(n, [&](std::size_t i) {
    double best = d0[i];
    for (std::size_t s : selection.indices)
      best = std::min(best,
                      pairwise_distance(targets.row(i), targets.row(s), targets.cols(), metric));
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
    if (!loss)
      throw std::invalid_argument("criterion_report_scaled: envelopes given without a loss");
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      gap += loss_eval(envelopes->upper[i], envelopes->lower[i], *loss);
    report.envelope_gap_mean = gap / static_cast<double>(n);
  }
  return report;
}

ExperimentReport run_experiment(const LabeledPool& source, const LabeledPool& target,
                                const ExperimentConfig& config) {
  source.validate();
  target.validate();
  ExperimentReport report;
  report.metric = config.metric;
  report.task = config.task;

  for (StrategyKind strategy : config.strategies) {
    for (std::size_t K : config.budgets) {
      for (std::uint64_t seed : config.seeds) {
        const auto start = std::chrono::steady_clock::now();
        PldmDiagnostics diag;
        Selection sel = run_strategy(strategy, source, target.points, K, config.metric, seed,
                                     config.knobs,
                                     config.weights ? &*config.weights : nullptr, nullptr, &diag);

        CriterionReport crit;
        if (strategy == StrategyKind::PLDM) {
          const Envelopes env = pldm_report_envelopes(source, target.points, sel, config.knobs,
                                                      config.metric, diag.k_used);
          crit = criterion_report_scaled(source.points, target.points, sel, config.metric, seed,
                                         config.knobs, &env, &config.knobs.loss);
        } else {
          crit = criterion_report_scaled(source.points, target.points, sel, config.metric, seed,
                                         config.knobs);
        }

        LabeledPool eval_source = source;
        LabeledPool eval_target = target;
        if (config.standard_scale) {
          Matrix fit_rows = source.points;
          for (std::size_t i : sel.indices) fit_rows.append_row(target.points.row_span(i));
          const StandardScaler scaler = StandardScaler::fit(fit_rows);
          eval_source.points = scaler.transform(source.points);
          eval_target.points = scaler.transform(target.points);
        }
        EvalResult eval = evaluate(eval_source, eval_target, sel, config.knobs.knn_k,
                                   config.metric, config.task, config.include_queried);
        eval.strategy = strategy;
        eval.seed = seed;

        const auto stop = std::chrono::steady_clock::now();
        const double wall_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(stop - start)
                .count();
        report.cells.push_back({strategy, K, seed, std::move(sel), crit, eval, wall_ms});
      }
    }
  }

  // per (strategy, K) aggregates, sample standard deviation over seeds
  for (StrategyKind strategy : config.strategies) {
    for (std::size_t K : config.budgets) {
      std::vector<double> scores, dists;
      for (const CellResult& cell : report.cells) {
        if (cell.strategy == strategy && cell.K == K) {
          scores.push_back(cell.eval.score);
          dists.push_back(cell.criterion.mean_min_dist);
        }
      }
      auto mean_sd = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double sd = 0.0;
        if (v.size() > 1) {
          for (double x : v) sd += (x - m) * (x - m);
          sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
        }
        return std::pair<double, double>(m, sd);
      };
      const auto [sm, ssd] = mean_sd(scores);
      const auto [dm, dsd] = mean_sd(dists);
      report.aggregates.push_back({strategy, K, sm, ssd, dm, dsd});
    }
  }
  return report;
}

std::string experiment_report_json(const ExperimentReport& report) {
  nlohmann::ordered_json doc;
  doc["metric"] = to_string(report.metric);
  doc["task"] = report.task == Task::MAE ? "mae" : "accuracy";
  doc["cells"] = nlohmann::ordered_json::array();
  for (const CellResult& cell : report.cells) {
    nlohmann::ordered_json c;
    c["strategy"] = to_string(cell.strategy);
    c["K"] = cell.K;
    c["seed"] = cell.seed;
    c["indices"] = cell.selection.indices;
    c["criterion_trace"] = cell.selection.criterion_trace;
    c["mean_min_dist"] = cell.criterion.mean_min_dist;
    c["max_min_dist"] = cell.criterion.max_min_dist;
    if (cell.criterion.envelope_gap_mean)
      c["envelope_gap_mean"] = *cell.criterion.envelope_gap_mean;
    else
      c["envelope_gap_mean"] = nullptr;
    c["score"] = cell.eval.score;
    c["n_eval"] = cell.eval.n_eval;
    c["wall_ms"] = cell.wall_ms;
    doc["cells"].push_back(std::move(c));
  }
  doc["aggregates"] = nlohmann::ordered_json::array();
  for (const Aggregate& a : report.aggregates) {
    nlohmann::ordered_json j;
    j["strategy"] = to_string(a.strategy);
    j["K"] = a.K;
    j["score_mean"] = a.score_mean;
    j["score_sd"] = a.score_sd;
    j["mean_min_dist_mean"] = a.mean_min_dist_mean;
    j["mean_min_dist_sd"] = a.mean_min_dist_sd;
    doc["aggregates"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::string experiment_report_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "strategy,K,seed,score,mean_min_dist,max_min_dist,envelope_gap,wall_ms\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (const CellResult& cell : report.cells) {
    os << to_string(cell.strategy) << ',' << cell.K << ',' << cell.seed << ',';
    num(cell.eval.score);
    os << ',';
    num(cell.criterion.mean_min_dist);
    os << ',';
    num(cell.criterion.max_min_dist);
    os << ',';
    if (cell.criterion.envelope_gap_mean) num(*cell.criterion.envelope_gap_mean);
    os << ',';
    num(cell.wall_ms);
    os << '\n';
  }
  return os.str();
}

}  // namespace dbal
