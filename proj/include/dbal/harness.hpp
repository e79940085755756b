#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dbal/medoids.hpp"
#include "dbal/pldm.hpp"
#include "dbal/strategies.hpp"
#include "dbal/types.hpp"

namespace dbal {

enum class ShiftMode { GaussianShift, FeatureSplit };

// Synthetic domain-shift task. gaussian_shift draws the source standard
// normal and the target shifted by `shift` (a p-vector, or a single scalar
// magnitude applied along a seeded unit direction, or empty for no shift).
// Labels are k_f sin(<w, x>) / ||w||* plus optional noise, where w is a
// seeded direction and ||.||* the dual norm of `metric`, which makes the
// noiseless labeling exactly k_f-Lipschitz under that metric.
//
// feature_split draws one pool with a latent trend feature correlated with
// every retained feature (correlation = the scalar shift, default 0.5),
// sorts by it, takes the low block as source and the high block as target,
// and withdraws the sort feature.
struct ShiftSpec {
  ShiftMode mode = ShiftMode::GaussianShift;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  std::size_t p = 1;
  std::vector<double> shift;
  double label_lipschitz = 1.0;  // k_f
  double noise_sd = 0.0;
  Metric metric = Metric::L2;
  std::uint64_t seed = 0;
};

std::pair<LabeledPool, LabeledPool> make_shift_dataset(const ShiftSpec& spec);

enum class Task { MAE, Accuracy };

struct EvalResult {
  double score = 0.0;  // MAE in label units, or accuracy fraction
  std::size_t n_eval = 0;
  StrategyKind strategy = StrategyKind::Random;
  std::size_t K = 0;
  std::uint64_t seed = 0;
};

// Trains k-NN on source u queried targets (true target labels for queried
// points only) and scores the non-queried targets; include_queried widens
// the evaluation to all targets. Accuracy rounds labels to integer classes
// and takes the majority vote, ties broken by smaller summed distance then
// smaller class.
EvalResult evaluate(const LabeledPool& source, const LabeledPool& target,
                    const Selection& selection, std::size_t k_neighbors, Metric metric, Task task,
                    bool include_queried = false);

// Knobs shared by the strategy dispatcher and the CLI.
struct StrategyKnobs {
  std::size_t forest_trees = 50;
  std::size_t init_batch = 5000;
  std::size_t bb_batch = 0;  // 0: ceil(sqrt(cluster size))
  std::size_t pam_sweeps = 30;
  std::size_t knn_k = 5;
  std::uint64_t pair_budget = kDefaultPairBudget;
  std::size_t kmeans_minibatch = 0;
  Loss loss;
  std::optional<double> lipschitz;
  std::size_t exact_nn_threshold = 4096;
};

// One entry point for every strategy. source labels are required by pldm
// (pseudo-labeler) and ignored elsewhere; weights are required by wkmeans.
// target_pseudo overrides the k-NN pseudo-labels for pldm. All randomness
// derives from `seed` through per-strategy sub-streams.
Selection run_strategy(StrategyKind kind, const LabeledPool& source, const Matrix& targets,
                       std::size_t K, Metric metric, std::uint64_t seed,
                       const StrategyKnobs& knobs = {},
                       const std::vector<double>* weights = nullptr,
                       const std::vector<double>* target_pseudo = nullptr,
                       PldmDiagnostics* pldm_diag = nullptr);

// Envelopes of the targets against source u queried targets under their
// pseudo-labels, for attaching the envelope criterion to PLDM reports.
// Pseudo-labels come from target_pseudo plus the source labels when given,
// otherwise from the k-NN pseudo-labeler.
Envelopes pldm_report_envelopes(const LabeledPool& source, const Matrix& targets,
                                const Selection& selection, const StrategyKnobs& knobs,
                                Metric metric, double k_used,
                                const std::vector<double>* target_pseudo = nullptr);

// criterion_report with the same source-distance rule as the large-scale
// pipeline: exact scan up to knobs.exact_nn_threshold source rows, KD-forest
// distances (upper bounds) above it. Deterministic for a given seed.
CriterionReport criterion_report_scaled(const Matrix& source, const Matrix& targets,
                                        const Selection& selection, Metric metric,
                                        std::uint64_t seed, const StrategyKnobs& knobs = {},
                                        const Envelopes* envelopes = nullptr,
                                        const Loss* loss = nullptr);

struct ExperimentConfig {
  std::vector<StrategyKind> strategies;
  std::vector<std::size_t> budgets;
  std::vector<std::uint64_t> seeds;
  Metric metric = Metric::L1;
  Task task = Task::MAE;
  std::size_t knn_k = 5;
  bool standard_scale = false;   // fit on source u queried, applied for evaluation
  bool include_queried = false;  // score queried targets too
  StrategyKnobs knobs;
  std::optional<std::vector<double>> weights;  // wkmeans
};

struct CellResult {
  StrategyKind strategy;
  std::size_t K;
  std::uint64_t seed;
  Selection selection;
  CriterionReport criterion;
  EvalResult eval;
  double wall_ms;
};

struct Aggregate {
  StrategyKind strategy;
  std::size_t K;
  double score_mean, score_sd;
  double mean_min_dist_mean, mean_min_dist_sd;
};

struct ExperimentReport {
  std::vector<CellResult> cells;       // deterministic (strategy, K, seed) order
  std::vector<Aggregate> aggregates;   // per (strategy, K), sample sd over seeds
  Metric metric;
  Task task;
};

// Full factorial strategy x budget x seed grid over one source/target pair.
ExperimentReport run_experiment(const LabeledPool& source, const LabeledPool& target,
                                const ExperimentConfig& config);

std::string experiment_report_json(const ExperimentReport& report);
std::string experiment_report_csv(const ExperimentReport& report);

}  // namespace dbal
