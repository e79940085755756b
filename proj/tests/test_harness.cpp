#include <doctest.h>

#include <cmath>

#include "dbal/harness.hpp"
#include "support.hpp"

using namespace dbal;

namespace {

LabeledPool pool_1d(std::initializer_list<double> xs, std::initializer_list<double> ys) {
  LabeledPool pool;
  pool.points = testsupport::column(xs);
  pool.labels = ys;
  return pool;
}

}  // namespace

TEST_CASE("make_shift_dataset is deterministic per spec") {
  ShiftSpec spec;
  spec.n_source = 50;
  spec.n_target = 40;
  spec.p = 3;
  spec.shift = {1.0};
  spec.seed = 42;
  const auto [s1, t1] = make_shift_dataset(spec);
  const auto [s2, t2] = make_shift_dataset(spec);
  CHECK(s1.points.data() == s2.points.data());
  CHECK(t1.labels == t2.labels);
  CHECK(s1.size() == 50);
  CHECK(t1.size() == 40);
}

TEST_CASE("zero shift keeps the domains aligned") {
  ShiftSpec spec;
  spec.n_source = 4000;
  spec.n_target = 4000;
  spec.p = 4;
  spec.seed = 7;
  const auto [source, target] = make_shift_dataset(spec);
  const double bound = 3.0 / std::sqrt(4000.0);
  for (std::size_t j = 0; j < spec.p; ++j) {
    double ms = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < 4000; ++i) {
      ms += source.points.at(i, j);
      mt += target.points.at(i, j);
    }
    CHECK(std::abs(ms / 4000.0 - mt / 4000.0) < bound);
  }
}

TEST_CASE("scalar shift moves the target mean by the requested magnitude") {
  ShiftSpec spec;
  spec.n_source = 3000;
  spec.n_target = 3000;
  spec.p = 5;
  spec.shift = {2.5};
  spec.seed = 3;
  const auto [source, target] = make_shift_dataset(spec);
  double sq = 0.0;
  for (std::size_t j = 0; j < spec.p; ++j) {
    double ms = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < 3000; ++i) {
      ms += source.points.at(i, j);
      mt += target.points.at(i, j);
    }
    const double diff = mt / 3000.0 - ms / 3000.0;
    sq += diff * diff;
  }
  CHECK(std::sqrt(sq) == doctest::Approx(2.5).epsilon(0.05));
}

TEST_CASE("noiseless labels respect the requested Lipschitz constant") {
  for (Metric metric : {Metric::L1, Metric::L2, Metric::Linf}) {
    ShiftSpec spec;
    spec.n_source = 60;
    spec.n_target = 60;
    spec.p = 3;
    spec.shift = {1.0};
    spec.label_lipschitz = 1.7;
    spec.noise_sd = 0.0;
    spec.metric = metric;
    spec.seed = 11;
    const auto [source, target] = make_shift_dataset(spec);

    Matrix combined = source.points;
    std::vector<double> values = source.labels;
    for (std::size_t i = 0; i < target.size(); ++i) {
      combined.append_row(target.points.row_span(i));
      values.push_back(target.labels[i]);
    }
    const double k = estimate_lipschitz(combined, values, metric, 1'000'000, 0);
    CHECK(k <= spec.label_lipschitz + 1e-9);
    CHECK(k > 0.0);
  }
}

TEST_CASE("feature_split mode produces the requested sizes and a real shift") {
  ShiftSpec spec;
  spec.mode = ShiftMode::FeatureSplit;
  spec.n_source = 500;
  spec.n_target = 500;
  spec.p = 4;
  spec.shift = {0.8};
  spec.seed = 13;
  const auto [source, target] = make_shift_dataset(spec);
  CHECK(source.size() == 500);
  CHECK(target.size() == 500);
  CHECK(source.points.cols() == 4);  // latent sort feature withdrawn

  double ms = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < 500; ++i) {
    ms += source.points.at(i, 0);
    mt += target.points.at(i, 0);
  }
  CHECK(mt / 500.0 - ms / 500.0 > 0.5);  // high-latent block sits above the low one
}

TEST_CASE("make_shift_dataset validation") {
  ShiftSpec spec;
  spec.n_source = 0;
  spec.n_target = 5;
  CHECK_THROWS_AS(make_shift_dataset(spec), std::invalid_argument);
  spec.n_source = 5;
  spec.p = 0;
  CHECK_THROWS_AS(make_shift_dataset(spec), std::invalid_argument);
  spec.p = 2;
  spec.shift = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(make_shift_dataset(spec), std::invalid_argument);
}

TEST_CASE("evaluate on the worked fixture") {
  const LabeledPool source = pool_1d({0, 10}, {0, 10});
  const LabeledPool target = pool_1d({1, 9}, {1, 9});

  const EvalResult none = evaluate(source, target, Selection{}, 1, Metric::L1, Task::MAE);
  CHECK(none.score == 1.0);  // predictions 0 and 10
  CHECK(none.n_eval == 2);

  Selection first;
  first.indices = {0};
  const EvalResult one = evaluate(source, target, first, 1, Metric::L1, Task::MAE);
  CHECK(one.score == 1.0);  // only the point at 9 is scored
  CHECK(one.n_eval == 1);
  CHECK(one.K == 1);
}

TEST_CASE("evaluate reaches zero error when queries pin all neighbourhoods") {
  const LabeledPool source = pool_1d({100}, {0});
  const LabeledPool target = pool_1d({0, 0.1, 10, 10.1}, {5, 5, 7, 7});
  Selection sel;
  sel.indices = {0, 2};
  const EvalResult r = evaluate(source, target, sel, 1, Metric::L1, Task::MAE);
  CHECK(r.score == 0.0);
  CHECK(r.n_eval == 2);
}

TEST_CASE("accuracy task with majority vote") {
  const LabeledPool source = pool_1d({0, 0.2, 10, 10.2}, {1, 1, 2, 2});
  const LabeledPool target = pool_1d({0.1, 9.9, 5.2}, {1, 2, 2});
  const EvalResult r = evaluate(source, target, Selection{}, 3, Metric::L1, Task::Accuracy);
  // 0.1 -> class 1, 9.9 -> class 2, 5.2 -> nearest three are {10, 10.2, 0.2}: class 2
  CHECK(r.score == 1.0);
}

TEST_CASE("include_queried widens the evaluation set") {
  const LabeledPool source = pool_1d({0, 10}, {0, 10});
  const LabeledPool target = pool_1d({1, 9}, {1, 9});
  Selection sel;
  sel.indices = {0, 1};
  CHECK_THROWS_AS(evaluate(source, target, sel, 1, Metric::L1, Task::MAE), std::invalid_argument);
  const EvalResult r = evaluate(source, target, sel, 1, Metric::L1, Task::MAE, true);
  CHECK(r.n_eval == 2);
  CHECK(r.score == 0.0);  // queried points predict themselves
}

TEST_CASE("run_strategy rejects wkmeans without weights") {
  const LabeledPool source = pool_1d({0}, {0});
  const Matrix targets = testsupport::column({1, 2, 3});
  CHECK_THROWS_AS(
      run_strategy(StrategyKind::WeightedKMeans, source, targets, 1, Metric::L1, 0),
      std::invalid_argument);
}

TEST_CASE("run_experiment single cell and deterministic strategies") {
  ShiftSpec spec;
  spec.n_source = 40;
  spec.n_target = 50;
  spec.p = 2;
  spec.shift = {1.0};
  spec.seed = 5;
  const auto [source, target] = make_shift_dataset(spec);

  SUBCASE("one cell per grid point") {
    ExperimentConfig config;
    config.strategies = {StrategyKind::Random};
    config.budgets = {4};
    config.seeds = {9};
    config.knobs.knn_k = 3;
    const ExperimentReport report = run_experiment(source, target, config);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.cells[0].selection.indices.size() == 4);
    REQUIRE(report.aggregates.size() == 1);
    CHECK(report.aggregates[0].score_sd == 0.0);
  }

  SUBCASE("kcenter ignores the seed, so the deviation over seeds is zero") {
    ExperimentConfig config;
    config.strategies = {StrategyKind::KCenter};
    config.budgets = {3};
    config.seeds = {1, 2, 3};
    config.knobs.knn_k = 3;
    const ExperimentReport report = run_experiment(source, target, config);
    REQUIRE(report.cells.size() == 3);
    CHECK(report.cells[0].selection.indices == report.cells[1].selection.indices);
    CHECK(report.cells[1].selection.indices == report.cells[2].selection.indices);
    CHECK(report.aggregates[0].score_sd == 0.0);
    CHECK(report.aggregates[0].mean_min_dist_sd == 0.0);
  }

  SUBCASE("pldm cells carry the envelope criterion") {
    ExperimentConfig config;
    config.strategies = {StrategyKind::PLDM};
    config.budgets = {2};
    config.seeds = {4};
    config.knobs.knn_k = 3;
    const ExperimentReport report = run_experiment(source, target, config);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.cells[0].criterion.envelope_gap_mean.has_value());
  }

  SUBCASE("standard scaling path stays consistent") {
    ExperimentConfig config;
    config.strategies = {StrategyKind::KMedoidsGreedy};
    config.budgets = {3};
    config.seeds = {1};
    config.knobs.knn_k = 3;
    config.standard_scale = true;
    const ExperimentReport report = run_experiment(source, target, config);
    CHECK(report.cells[0].eval.n_eval == 47);
  }
}

TEST_CASE("greedy k-medoids criterion is monotone in the budget") {
  ShiftSpec spec;
  spec.n_source = 50;
  spec.n_target = 80;
  spec.p = 3;
  spec.shift = {1.5};
  spec.seed = 21;
  const auto [source, target] = make_shift_dataset(spec);

  ExperimentConfig config;
  config.strategies = {StrategyKind::KMedoidsGreedy};
  config.budgets = {2, 5, 9, 14};
  config.seeds = {0};
  config.knobs.knn_k = 3;
  const ExperimentReport report = run_experiment(source, target, config);
  REQUIRE(report.cells.size() == 4);
  for (std::size_t i = 1; i < report.cells.size(); ++i)
    CHECK(report.cells[i].criterion.mean_min_dist <=
          report.cells[i - 1].criterion.mean_min_dist + 1e-12);
}

TEST_CASE("weighted k-means runs through the experiment grid") {
  ShiftSpec spec;
  spec.n_source = 30;
  spec.n_target = 40;
  spec.p = 2;
  spec.seed = 31;
  const auto [source, target] = make_shift_dataset(spec);

  ExperimentConfig config;
  config.strategies = {StrategyKind::WeightedKMeans};
  config.budgets = {3};
  config.seeds = {5};
  config.knobs.knn_k = 3;
  std::vector<double> weights(40, 1.0);
  weights[7] = 6.0;
  config.weights = weights;
  const ExperimentReport report = run_experiment(source, target, config);
  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].selection.indices.size() == 3);
}

TEST_CASE("scaled criterion report upper-bounds the exact one on large sources") {
  Rng rng(71, "scaled-report");
  const Matrix source = testsupport::random_uniform(rng, 50, 3);
  const Matrix targets = testsupport::random_uniform(rng, 40, 3);
  Selection sel;
  sel.indices = {1, 7, 20};

  const CriterionReport exact = criterion_report(source, targets, sel, Metric::L1);
  StrategyKnobs knobs;
  knobs.exact_nn_threshold = 50;
  CHECK(criterion_report_scaled(source, targets, sel, Metric::L1, 3, knobs).mean_min_dist ==
        exact.mean_min_dist);

  knobs.exact_nn_threshold = 4;  // force the forest path
  knobs.forest_trees = 10;
  const CriterionReport approx =
      criterion_report_scaled(source, targets, sel, Metric::L1, 3, knobs);
  CHECK(approx.mean_min_dist >= exact.mean_min_dist - 1e-12);
  CHECK(approx.max_min_dist >= exact.max_min_dist - 1e-12);
  const CriterionReport again =
      criterion_report_scaled(source, targets, sel, Metric::L1, 3, knobs);
  CHECK(approx.mean_min_dist == again.mean_min_dist);
}

TEST_CASE("experiment report serializations") {
  ShiftSpec spec;
  spec.n_source = 30;
  spec.n_target = 30;
  spec.p = 2;
  spec.seed = 8;
  const auto [source, target] = make_shift_dataset(spec);

  ExperimentConfig config;
  config.strategies = {StrategyKind::Random, StrategyKind::KCenter};
  config.budgets = {2};
  config.seeds = {1, 2};
  config.knobs.knn_k = 3;
  const ExperimentReport report = run_experiment(source, target, config);

  const std::string json = experiment_report_json(report);
  CHECK(json.find("\"cells\"") != std::string::npos);
  CHECK(json.find("\"aggregates\"") != std::string::npos);
  CHECK(json.find("\"kcenter\"") != std::string::npos);

  const std::string csv = experiment_report_csv(report);
  CHECK(csv.rfind("strategy,K,seed,score,mean_min_dist,max_min_dist,envelope_gap,wall_ms\n", 0) ==
        0);
  // header plus one row per cell
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4);
}
