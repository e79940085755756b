#include <doctest.h>

#include <cmath>

#include "dbal/pldm.hpp"
#include "support.hpp"

using namespace dbal;

namespace {

LabeledPool pool_1d(std::initializer_list<double> xs, std::initializer_list<double> ys) {
  LabeledPool pool;
  pool.points = testsupport::column(xs);
  pool.labels = ys;
  return pool;
}

// Post-query criterion recomputed from scratch for one candidate.
double recomputed_criterion(const LabeledPool& source, const Matrix& targets,
                            std::span<const double> pseudo, std::size_t candidate, double k,
                            Metric metric, const Loss& loss) {
  LabeledPool grown = source;
  grown.points.append_row(targets.row_span(candidate));
  grown.labels.push_back(pseudo[candidate]);
  const Envelopes env = compute_envelopes(targets, grown, k, metric);
  double total = 0.0;
  for (std::size_t i = 0; i < targets.rows(); ++i)
    total += loss_eval(env.upper[i], env.lower[i], loss);
  return total / static_cast<double>(targets.rows());
}

}  // namespace

TEST_CASE("loss_eval") {
  CHECK(loss_eval(3, 1, {LossKind::L1, 1, 1}) == 2.0);
  CHECK(loss_eval(3, 1, {LossKind::L2, 1, 1}) == 4.0);
  CHECK(loss_eval(-2.5, -2.5, {LossKind::L1, 1, 1}) == 0.0);
  CHECK(loss_eval(1, 3, {LossKind::L1, 1, 1}) == 2.0);  // symmetric
}

TEST_CASE("knn_predict on the two-point pool") {
  const LabeledPool train = pool_1d({0, 10}, {0, 1});
  const double x = 2.0;
  CHECK(knn_predict(train, std::span<const double>(&x, 1), 1, Metric::L1) == 0.0);
  CHECK(knn_predict(train, std::span<const double>(&x, 1), 2, Metric::L1) == 0.5);
  CHECK(knn_predict(train, train.points.row_span(1), 1, Metric::L1) == 1.0);
  CHECK_THROWS_AS(knn_predict(LabeledPool{}, std::span<const double>(&x, 1), 1, Metric::L1),
                  std::invalid_argument);
  CHECK_THROWS_AS(knn_predict(train, std::span<const double>(&x, 1), 3, Metric::L1),
                  std::invalid_argument);
}

TEST_CASE("estimate_lipschitz worked example and edge cases") {
  const Matrix pts = testsupport::column({0, 1, 3});
  const std::vector<double> vals{0, 2, 3};
  CHECK(estimate_lipschitz(pts, vals, Metric::L1, 100, 0) == 2.0);

  const std::vector<double> constant{5, 5, 5};
  CHECK(estimate_lipschitz(pts, constant, Metric::L1, 100, 0) == 0.0);

  const Matrix dup = testsupport::column({1, 1});
  const std::vector<double> differing{0, 1};
  CHECK_THROWS_AS(estimate_lipschitz(dup, differing, Metric::L1, 100, 0), InconsistentDuplicates);
  const std::vector<double> same{2, 2};
  CHECK(estimate_lipschitz(dup, same, Metric::L1, 100, 0) == 0.0);

  CHECK_THROWS_AS(estimate_lipschitz(testsupport::column({1}), std::vector<double>{1.0},
                                     Metric::L1, 100, 0),
                  std::invalid_argument);
}

TEST_CASE("estimate_lipschitz with all pairs is permutation invariant") {
  Rng rng(41, "lip-perm");
  const Matrix pts = testsupport::random_uniform(rng, 15, 3);
  std::vector<double> vals(15);
  for (double& v : vals) v = rng.next_double();

  const double base = estimate_lipschitz(pts, vals, Metric::L2, 1'000'000, 0);
  std::vector<std::size_t> perm(15);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle_vec(perm, rng);
  const Matrix shuffled = pts.gather_rows(perm);
  std::vector<double> shuffled_vals(15);
  for (std::size_t i = 0; i < 15; ++i) shuffled_vals[i] = vals[perm[i]];
  CHECK(estimate_lipschitz(shuffled, shuffled_vals, Metric::L2, 1'000'000, 7) == base);
}

TEST_CASE("estimate_lipschitz sampled mode lower-bounds the full scan") {
  Rng rng(42, "lip-sample");
  const Matrix pts = testsupport::random_uniform(rng, 80, 2);
  std::vector<double> vals(80);
  for (double& v : vals) v = rng.next_double() * 3.0;
  const double full = estimate_lipschitz(pts, vals, Metric::L1, 1'000'000, 0);
  const double sampled = estimate_lipschitz(pts, vals, Metric::L1, 500, 3);
  CHECK(sampled <= full);
  CHECK(sampled > 0.0);
}

TEST_CASE("compute_envelopes on the worked example") {
  const LabeledPool labeled = pool_1d({0, 4}, {0, 2});
  const Matrix target = testsupport::column({1});
  const Envelopes env = compute_envelopes(target, labeled, 1.0, Metric::L1);
  CHECK(env.upper[0] == 1.0);   // min(0 + 1, 2 + 3)
  CHECK(env.lower[0] == -1.0);  // max(0 - 1, 2 - 3)
}

TEST_CASE("envelopes pin labeled points exactly") {
  const LabeledPool labeled = pool_1d({0, 4}, {0, 2});
  const Envelopes env = compute_envelopes(labeled.points, labeled, 1.0, Metric::L1);
  CHECK(env.upper[0] == 0.0);
  CHECK(env.lower[0] == 0.0);
  CHECK(env.upper[1] == 2.0);
  CHECK(env.lower[1] == 2.0);
}

TEST_CASE("k = 0 collapses the envelopes to the label extremes") {
  const LabeledPool labeled = pool_1d({0, 4}, {0, 2});
  const Matrix target = testsupport::column({1});
  const Envelopes env = compute_envelopes(target, labeled, 0.0, Metric::L1);
  CHECK(env.upper[0] == 0.0);  // min label
  CHECK(env.lower[0] == 2.0);  // max label: gap negative when labels differ

  const LabeledPool single = pool_1d({0}, {3});
  const Envelopes env1 = compute_envelopes(target, single, 0.0, Metric::L1);
  CHECK(env1.upper[0] == env1.lower[0]);
}

TEST_CASE("compute_envelopes validation") {
  const Matrix target = testsupport::column({1});
  CHECK_THROWS_AS(compute_envelopes(target, LabeledPool{}, 1.0, Metric::L1),
                  std::invalid_argument);
  const LabeledPool labeled = pool_1d({0}, {0});
  CHECK_THROWS_AS(compute_envelopes(target, labeled, -1.0, Metric::L1), std::invalid_argument);
}

TEST_CASE("envelope sandwich for Lipschitz ground truth") {
  Rng rng(43, "sandwich");
  for (Metric metric : {Metric::L1, Metric::L2, Metric::Linf}) {
    for (int inst = 0; inst < 10; ++inst) {
      const std::size_t p = 1 + rng.below(3);
      const double k_f = 0.5 + rng.next_double();
      // f(x) = k_f sin(sum x_j / p): |f(x)-f(y)| <= k_f/p sum|x_j-y_j| <= k_f d(x,y)
      auto f = [&](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v;
        return k_f * std::sin(s / static_cast<double>(p));
      };
      const Matrix labeled_pts = testsupport::random_uniform(rng, 12, p, -2.0, 2.0);
      LabeledPool labeled;
      labeled.points = labeled_pts;
      for (std::size_t i = 0; i < labeled_pts.rows(); ++i)
        labeled.labels.push_back(f(labeled_pts.row_span(i)));
      const Matrix targets = testsupport::random_uniform(rng, 40, p, -2.0, 2.0);

      const Envelopes env = compute_envelopes(targets, labeled, k_f, metric);
      for (std::size_t i = 0; i < targets.rows(); ++i) {
        const double truth = f(targets.row_span(i));
        CHECK(env.lower[i] <= truth + 1e-12);
        CHECK(env.upper[i] >= truth - 1e-12);
      }
    }
  }
}

TEST_CASE("pointwise envelope gap is bounded by twice k times the set distance") {
  Rng rng(44, "gap-bound");
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t p = 1 + rng.below(2);
    const Matrix pts = testsupport::random_uniform(rng, 10, p);
    LabeledPool labeled;
    labeled.points = pts;
    for (std::size_t i = 0; i < pts.rows(); ++i) labeled.labels.push_back(rng.next_double());
    const double k =
        estimate_lipschitz(labeled.points, labeled.labels, Metric::L1, 1'000'000, 0);
    const Matrix targets = testsupport::random_uniform(rng, 30, p);
    const Envelopes env = compute_envelopes(targets, labeled, k, Metric::L1);
    for (std::size_t i = 0; i < targets.rows(); ++i) {
      const double d = dist_to_set(targets.row_span(i), labeled.points, Metric::L1).distance;
      CHECK(env.upper[i] - env.lower[i] <= 2.0 * k * d + 1e-12);
      CHECK(env.upper[i] - env.lower[i] >= -1e-12);
    }
  }
}

TEST_CASE("pldm_select hand-enumerated two-target example") {
  const LabeledPool source = pool_1d({0}, {0});
  const Matrix targets = testsupport::column({1, 2});
  const std::vector<double> pseudo{1, 2};
  PldmOptions options;
  options.lipschitz = 1.0;
  const Selection sel = pldm_select(source, targets, pseudo, 1, options);
  CHECK(sel.indices == std::vector<std::size_t>{1});
  CHECK(sel.criterion_trace == std::vector<double>{0.0});
}

TEST_CASE("pldm_select with K = 0") {
  const LabeledPool source = pool_1d({0}, {0});
  const Matrix targets = testsupport::column({1, 2});
  const std::vector<double> pseudo{1, 2};
  const Selection sel = pldm_select(source, targets, pseudo, 0, PldmOptions{});
  CHECK(sel.indices.empty());
  CHECK(sel.criterion_trace.empty());
}

TEST_CASE("pldm first pick matches the exhaustive post-query oracle") {
  Rng rng(45, "pldm-oracle");
  for (int inst = 0; inst < 25; ++inst) {
    const std::size_t n = 6 + rng.below(7);
    const Matrix targets = testsupport::random_uniform(rng, n, 1, -3.0, 3.0);
    LabeledPool source;
    source.points = testsupport::random_uniform(rng, 4, 1, -3.0, 3.0);
    for (std::size_t i = 0; i < 4; ++i) source.labels.push_back(rng.next_double());
    std::vector<double> pseudo(n);
    for (double& v : pseudo) v = rng.next_double();

    PldmOptions options;
    options.loss = Loss{LossKind::L1, 1, 1};
    PldmDiagnostics diag;
    const Selection sel = pldm_select(source, targets, pseudo, 1, options, &diag);

    std::size_t best = n;
    double best_value = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double v = recomputed_criterion(source, targets, pseudo, c, diag.k_used, Metric::L1,
                                            options.loss);
      if (best == n || v < best_value) {
        best = c;
        best_value = v;
      }
    }
    CHECK(sel.indices[0] == best);
    CHECK(sel.criterion_trace[0] == doctest::Approx(best_value).epsilon(1e-12));
  }
}

TEST_CASE("pldm criterion trace is non-increasing and pins queried points") {
  Rng rng(46, "pldm-trace");
  const std::size_t n = 20;
  const Matrix targets = testsupport::random_uniform(rng, n, 2);
  LabeledPool source;
  source.points = testsupport::random_uniform(rng, 5, 2);
  for (std::size_t i = 0; i < 5; ++i) source.labels.push_back(rng.next_double());
  std::vector<double> pseudo(n);
  for (double& v : pseudo) v = rng.next_double();

  PldmDiagnostics diag;
  const Selection sel = pldm_select(source, targets, pseudo, 6, PldmOptions{}, &diag);
  REQUIRE(sel.criterion_trace.size() == 6);
  for (std::size_t i = 1; i < 6; ++i)
    CHECK(sel.criterion_trace[i] <= sel.criterion_trace[i - 1] + 1e-12);

  // rebuilding the envelopes over source u selection pins every queried point
  LabeledPool grown = source;
  for (std::size_t i : sel.indices) {
    grown.points.append_row(targets.row_span(i));
    grown.labels.push_back(pseudo[i]);
  }
  const Envelopes env = compute_envelopes(targets, grown, diag.k_used, Metric::L1);
  for (std::size_t i : sel.indices) {
    CHECK(env.upper[i] == doctest::Approx(pseudo[i]).epsilon(1e-12));
    CHECK(env.lower[i] == doctest::Approx(pseudo[i]).epsilon(1e-12));
  }
}

TEST_CASE("pldm flags a supplied k below the empirical constant") {
  const LabeledPool source = pool_1d({0, 1}, {0, 5});
  const Matrix targets = testsupport::column({2, 3});
  const std::vector<double> pseudo{0.5, 0.25};
  PldmOptions options;
  options.lipschitz = 0.01;
  PldmDiagnostics diag;
  pldm_select(source, targets, pseudo, 1, options, &diag);
  CHECK(diag.k_below_empirical);
  CHECK(diag.k_used == 0.01);
  CHECK(diag.k_empirical >= 5.0);
}

TEST_CASE("pldm validation") {
  const LabeledPool source = pool_1d({0}, {0});
  const Matrix targets = testsupport::column({1, 2});
  const std::vector<double> bad_pseudo{1};
  CHECK_THROWS_AS(pldm_select(source, targets, bad_pseudo, 1, PldmOptions{}),
                  std::invalid_argument);
  const std::vector<double> pseudo{1, 2};
  CHECK_THROWS_AS(pldm_select(source, targets, pseudo, 3, PldmOptions{}), std::invalid_argument);
  CHECK_THROWS_AS(pldm_select(LabeledPool{}, targets, pseudo, 1, PldmOptions{}),
                  std::invalid_argument);
}
