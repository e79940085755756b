#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "dbal/metric.hpp"
#include "dbal/types.hpp"

namespace dbal {

enum class LossKind { L1, L2 };

// Loss between two labels plus the theory-side parameters attached to it:
// mu is its Lipschitz constant, nu the separation min L(y,y')/|y-y'|. Both
// are user inputs, nothing here estimates them.
struct Loss {
  LossKind kind = LossKind::L1;
  double mu = 1.0;
  double nu = 1.0;
};

inline double loss_eval(double y, double y2, const Loss& loss) {
  const double d = y - y2;
  return loss.kind == LossKind::L1 ? std::abs(d) : d * d;
}

LossKind loss_from_string(std::string_view s);

// Raised when two coincident points carry different values, which would make
// the Lipschitz constant infinite.
struct InconsistentDuplicates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mean label of the k nearest training rows; ties by smaller distance, then
// smaller index.
double knn_predict(const LabeledPool& train, std::span<const double> x, std::size_t k_neighbors,
                   Metric metric);

// Max slope |v_i - v_j| / d(x_i, x_j). All pairs when n(n-1)/2 fits in
// pair_budget, otherwise a seeded uniform sample of pair_budget pairs.
// Coincident pairs with equal values are skipped.
double estimate_lipschitz(const Matrix& points, std::span<const double> values, Metric metric,
                          std::uint64_t pair_budget, std::uint64_t seed);

constexpr std::uint64_t kDefaultPairBudget = 2'000'000;

// Per-target Lipschitz envelope values against a labeled pool:
// upper[i] = min over labeled of (label + k d), lower[i] = max of (label - k d).
// On any labeled point both equal its label; upper >= lower holds whenever k
// dominates the empirical Lipschitz constant of the labels.
struct Envelopes {
  std::vector<double> upper;
  std::vector<double> lower;
  double k = 0.0;
};

Envelopes compute_envelopes(const Matrix& targets, const LabeledPool& labeled, double k,
                            Metric metric);

struct PldmOptions {
  Loss loss;
  Metric metric = Metric::L1;
  std::optional<double> lipschitz;  // estimated from the pools when absent
  std::uint64_t pair_budget = kDefaultPairBudget;
  std::uint64_t seed = 0;
};

struct PldmDiagnostics {
  double k_used = 0.0;
  double k_empirical = 0.0;
  bool k_below_empirical = false;  // caller-supplied k under the estimate; envelopes may cross
};

// Greedy selection minimizing the mean envelope-gap loss over the targets.
// Each step scores every candidate x' by sum_x of the four-way minimum
//   min(L(up_x, lo_x), L(up_x, lo_xx'), L(up_xx', lo_x), L(up_xx', lo_xx'))
// with up/lo_xx' the single-point envelopes pseudo(x') +- k d(x, x'), picks
// the argmin (smallest index on ties) and folds it into the envelopes.
// criterion_trace[i] is the mean gap loss after query i; it is non-increasing.
Selection pldm_select(const LabeledPool& source_pseudo, const Matrix& targets,
                      std::span<const double> target_pseudo, std::size_t K,
                      const PldmOptions& options, PldmDiagnostics* diagnostics = nullptr);

}  // namespace dbal
