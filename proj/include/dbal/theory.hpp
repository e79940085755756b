#pragma once

#include <cstddef>

#include "dbal/strategies.hpp"

namespace dbal {

// Closed forms for the mean and variance of the uniform-norm distance from
// the center of a unit-edge-ratio hypercube to a uniform point in it:
// mu* = p/(p+1), sigma*^2 = p/((p+1)^2 (p+2)).
struct CubeMoments {
  double mu_star;
  double sigma_star_sq;
};
CubeMoments uniform_cube_moments(std::size_t p);

// Scenario for the branch-&-bound rejection bound: cluster of n_c uniform
// points in dimension p, batches of n, approximation factor eps.
struct BbScenario {
  std::size_t cluster_size;  // n_c
  std::size_t dim;           // p
  std::size_t batch;         // n
  double eps;
};

// delta = exp(-((sqrt(A^2+4B)-A)/2)^2) with A = 1.5 sqrt(2n) sigma*,
// B = 1.5 n (4 sigma*/sqrt(n) + 0.75 eps mu*); gamma the analogue with
// C = 3 sqrt(2n) sigma*, D = 0.75 n eps mu*. The rejection bound
// 1 - (1-delta)^{n_c} + gamma can exceed 1; it is then clipped and flagged.
struct BbRejectionBound {
  double delta;
  double gamma;
  double reject_prob;
  bool clipped;
};
BbRejectionBound bb_rejection_bound(const BbScenario& s);

// M sqrt(log(1/delta) / (2n)), the confidence term of the generalization
// bounds.
double confidence_term(double M, double delta, std::size_t n);

// User-supplied constants of the bound statements; nothing estimates them.
struct BoundInputs {
  double epsilon = 0.0;  // error level of the localized class
  double k = 1.0;        // hypothesis Lipschitz constant
  double mu = 1.0;       // loss Lipschitz constant
  double nu = 1.0;       // loss separation, must satisfy 0 < nu <= mu
  double M = 1.0;        // loss bound
  double delta = 0.05;   // confidence level
  std::size_t n = 1;     // unlabeled sample size
};
void validate(const BoundInputs& b);

// Full right-hand sides assembled from a measured criterion and a
// caller-supplied Rademacher average. Presentation only, never asserted
// against data.
double mean_dist_bound(const BoundInputs& b, double mean_min_dist, double rademacher);
double envelope_bound(const BoundInputs& b, double envelope_gap_mean, double rademacher);

// Checks envelope_gap_mean <= 2 k mu mean_min_dist within relative tolerance
// 1e-9. margin is the right side minus the left.
struct BoundDominance {
  bool holds;
  double margin;
};
BoundDominance check_bound_dominance(const CriterionReport& report, double k, double mu);

}  // namespace dbal
