#include "dbal/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace dbal {

CubeMoments uniform_cube_moments(std::size_t p) {
  if (p == 0) throw std::invalid_argument("uniform_cube_moments: p must be >= 1");
  const double pd = static_cast<double>(p);
  return {pd / (pd + 1.0), pd / ((pd + 1.0) * (pd + 1.0) * (pd + 2.0))};
}

BbRejectionBound bb_rejection_bound(const BbScenario& s) {
  if (s.dim == 0 || s.batch == 0 || s.cluster_size < s.batch || s.eps <= 0.0)
    throw std::invalid_argument("bb_rejection_bound: invalid scenario");

  const CubeMoments m = uniform_cube_moments(s.dim);
  const double sigma = std::sqrt(m.sigma_star_sq);
  const double n = static_cast<double>(s.batch);

  const double A = 1.5 * std::sqrt(2.0 * n) * sigma;
  const double B = 1.5 * n * (4.0 * sigma / std::sqrt(n) + 0.75 * s.eps * m.mu_star);
  const double delta = std::exp(-std::pow((std::sqrt(A * A + 4.0 * B) - A) / 2.0, 2.0));

  const double C = 3.0 * std::sqrt(2.0 * n) * sigma;
  const double D = 0.75 * n * s.eps * m.mu_star;
  const double gamma = std::exp(-std::pow((std::sqrt(C * C + 4.0 * D) - C) / 2.0, 2.0));

  const double any_reject = -std::expm1(static_cast<double>(s.cluster_size) * std::log1p(-delta));
  const double raw = any_reject + gamma;

  BbRejectionBound out{delta, gamma, raw, false};
  if (raw > 1.0) {
    out.reject_prob = 1.0;
    out.clipped = true;
  }
  return out;
}

double confidence_term(double M, double delta, std::size_t n) {
  if (!(delta > 0.0) || delta > 1.0)
    throw std::invalid_argument("confidence_term: delta must be in (0, 1]");
  if (n == 0) throw std::invalid_argument("confidence_term: n must be >= 1");
  if (M < 0.0) throw std::invalid_argument("confidence_term: M must be >= 0");
  return M * std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

void validate(const BoundInputs& b) {
  if (b.epsilon < 0.0) throw std::invalid_argument("BoundInputs: epsilon must be >= 0");
  if (!(b.nu > 0.0)) throw std::invalid_argument("BoundInputs: nu must be > 0");
  if (b.nu > b.mu) throw std::invalid_argument("BoundInputs: nu must not exceed mu");
  if (!(b.delta > 0.0) || b.delta > 1.0)
    throw std::invalid_argument("BoundInputs: delta must be in (0, 1]");
  if (b.n == 0) throw std::invalid_argument("BoundInputs: n must be >= 1");
  if (b.M < 0.0) throw std::invalid_argument("BoundInputs: M must be >= 0");
}

double mean_dist_bound(const BoundInputs& b, double mean_min_dist, double rademacher) {
  validate(b);
  return 3.0 * b.epsilon + 2.0 * b.k * b.mu * mean_min_dist + 2.0 * b.mu * rademacher +
         confidence_term(b.M, b.delta, b.n);
}

double envelope_bound(const BoundInputs& b, double envelope_gap_mean, double rademacher) {
  validate(b);
  return (1.0 + 2.0 * b.mu / b.nu) * b.epsilon + envelope_gap_mean + 2.0 * b.mu * rademacher +
         confidence_term(b.M, b.delta, b.n);
}

BoundDominance check_bound_dominance(const CriterionReport& report, double k, double mu) {
  if (!report.envelope_gap_mean)
    throw std::invalid_argument("check_bound_dominance: report carries no envelope term");
  const double lhs = *report.envelope_gap_mean;
  const double rhs = 2.0 * k * mu * report.mean_min_dist;
  const double tol = 1e-9 * std::max(std::abs(lhs), std::abs(rhs));
  return {lhs <= rhs + tol, rhs - lhs};
}

}  // namespace dbal
