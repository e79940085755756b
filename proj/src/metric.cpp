#include "dbal/metric.hpp"

namespace dbal {

Metric metric_from_string(std::string_view s) {
  if (s == "l1") return Metric::L1;
  if (s == "l2") return Metric::L2;
  if (s == "linf") return Metric::Linf;
  throw std::invalid_argument("unknown metric '" + std::string(s) + "' (expected l1, l2 or linf)");
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::L1: return "l1";
    case Metric::L2: return "l2";
    case Metric::Linf: return "linf";
  }
  return "?";
}

NearestPoint dist_to_set(std::span<const double> x, const Matrix& set, Metric metric) {
  if (set.empty()) throw std::invalid_argument("dist_to_set: empty set");
  if (x.size() != set.cols()) throw std::invalid_argument("dist_to_set: dimension mismatch");
  NearestPoint best{pairwise_distance(x.data(), set.row(0), x.size(), metric), 0};
  for (std::size_t i = 1; i < set.rows(); ++i) {
    const double d = pairwise_distance(x.data(), set.row(i), x.size(), metric);
    if (d < best.distance) best = {d, i};
  }
  return best;
}

}  // namespace dbal
