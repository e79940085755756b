#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dbal/types.hpp"

namespace dbal {

// All three satisfy symmetry and the triangle inequality.
enum class Metric { L1, L2, Linf };

Metric metric_from_string(std::string_view s);
std::string to_string(Metric m);

namespace detail {

template <Metric M>
inline double distance_impl(const double* a, const double* b, std::size_t p) {
  if constexpr (M == Metric::L1) {
    double s = 0.0;
    for (std::size_t i = 0; i < p; ++i) s += std::abs(a[i] - b[i]);
    return s;
  } else if constexpr (M == Metric::L2) {
    double s = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return std::sqrt(s);
  } else {
    double s = 0.0;
    for (std::size_t i = 0; i < p; ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
  }
}

}  // namespace detail

inline double pairwise_distance(const double* a, const double* b, std::size_t p, Metric metric) {
  switch (metric) {
    case Metric::L1: return detail::distance_impl<Metric::L1>(a, b, p);
    case Metric::L2: return detail::distance_impl<Metric::L2>(a, b, p);
    case Metric::Linf: return detail::distance_impl<Metric::Linf>(a, b, p);
  }
  throw std::logic_error("pairwise_distance: unreachable");
}

inline double pairwise_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size())
    throw std::invalid_argument("pairwise_distance: dimension mismatch");
  if (a.empty()) throw std::invalid_argument("pairwise_distance: dimension must be >= 1");
  return pairwise_distance(a.data(), b.data(), a.size(), metric);
}

struct NearestPoint {
  double distance;
  std::size_t index;
};

// Minimum distance from x to any row of `set`; ties go to the smallest row index.
NearestPoint dist_to_set(std::span<const double> x, const Matrix& set, Metric metric);

}  // namespace dbal
