#pragma once

#include <span>
#include <vector>

#include "dbal/types.hpp"

namespace dbal {

// Sorts rows ascending by one feature (stable, ties keep original order),
// cuts them into `parts` contiguous blocks whose sizes differ by at most one
// (earlier blocks take the extra row), and removes the sorting feature from
// every output. Labels, when given, are permuted consistently; pass an empty
// span for unlabeled data.
std::vector<LabeledPool> feature_sort_split(const Matrix& data, std::span<const double> labels,
                                            std::size_t feature, std::size_t parts);

// Per-column standardization: (x - mean) / sd, with sd 0 mapped to scale 1.
struct StandardScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static StandardScaler fit(const Matrix& m);
  Matrix transform(const Matrix& m) const;
};

}  // namespace dbal
