#include "dbal/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dbal {

std::vector<LabeledPool> feature_sort_split(const Matrix& data, std::span<const double> labels,
                                            std::size_t feature, std::size_t parts) {
  if (feature >= data.cols()) throw std::invalid_argument("feature_sort_split: feature out of range");
  if (parts < 2) throw std::invalid_argument("feature_sort_split: parts must be >= 2");
  if (data.rows() < parts) throw std::invalid_argument("feature_sort_split: fewer rows than parts");
  if (!labels.empty() && labels.size() != data.rows())
    throw std::invalid_argument("feature_sort_split: labels length mismatch");

  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.at(a, feature) < data.at(b, feature);
  });

  const std::size_t n = data.rows();
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;  // earlier blocks get the extra row

  std::vector<LabeledPool> out;
  out.reserve(parts);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < parts; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    const std::span<const std::size_t> block(order.data() + pos, size);
    LabeledPool pool;
    pool.points = data.gather_rows(block).drop_column(feature);
    if (!labels.empty()) {
      pool.labels.reserve(size);
      for (std::size_t i : block) pool.labels.push_back(labels[i]);
    }
    out.push_back(std::move(pool));
    pos += size;
  }
  return out;
}

StandardScaler StandardScaler::fit(const Matrix& m) {
  if (m.rows() == 0) throw std::invalid_argument("StandardScaler::fit: empty matrix");
  StandardScaler s;
  s.mean.assign(m.cols(), 0.0);
  s.scale.assign(m.cols(), 1.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s.mean[j] += m.at(i, j);
  for (double& v : s.mean) v /= static_cast<double>(m.rows());
  std::vector<double> var(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double d = m.at(i, j) - s.mean[j];
      var[j] += d * d;
    }
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(m.rows()));
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix StandardScaler::transform(const Matrix& m) const {
  if (m.cols() != mean.size()) throw std::invalid_argument("StandardScaler: width mismatch");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out.at(i, j) = (m.at(i, j) - mean[j]) / scale[j];
  return out;
}

}  // namespace dbal
