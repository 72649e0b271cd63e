#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "randci/data.hpp"
#include "randci/rng.hpp"

namespace randci {

// Random cosine features z -> sqrt(2) * cos(W z + b) whose inner products
// approximate the Gaussian RBF kernel exp(-||x - y||^2 / bandwidth).
struct FourierFeatureMap {
  Eigen::MatrixXd frequencies;  // d x p
  Eigen::VectorXd phases;       // d, each in [0, 2*pi)
  double bandwidth = 1.0;

  Eigen::Index num_features() const { return frequencies.rows(); }
  Eigen::Index input_dim() const { return frequencies.cols(); }
};

// Squared median of the pairwise Euclidean distances among the first
// min(n, max_samples) rows. Returns 1 when the median distance is zero
// (constant data) so downstream feature sampling stays well defined.
inline double median_bandwidth(const Eigen::MatrixXd& data,
                               int max_samples = 500) {
  if (data.rows() < 2 || max_samples < 2)
    throw std::invalid_argument("median_bandwidth needs at least 2 rows");
  const Eigen::Index m =
      std::min<Eigen::Index>(data.rows(), static_cast<Eigen::Index>(max_samples));
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      dist.push_back((data.row(i) - data.row(j)).norm());
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double below =
        *std::max_element(dist.begin(), dist.begin() + mid);
    median = 0.5 * (median + below);
  }
  const double sigma = median * median;
  return sigma > 0.0 ? sigma : 1.0;
}

inline double median_bandwidth(const DataMatrix& data, int max_samples = 500) {
  return median_bandwidth(data.values, max_samples);
}

// Frequencies are N(0, 2/sigma) per entry, which makes
// E[zeta(x) zeta(y)] = exp(-||x - y||^2 / sigma) exact in expectation.
inline FourierFeatureMap sample_fourier_map(int p, int d, double sigma,
                                            Rng& rng) {
  if (p < 1 || d < 1)
    throw std::invalid_argument("sample_fourier_map: p and d must be >= 1");
  if (!(sigma > 0.0))
    throw std::invalid_argument("sample_fourier_map: sigma must be positive");
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / sigma));
  std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
  FourierFeatureMap map;
  map.bandwidth = sigma;
  map.frequencies.resize(d, p);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < p; ++j) map.frequencies(i, j) = normal(rng);
  map.phases.resize(d);
  for (int i = 0; i < d; ++i) map.phases(i) = unif(rng);
  return map;
}

inline Eigen::MatrixXd apply_fourier_map(const FourierFeatureMap& map,
                                         const Eigen::MatrixXd& data) {
  if (data.cols() != map.input_dim())
    throw std::invalid_argument("apply_fourier_map: dimension mismatch");
  Eigen::MatrixXd out = data * map.frequencies.transpose();
  out.rowwise() += map.phases.transpose();
  return std::numbers::sqrt2 * out.array().cos();
}

inline DataMatrix apply_fourier_map(const FourierFeatureMap& map,
                                    const DataMatrix& data) {
  return DataMatrix{apply_fourier_map(map, data.values), {}};
}

}  // namespace randci
