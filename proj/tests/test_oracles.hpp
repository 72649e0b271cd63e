#pragma once

// Independent reference implementations used only by the test suites. These
// deliberately avoid the library's own computation paths.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// Median over all pairwise Euclidean distances, plain O(n^2) with full sort.
inline double pairwise_median_distance(const Eigen::MatrixXd& rows) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j)
      d.push_back((rows.row(i) - rows.row(j)).norm());
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  return m % 2 == 1 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

inline double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              double sigma) {
  return std::exp(-(x - y).squaredNorm() / sigma);
}

// Ridge-regression residuals straight from the normal equations, column by
// column, without any centering shortcuts.
inline Eigen::MatrixXd ridge_residuals_direct(const Eigen::MatrixXd& f,
                                              const Eigen::MatrixXd& c,
                                              double gamma) {
  const Eigen::Index n = f.rows();
  Eigen::MatrixXd fc = f;
  for (Eigen::Index j = 0; j < f.cols(); ++j)
    fc.col(j).array() -= f.col(j).mean();
  Eigen::MatrixXd cc = c;
  for (Eigen::Index j = 0; j < c.cols(); ++j)
    cc.col(j).array() -= c.col(j).mean();
  const double denom = static_cast<double>(n) - 1.0;
  Eigen::MatrixXd gram = cc.transpose() * cc / denom +
                         gamma * Eigen::MatrixXd::Identity(c.cols(), c.cols());
  Eigen::MatrixXd out(n, f.cols());
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    const Eigen::VectorXd beta =
        gram.colPivHouseholderQr().solve(cc.transpose() * fc.col(j) / denom);
    out.col(j) = fc.col(j) - cc * beta;
  }
  return out;
}

// Step-function integral of the empirical CDF of p over [0, 1].
inline double aupc_step_integral(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double area = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    area += (p[i] - prev) * static_cast<double>(i) / n;
    prev = p[i];
  }
  area += (1.0 - prev);
  return area;
}

}  // namespace oracles
