#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace randci {

// Column-major sample matrix: one row per observation, one column per
// variable. Column names are optional and only used at the I/O boundary.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
};

inline DataMatrix make_data(Eigen::MatrixXd values,
                            std::vector<std::string> column_names = {}) {
  if (!values.allFinite())
    throw std::invalid_argument("data matrix contains NaN or Inf");
  if (!column_names.empty() &&
      static_cast<Eigen::Index>(column_names.size()) != values.cols())
    throw std::invalid_argument("column name count does not match columns");
  return DataMatrix{std::move(values), std::move(column_names)};
}

// Maps each column to sample mean 0, sample variance 1 (n-1 denominator).
// Constant columns become all zeros.
inline Eigen::MatrixXd standardized(const Eigen::MatrixXd& m) {
  if (m.rows() < 2)
    throw std::invalid_argument("standardization needs at least 2 rows");
  const double n = static_cast<double>(m.rows());
  Eigen::MatrixXd out = m.rowwise() - m.colwise().mean();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double var = out.col(j).squaredNorm() / (n - 1.0);
    if (var > 0.0)
      out.col(j) /= std::sqrt(var);
    else
      out.col(j).setZero();
  }
  return out;
}

inline DataMatrix standardize_columns(const DataMatrix& d) {
  return DataMatrix{standardized(d.values), d.column_names};
}

inline Eigen::MatrixXd hstack(const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  if (a.rows() != b.rows())
    throw std::invalid_argument("hstack: row counts differ");
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace randci
