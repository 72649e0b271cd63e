#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "randci/data.hpp"
#include "randci/features.hpp"
#include "randci/rng.hpp"
#include "randci/wchi2.hpp"

namespace randci {

enum class ApproxMethod { Lpb, Hbe, Sw, WoodF, Imhof, Perm };

inline std::string to_string(ApproxMethod m) {
  switch (m) {
    case ApproxMethod::Lpb: return "lpb";
    case ApproxMethod::Hbe: return "hbe";
    case ApproxMethod::Sw: return "sw";
    case ApproxMethod::WoodF: return "woodf";
    case ApproxMethod::Imhof: return "imhof";
    case ApproxMethod::Perm: return "perm";
  }
  return "lpb";
}

inline ApproxMethod approx_method_from_string(const std::string& s) {
  if (s == "lpb") return ApproxMethod::Lpb;
  if (s == "hbe") return ApproxMethod::Hbe;
  if (s == "sw") return ApproxMethod::Sw;
  if (s == "woodf") return ApproxMethod::WoodF;
  if (s == "imhof") return ApproxMethod::Imhof;
  if (s == "perm") return ApproxMethod::Perm;
  throw std::invalid_argument("unknown approximation method: " + s);
}

struct CITestConfig {
  int num_features_xy = 5;    // features for x, y (and the extended block)
  int num_features_z = 25;    // features for the conditioning block
  double ridge = 1e-10;
  ApproxMethod approx_method = ApproxMethod::Lpb;
  int median_subsample = 500;
  std::uint64_t seed = 0;
  int num_permutations = 500;  // only used by ApproxMethod::Perm

  void validate() const {
    if (num_features_xy < 1 || num_features_z < 1)
      throw std::invalid_argument("feature counts must be >= 1");
    if (!(ridge > 0.0)) throw std::invalid_argument("ridge must be positive");
    if (num_permutations < 1)
      throw std::invalid_argument("permutation count must be >= 1");
  }
};

struct CITestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
  std::vector<double> eigenvalues;
  Eigen::Index n = 0;
  double elapsed_ms = 0.0;
  bool fallback_flag = false;
};

// Residuals of each feature column after linear ridge regression on the
// conditioning features: F_c - C_c (Cov_CC + ridge I)^{-1} Cov_CF, all
// covariances with the 1/(n-1) normalization on centered columns. With no
// conditioning columns this is plain column centering.
inline Eigen::MatrixXd ridge_residualize(const Eigen::MatrixXd& features,
                                         const Eigen::MatrixXd& conditioning,
                                         double ridge) {
  if (conditioning.cols() > 0 && features.rows() != conditioning.rows())
    throw std::invalid_argument("ridge_residualize: row counts differ");
  if (!(ridge > 0.0))
    throw std::invalid_argument("ridge_residualize: ridge must be positive");
  Eigen::MatrixXd fc = features.rowwise() - features.colwise().mean();
  if (conditioning.cols() == 0) return fc;
  const double denom = static_cast<double>(features.rows()) - 1.0;
  Eigen::MatrixXd cc = conditioning.rowwise() - conditioning.colwise().mean();
  Eigen::MatrixXd cov_cc = cc.transpose() * cc / denom;
  cov_cc.diagonal().array() += ridge;
  const Eigen::MatrixXd cov_cf = cc.transpose() * fc / denom;
  return fc - cc * cov_cc.ldlt().solve(cov_cf);
}

// n * || resA' resB / (n-1) ||_F^2
inline double cov_frobenius_statistic(const Eigen::MatrixXd& res_a,
                                      const Eigen::MatrixXd& res_b) {
  if (res_a.rows() != res_b.rows())
    throw std::invalid_argument("cov_frobenius_statistic: row counts differ");
  const Eigen::Index n = res_a.rows();
  if (n < 2)
    throw std::invalid_argument("cov_frobenius_statistic: need n >= 2");
  const double denom = static_cast<double>(n) - 1.0;
  const Eigen::MatrixXd cross = res_a.transpose() * res_b / denom;
  return static_cast<double>(n) * cross.squaredNorm();
}

// Second-moment matrix of the per-sample vectorized residual outer products,
// Pi = (1/n) sum_r v_r v_r' with v_r = vec(resA_r resB_r'), symmetrized.
// Row blocks keep memory bounded for large n.
inline Eigen::MatrixXd estimate_null_second_moment(
    const Eigen::MatrixXd& res_a, const Eigen::MatrixXd& res_b) {
  if (res_a.rows() != res_b.rows())
    throw std::invalid_argument("estimate_null_second_moment: row counts differ");
  const Eigen::Index n = res_a.rows();
  const Eigen::Index ma = res_a.cols(), mb = res_b.cols();
  const Eigen::Index L = ma * mb;
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(L, L);
  const Eigen::Index block = 65536;
  Eigen::MatrixXd v;
  for (Eigen::Index start = 0; start < n; start += block) {
    const Eigen::Index rows = std::min(block, n - start);
    v.resize(rows, L);
    for (Eigen::Index j = 0; j < ma; ++j)
      for (Eigen::Index k = 0; k < mb; ++k)
        v.col(j * mb + k) = res_a.col(j).segment(start, rows).cwiseProduct(
            res_b.col(k).segment(start, rows));
    pi.noalias() += v.transpose() * v;
  }
  pi /= static_cast<double>(n);
  return 0.5 * (pi + pi.transpose()).eval();
}

// Null weights for Theorem-1 style p-values: eigenvalues of the estimated
// second-moment matrix with negatives clamped to zero.
inline std::vector<double> estimate_null_weights(const Eigen::MatrixXd& res_a,
                                                 const Eigen::MatrixXd& res_b) {
  const Eigen::MatrixXd pi = estimate_null_second_moment(res_a, res_b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pi,
                                                    Eigen::EigenvaluesOnly);
  std::vector<double> weights(static_cast<std::size_t>(pi.rows()));
  for (Eigen::Index i = 0; i < pi.rows(); ++i)
    weights[static_cast<std::size_t>(i)] = std::max(es.eigenvalues()(i), 0.0);
  return weights;
}

namespace detail {

inline std::pair<double, bool> analytic_pvalue(
    const WeightedChiSquareDist& dist, double statistic, ApproxMethod method) {
  switch (method) {
    case ApproxMethod::Sw:
      return {satterthwaite_welch(dist).survival(statistic), false};
    case ApproxMethod::Hbe:
      return {hall_buckley_eagleson(dist).survival(statistic), false};
    case ApproxMethod::WoodF: {
      const auto wf = wood_f(dist);
      return {wf.survival(statistic), wf.fell_back};
    }
    case ApproxMethod::Imhof:
      return {imhof_survival(dist, statistic, 1e-6), false};
    case ApproxMethod::Lpb: {
      const auto mix = lindsay_pilla_basak(dist);
      if (mix.fell_back)
        return {hall_buckley_eagleson(dist).survival(statistic), true};
      return {mix.survival(statistic), false};
    }
    case ApproxMethod::Perm:
      throw std::logic_error("analytic_pvalue called with Perm");
  }
  return {1.0, true};
}

}  // namespace detail

// Core of both tests once the standardized feature blocks exist. The rng is
// only consumed by the permutation method.
inline CITestResult test_feature_blocks(const Eigen::MatrixXd& fa,
                                        const Eigen::MatrixXd& fb,
                                        const Eigen::MatrixXd& fc,
                                        const CITestConfig& cfg, Rng& rng) {
  const Eigen::MatrixXd res_a = ridge_residualize(fa, fc, cfg.ridge);
  const Eigen::MatrixXd res_b = ridge_residualize(fb, fc, cfg.ridge);
  CITestResult result;
  result.n = fa.rows();
  result.statistic = cov_frobenius_statistic(res_a, res_b);
  result.eigenvalues = estimate_null_weights(res_a, res_b);

  if (cfg.approx_method == ApproxMethod::Perm) {
    const Eigen::Index n = res_a.rows();
    const double denom = static_cast<double>(n) - 1.0;
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Eigen::MatrixXd permuted(n, res_b.cols());
    int geq = 0;
    for (int r = 0; r < cfg.num_permutations; ++r) {
      std::shuffle(perm.begin(), perm.end(), rng);
      for (Eigen::Index i = 0; i < n; ++i)
        permuted.row(i) = res_b.row(perm[static_cast<std::size_t>(i)]);
      const Eigen::MatrixXd cross = res_a.transpose() * permuted / denom;
      const double stat = static_cast<double>(n) * cross.squaredNorm();
      if (stat >= result.statistic) ++geq;
    }
    result.p_value = (1.0 + geq) / (cfg.num_permutations + 1.0);
    return result;
  }

  const double total =
      std::accumulate(result.eigenvalues.begin(), result.eigenvalues.end(), 0.0);
  if (!(total > 0.0)) {
    result.p_value = 1.0;
    result.fallback_flag = true;
    return result;
  }
  const WeightedChiSquareDist dist(result.eigenvalues);
  auto [p, fell_back] = detail::analytic_pvalue(dist, result.statistic,
                                                cfg.approx_method);
  result.p_value = std::clamp(p, 0.0, 1.0);
  result.fallback_flag = fell_back;
  return result;
}

namespace detail {

inline void check_test_inputs(const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& y,
                              const Eigen::MatrixXd& z) {
  if (x.rows() != y.rows() || (z.cols() > 0 && z.rows() != x.rows()))
    throw std::invalid_argument("ci test: row counts differ");
  if (x.rows() < 2) throw std::invalid_argument("ci test: need n >= 2");
  if (x.cols() < 1 || y.cols() < 1)
    throw std::invalid_argument("ci test: x and y need at least one column");
}

}  // namespace detail

// Randomized conditional Correlation Test: Fourier features of x and y
// residualized on Fourier features of z; the statistic is the squared
// Frobenius norm of the residual cross-covariance scaled by n.
inline CITestResult rcot(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const Eigen::MatrixXd& z, const CITestConfig& cfg = {}) {
  cfg.validate();
  detail::check_test_inputs(x, y, z);
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(cfg.seed);

  const Eigen::MatrixXd xs = standardized(x);
  const Eigen::MatrixXd ys = standardized(y);
  const Eigen::MatrixXd zs = z.cols() > 0 ? standardized(z) : z;

  const auto map_x = sample_fourier_map(
      static_cast<int>(xs.cols()), cfg.num_features_xy,
      median_bandwidth(xs, cfg.median_subsample), rng);
  const auto map_y = sample_fourier_map(
      static_cast<int>(ys.cols()), cfg.num_features_xy,
      median_bandwidth(ys, cfg.median_subsample), rng);
  const Eigen::MatrixXd fa = standardized(apply_fourier_map(map_x, xs));
  const Eigen::MatrixXd fb = standardized(apply_fourier_map(map_y, ys));
  Eigen::MatrixXd fc(x.rows(), 0);
  if (z.cols() > 0) {
    const auto map_z = sample_fourier_map(
        static_cast<int>(zs.cols()), cfg.num_features_z,
        median_bandwidth(zs, cfg.median_subsample), rng);
    fc = standardized(apply_fourier_map(map_z, zs));
  }

  CITestResult result = test_feature_blocks(fa, fb, fc, cfg, rng);
  result.method = "rcot[" + to_string(cfg.approx_method) + "]";
  result.elapsed_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  return result;
}

// Randomized Conditional Independence Test: identical pipeline except the
// A-side features are drawn on the concatenated (x, z) block with its own
// median bandwidth. With empty z this coincides with rcot.
inline CITestResult rcit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const Eigen::MatrixXd& z, const CITestConfig& cfg = {}) {
  cfg.validate();
  detail::check_test_inputs(x, y, z);
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(cfg.seed);

  const Eigen::MatrixXd xs = standardized(x);
  const Eigen::MatrixXd ys = standardized(y);
  const Eigen::MatrixXd zs = z.cols() > 0 ? standardized(z) : z;
  const Eigen::MatrixXd xz = z.cols() > 0 ? hstack(xs, zs) : xs;

  const auto map_a = sample_fourier_map(
      static_cast<int>(xz.cols()), cfg.num_features_xy,
      median_bandwidth(xz, cfg.median_subsample), rng);
  const auto map_y = sample_fourier_map(
      static_cast<int>(ys.cols()), cfg.num_features_xy,
      median_bandwidth(ys, cfg.median_subsample), rng);
  const Eigen::MatrixXd fa = standardized(apply_fourier_map(map_a, xz));
  const Eigen::MatrixXd fb = standardized(apply_fourier_map(map_y, ys));
  Eigen::MatrixXd fc(x.rows(), 0);
  if (z.cols() > 0) {
    const auto map_z = sample_fourier_map(
        static_cast<int>(zs.cols()), cfg.num_features_z,
        median_bandwidth(zs, cfg.median_subsample), rng);
    fc = standardized(apply_fourier_map(map_z, zs));
  }

  CITestResult result = test_feature_blocks(fa, fb, fc, cfg, rng);
  result.method = "rcit[" + to_string(cfg.approx_method) + "]";
  result.elapsed_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  return result;
}

// Partial-correlation z-test on linear regression residuals; the Gaussian
// baseline. x and y must be single columns.
inline CITestResult fisher_z(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const Eigen::MatrixXd& z) {
  if (x.cols() != 1 || y.cols() != 1)
    throw std::invalid_argument("fisher_z: x and y must be single columns");
  detail::check_test_inputs(x, y, z);
  const Eigen::Index n = x.rows();
  const Eigen::Index k = z.cols();
  if (n <= k + 3)
    throw std::invalid_argument("fisher_z: need n > |z| + 3");
  const auto t0 = std::chrono::steady_clock::now();

  Eigen::MatrixXd design(n, k + 1);
  design.col(0).setOnes();
  if (k > 0) design.rightCols(k) = z;
  const auto qr = design.householderQr();
  const Eigen::VectorXd rx = x.col(0) - design * qr.solve(x.col(0));
  const Eigen::VectorXd ry = y.col(0) - design * qr.solve(y.col(0));

  CITestResult result;
  result.n = n;
  result.method = "fisher-z";
  const double denom = rx.norm() * ry.norm();
  double r = denom > 0.0 ? rx.dot(ry) / denom : 0.0;
  if (std::abs(r) >= 1.0) {
    result.statistic = std::numeric_limits<double>::infinity();
    result.p_value = 0.0;
    result.fallback_flag = true;
  } else {
    const double stat = std::sqrt(static_cast<double>(n - k) - 3.0) * 0.5 *
                        std::log((1.0 + r) / (1.0 - r));
    result.statistic = stat;
    result.p_value = 2.0 * boost::math::cdf(boost::math::normal_distribution<>(),
                                            -std::abs(stat));
  }
  result.elapsed_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  return result;
}

}  // namespace randci
