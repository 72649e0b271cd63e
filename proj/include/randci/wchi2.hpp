#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/gamma.hpp>

#include "randci/errors.hpp"
#include "randci/rng.hpp"

namespace randci {

// Distribution of Q = sum_i lambda_i * z_i^2 with z_i i.i.d. standard normal.
// Weights below 1e-10 * max(lambda) are clamped to zero at construction to
// keep the approximation methods stable.
class WeightedChiSquareDist {
 public:
  explicit WeightedChiSquareDist(std::vector<double> weights)
      : weights_(std::move(weights)) {
    if (weights_.empty())
      throw std::invalid_argument("weighted chi-square: empty weight list");
    double max_w = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w))
        throw std::invalid_argument("weighted chi-square: non-finite weight");
      max_w = std::max(max_w, w);
    }
    if (!(max_w > 0.0))
      throw std::domain_error("weighted chi-square: all weights are zero");
    const double cutoff = 1e-10 * max_w;
    for (double& w : weights_) {
      if (w < -cutoff)
        throw std::invalid_argument("weighted chi-square: negative weight");
      if (w < cutoff) w = 0.0;
    }
  }

  const std::vector<double>& weights() const { return weights_; }
  std::size_t count() const { return weights_.size(); }

  std::vector<double> positive_weights() const {
    std::vector<double> out;
    out.reserve(weights_.size());
    for (double w : weights_)
      if (w > 0.0) out.push_back(w);
    return out;
  }

 private:
  std::vector<double> weights_;
};

// c_r = 2^(r-1) (r-1)! sum_i lambda_i^r
inline std::vector<double> cumulants_of_weights(
    const WeightedChiSquareDist& dist, int r_max) {
  if (r_max < 1) throw std::invalid_argument("r_max must be >= 1");
  std::vector<double> c(static_cast<std::size_t>(r_max));
  std::vector<double> pow_acc(dist.weights().begin(), dist.weights().end());
  double lead = 1.0;  // 2^(r-1) (r-1)!
  for (int r = 1; r <= r_max; ++r) {
    double s = 0.0;
    for (double& v : pow_acc) s += v;
    c[static_cast<std::size_t>(r - 1)] = lead * s;
    for (std::size_t i = 0; i < pow_acc.size(); ++i)
      pow_acc[i] *= dist.weights()[i];
    lead *= 2.0 * r;
  }
  return c;
}

// m_r = c_r + sum_{i=1}^{r-1} C(r-1, i-1) c_i m_{r-i}
inline std::vector<double> moments_from_cumulants(const std::vector<double>& c) {
  if (c.empty()) throw std::invalid_argument("empty cumulant list");
  const int rmax = static_cast<int>(c.size());
  std::vector<double> m(c.size());
  m[0] = c[0];
  for (int r = 2; r <= rmax; ++r) {
    double s = c[static_cast<std::size_t>(r - 1)];
    double binom = 1.0;  // C(r-1, i-1), starting at i=1
    for (int i = 1; i <= r - 1; ++i) {
      s += binom * c[static_cast<std::size_t>(i - 1)] *
           m[static_cast<std::size_t>(r - i - 1)];
      binom = binom * (r - i) / i;
    }
    m[static_cast<std::size_t>(r - 1)] = s;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Moment-matching approximations
// ---------------------------------------------------------------------------

// Two-moment gamma match: shape = c1^2/c2, scale = c2/c1.
struct GammaApprox {
  double shape = 1.0;
  double scale = 1.0;

  double survival(double x) const {
    if (x <= 0.0) return 1.0;
    return boost::math::cdf(
        boost::math::complement(boost::math::gamma_distribution<>(shape, scale), x));
  }
  double cdf(double x) const { return 1.0 - survival(x); }
};

inline GammaApprox satterthwaite_welch(const WeightedChiSquareDist& dist) {
  const auto c = cumulants_of_weights(dist, 2);
  if (!(c[0] > 0.0))
    throw std::domain_error("satterthwaite_welch: degenerate distribution");
  return GammaApprox{c[0] * c[0] / c[1], c[1] / c[0]};
}

// Three-cumulant match to a shifted and scaled chi-square: the skewness of
// chi2_nu equals that of Q at nu = 8 c2^3 / c3^2, then Q is mapped onto the
// chi2 scale through its first two cumulants.
struct HbeApprox {
  double c1 = 1.0;
  double c2 = 1.0;
  double dof = 1.0;

  double survival(double x) const {
    const double u = std::sqrt(2.0 * dof / c2) * (x - c1) + dof;
    if (u <= 0.0) return 1.0;
    return boost::math::cdf(
        boost::math::complement(boost::math::chi_squared_distribution<>(dof), u));
  }
  double cdf(double x) const { return 1.0 - survival(x); }
};

inline HbeApprox hall_buckley_eagleson(const WeightedChiSquareDist& dist) {
  const auto c = cumulants_of_weights(dist, 3);
  if (!(c[0] > 0.0))
    throw std::domain_error("hall_buckley_eagleson: degenerate distribution");
  const double dof = 8.0 * c[1] * c[1] * c[1] / (c[2] * c[2]);
  return HbeApprox{c[0], c[1], dof};
}

// Three-moment match of Q to beta * X / Y with X ~ Gamma(alpha1, 1) and
// Y ~ Gamma(alpha2, 1), i.e. a scaled F distribution. The parameter solve
// degenerates (denominators -> 0) exactly when the target is gamma-shaped,
// e.g. equal weights; in that case we fall back to HBE and flag it.
struct WoodFApprox {
  bool fell_back = false;
  double alpha1 = 1.0;
  double alpha2 = 4.0;
  double scale = 1.0;  // beta
  HbeApprox fallback;

  double survival(double x) const {
    if (fell_back) return fallback.survival(x);
    if (x <= 0.0) return 1.0;
    const double u = x * alpha2 / (alpha1 * scale);
    return boost::math::cdf(boost::math::complement(
        boost::math::fisher_f_distribution<>(2.0 * alpha1, 2.0 * alpha2), u));
  }
  double cdf(double x) const { return 1.0 - survival(x); }
};

inline WoodFApprox wood_f(const WeightedChiSquareDist& dist) {
  const auto c = cumulants_of_weights(dist, 3);
  if (!(c[0] > 0.0))
    throw std::domain_error("wood_f: degenerate distribution");
  const auto m = moments_from_cumulants(c);
  const double m1 = m[0], m2 = m[1], m3 = m[2];
  const double den_beta = m1 * m2 * m2 + m2 * m3 - 2.0 * m1 * m1 * m3;
  const double den_alpha = m1 * m1 * m2 + m1 * m3 - 2.0 * m2 * m2;
  WoodFApprox approx;
  approx.fallback = hall_buckley_eagleson(dist);
  const double tiny = 1e-12 * m1 * m1 * m2;
  if (den_beta <= tiny || den_alpha <= tiny) {
    approx.fell_back = true;
    return approx;
  }
  approx.alpha1 = 2.0 * m1 * (m1 * m3 - m2 * m2) / den_beta;
  approx.alpha2 = (m1 * m1 * m2 + 3.0 * m1 * m3 - 4.0 * m2 * m2) / den_alpha;
  approx.scale = den_beta / den_alpha;
  // the third-moment equation needs alpha2 > 3 for the target moment to exist
  if (!(approx.alpha1 > 0.0) || !(approx.alpha2 > 3.0) ||
      !(approx.scale > 0.0)) {
    approx.fell_back = true;
  }
  return approx;
}

// Mixture of gamma CDFs with a common shape, matching the first
// 2 * components moments of Q.
struct GammaMixture {
  double shape = 1.0;
  std::vector<double> scales;
  std::vector<double> mixture_weights;
  bool fell_back = false;  // validation forced a lower component count

  int components() const { return static_cast<int>(scales.size()); }

  double cdf(double x) const {
    if (x <= 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < scales.size(); ++i)
      acc += mixture_weights[i] *
             boost::math::cdf(
                 boost::math::gamma_distribution<>(shape, scales[i]), x);
    return std::clamp(acc, 0.0, 1.0);
  }
  double survival(double x) const {
    if (x <= 0.0) return 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < scales.size(); ++i)
      acc += mixture_weights[i] *
             boost::math::cdf(boost::math::complement(
                 boost::math::gamma_distribution<>(shape, scales[i]), x));
    return std::clamp(acc, 0.0, 1.0);
  }
  // r-th raw moment of the mixture: (shape)_r * sum_i pi_i theta_i^r
  double moment(int r) const {
    double rising = 1.0;
    for (int j = 0; j < r; ++j) rising *= shape + j;
    double s = 0.0;
    for (std::size_t i = 0; i < scales.size(); ++i)
      s += mixture_weights[i] * std::pow(scales[i], r);
    return rising * s;
  }
};

namespace detail {

// Moments of the mixing measure: mu_r = m_r / (g)_r with g = 1/lambda.
// When these form a valid N-point moment sequence the Hankel determinant of
// order N+1 vanishes; the Lindsay-Pilla-Basak construction finds the lambda
// where that happens, reads off the support points as polynomial roots, and
// solves a Vandermonde system for the mixing weights.
inline double lpb_modified_moment(const std::vector<double>& m, double lambda,
                                  int r) {
  if (r == 0) return 1.0;
  const double g = 1.0 / lambda;
  double rising = 1.0;
  for (int j = 0; j < r; ++j) rising *= g + j;
  return m[static_cast<std::size_t>(r - 1)] / rising;
}

inline double lpb_hankel_det(const std::vector<double>& m, double lambda,
                             int k) {
  Eigen::MatrixXd h(k + 1, k + 1);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) h(i, j) = lpb_modified_moment(m, lambda, i + j);
  return h.determinant();
}

struct LpbCandidate {
  bool ok = false;
  double shape = 1.0;
  std::vector<double> scales;
  std::vector<double> weights;
};

inline LpbCandidate lpb_solve_at(const std::vector<double>& m, double lambda,
                                 int n_comp) {
  LpbCandidate cand;
  cand.shape = 1.0 / lambda;
  if (n_comp == 1) {
    cand.scales = {lpb_modified_moment(m, lambda, 1)};
    cand.weights = {1.0};
    cand.ok = cand.scales[0] > 0.0;
    return cand;
  }
  // orthogonal-polynomial coefficients: sum_k a_k mu_{k+j} = -mu_{N+j}
  Eigen::MatrixXd A(n_comp, n_comp);
  Eigen::VectorXd b(n_comp);
  for (int j = 0; j < n_comp; ++j) {
    for (int k = 0; k < n_comp; ++k)
      A(j, k) = lpb_modified_moment(m, lambda, k + j);
    b(j) = -lpb_modified_moment(m, lambda, n_comp + j);
  }
  Eigen::VectorXd a = A.fullPivLu().solve(b);
  if (!a.allFinite()) return cand;
  // companion matrix of t^N + a_{N-1} t^{N-1} + ... + a_0
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n_comp, n_comp);
  for (int i = 1; i < n_comp; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n_comp; ++i) comp(i, n_comp - 1) = -a(i);
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
  std::vector<double> roots;
  for (int i = 0; i < n_comp; ++i) {
    const auto ev = es.eigenvalues()(i);
    if (std::abs(ev.imag()) > 1e-8 * (1.0 + std::abs(ev.real()))) return cand;
    if (!(ev.real() > 0.0)) return cand;
    roots.push_back(ev.real());
  }
  std::sort(roots.begin(), roots.end());
  for (std::size_t i = 1; i < roots.size(); ++i)
    if (roots[i] - roots[i - 1] < 1e-12 * roots[i]) return cand;
  // Vandermonde system sum_i pi_i theta_i^j = mu_j, j = 0..N-1
  Eigen::MatrixXd V(n_comp, n_comp);
  Eigen::VectorXd mu(n_comp);
  for (int j = 0; j < n_comp; ++j) {
    for (int i = 0; i < n_comp; ++i) V(j, i) = std::pow(roots[i], j);
    mu(j) = lpb_modified_moment(m, lambda, j);
  }
  Eigen::VectorXd pi = V.fullPivLu().solve(mu);
  if (!pi.allFinite()) return cand;
  double total = 0.0;
  for (int i = 0; i < n_comp; ++i) {
    if (pi(i) < -1e-8) return cand;
    pi(i) = std::max(pi(i), 0.0);
    total += pi(i);
  }
  if (std::abs(total - 1.0) > 1e-6) return cand;
  cand.scales = std::move(roots);
  cand.weights.assign(pi.data(), pi.data() + n_comp);
  for (double& w : cand.weights) w /= total;
  cand.ok = true;
  return cand;
}

}  // namespace detail

// Lindsay-Pilla-Basak gamma-mixture approximation matching the first
// 2 * min(L, max_components) moments. Hankel-determinant roots are located
// by bisection on nested intervals; if the determinant has no sign change at
// some order the target already is a lower-order mixture and the recursion
// stops there (not a fallback). Validation failures reduce the order with
// the fallback flag set.
inline GammaMixture lindsay_pilla_basak(const WeightedChiSquareDist& dist,
                                        int max_components = 4) {
  if (max_components < 1)
    throw std::invalid_argument("lindsay_pilla_basak: need >= 1 component");
  const auto positive = dist.positive_weights();
  if (positive.empty())
    throw std::domain_error("lindsay_pilla_basak: degenerate distribution");
  const int n_target =
      std::min<int>(max_components, static_cast<int>(positive.size()));

  // Work on weights scaled so the target mean is 1 (keeps the Hankel
  // matrices well conditioned); rescale the mixture at the end.
  const double scale = std::accumulate(positive.begin(), positive.end(), 0.0);
  std::vector<double> scaled(positive);
  for (double& w : scaled) w /= scale;
  const WeightedChiSquareDist unit(scaled);
  const auto m =
      moments_from_cumulants(cumulants_of_weights(unit, 2 * n_target));

  // lambda for one component is available in closed form; each further order
  // has its root inside (0, previous root).
  std::vector<double> lambda_roots;
  lambda_roots.push_back(m[1] / (m[0] * m[0]) - 1.0);
  for (int k = 2; k <= n_target; ++k) {
    double lo = 1e-13, hi = lambda_roots.back() * (1.0 - 1e-9);
    double flo = detail::lpb_hankel_det(m, lo, k);
    double fhi = detail::lpb_hankel_det(m, hi, k);
    if (!std::isfinite(flo) || !std::isfinite(fhi) ||
        (flo > 0.0) == (fhi > 0.0))
      break;  // natural stop: target is an exact (k-1)-component mixture
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = detail::lpb_hankel_det(m, mid, k);
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
      if (hi - lo < 1e-15 * hi) break;
    }
    lambda_roots.push_back(0.5 * (lo + hi));
  }

  GammaMixture mix;
  for (int n_comp = static_cast<int>(lambda_roots.size()); n_comp >= 1;
       --n_comp) {
    const double lambda = lambda_roots[static_cast<std::size_t>(n_comp - 1)];
    auto cand = detail::lpb_solve_at(m, lambda, n_comp);
    if (!cand.ok) continue;
    mix.shape = cand.shape;
    mix.scales = cand.scales;
    mix.mixture_weights = cand.weights;
    for (double& s : mix.scales) s *= scale;
    mix.fell_back = n_comp < static_cast<int>(lambda_roots.size());
    // moment fidelity at the achieved order
    bool moments_ok = true;
    const auto m_full =
        moments_from_cumulants(cumulants_of_weights(dist, 2 * n_comp));
    for (int r = 1; r <= 2 * n_comp; ++r) {
      const double want = m_full[static_cast<std::size_t>(r - 1)];
      if (std::abs(mix.moment(r) - want) > 1e-6 * std::abs(want)) {
        moments_ok = false;
        break;
      }
    }
    if (moments_ok) return mix;
    mix.fell_back = true;
  }
  throw std::domain_error("lindsay_pilla_basak: no valid mixture found");
}

// ---------------------------------------------------------------------------
// Imhof's characteristic-function inversion
// ---------------------------------------------------------------------------

namespace detail {

// 15-point Gauss-Kronrod rule with embedded 7-point Gauss estimate.
inline std::pair<double, double> gauss_kronrod_15(
    const std::vector<double>& lam, double x, double a, double b) {
  static constexpr double kx[8] = {
      0.991455371120813, 0.949107912342759, 0.864864423359769,
      0.741531185599394, 0.586087235467691, 0.405845151377397,
      0.207784955007898, 0.0};
  static constexpr double kw[8] = {
      0.022935322010529, 0.063092092629979, 0.104790010322250,
      0.140653259715525, 0.169004726639267, 0.190350578064785,
      0.204432940075298, 0.209482141084728};
  static constexpr double gw[4] = {0.129484966168870, 0.279705391489277,
                                   0.381830050505119, 0.417959183673469};
  const auto f = [&](double u) {
    if (u == 0.0) {
      double s = 0.0;
      for (double l : lam) s += l;
      return 0.5 * (s - x);
    }
    double theta = -0.5 * x * u;
    double log_rho = 0.0;
    for (double l : lam) {
      const double lu = l * u;
      theta += 0.5 * std::atan(lu);
      log_rho += 0.25 * std::log1p(lu * lu);
    }
    return std::sin(theta) / (u * std::exp(log_rho));
  };
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = kw[7] * fc, resg = gw[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kx[j];
    const double f1 = f(c - dx), f2 = f(c + dx);
    resk += kw[j] * (f1 + f2);
    if (j % 2 == 1) resg += gw[j / 2] * (f1 + f2);
  }
  return {resk * h, std::abs(resk - resg) * h};
}

inline double imhof_segment(const std::vector<double>& lam, double x, double a,
                            double b, double eps, int depth,
                            double* err_unmet) {
  const auto [val, err] = gauss_kronrod_15(lam, x, a, b);
  if (err <= eps || depth >= 24) {
    if (err > eps) *err_unmet += err;
    return val;
  }
  const double mid = 0.5 * (a + b);
  return imhof_segment(lam, x, a, mid, 0.5 * eps, depth + 1, err_unmet) +
         imhof_segment(lam, x, mid, b, 0.5 * eps, depth + 1, err_unmet);
}

}  // namespace detail

// P(Q > x) within tol via numerical inversion of the characteristic
// function: survival = 1/2 + (1/pi) * int_0^inf sin(theta(u))/(u rho(u)) du.
// The truncation point comes from Imhof's tail bound
//   (1/pi) (2/k) U^(-k/2) / prod_k sqrt(lambda), minimized over weight
// prefixes, sharpened by an integration-by-parts bound once the phase
// derivative is dominated by -x/2. Segments never span more than half an
// oscillation period, so the embedded Gauss-Kronrod rule stays accurate.
inline double imhof_survival(const WeightedChiSquareDist& dist, double x,
                             double tol = 1e-6) {
  if (!std::isfinite(x)) throw std::invalid_argument("imhof: x not finite");
  if (!(tol > 0.0) || tol >= 0.1)
    throw std::invalid_argument("imhof: tol must lie in (0, 0.1)");
  if (x <= 0.0) return 1.0;

  std::vector<double> lam = dist.positive_weights();
  std::sort(lam.begin(), lam.end(), std::greater<double>());
  const int L = static_cast<int>(lam.size());
  std::vector<double> inv_prod_sqrt(lam.size());
  double acc = 0.0;
  for (int k = 0; k < L; ++k) {
    acc += 0.5 * std::log(lam[static_cast<std::size_t>(k)]);
    inv_prod_sqrt[static_cast<std::size_t>(k)] = std::exp(-acc);
  }
  const double pi = std::numbers::pi;
  const auto tail_bound = [&](double u) {
    double deriv = 0.0;
    for (double l : lam) deriv += l / (1.0 + l * u * l * u);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= L; ++k) {
      const double p = inv_prod_sqrt[static_cast<std::size_t>(k - 1)];
      best = std::min(best, (2.0 / k) * std::pow(u, -0.5 * k) * p / pi);
      if (deriv <= 0.5 * x)
        best = std::min(best, (8.0 / x) * std::pow(u, -1.0 - 0.5 * k) * p / pi);
    }
    return best;
  };

  const double budget_trunc = 0.5 * tol;
  double upper = 1.0;
  while (tail_bound(upper) > budget_trunc && upper < 1e15) upper *= 2.0;
  if (tail_bound(upper) > budget_trunc)
    throw AccuracyError("imhof: truncation bound not reachable", 0.5);
  {
    double lo = upper * 0.5, hi = upper;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (tail_bound(mid) > budget_trunc)
        lo = mid;
      else
        hi = mid;
    }
    upper = hi;
  }

  const double nominal_segments = 0.25 * L + x * upper / (2.0 * pi) + 2.0;
  const double eps_seg = 0.5 * tol / nominal_segments;
  double total = 0.0, err_unmet = 0.0, u = 0.0;
  while (u < upper) {
    double omega = 0.5 * x;
    for (double l : lam) omega += 0.5 * l / (1.0 + l * u * l * u);
    const double step = std::min(pi / omega, upper - u);
    total +=
        detail::imhof_segment(lam, x, u, u + step, eps_seg, 0, &err_unmet);
    u += step;
  }
  const double result = std::clamp(0.5 + total / pi, 0.0, 1.0);
  if (err_unmet > 0.5 * tol)
    throw AccuracyError("imhof: quadrature error above tolerance", result);
  return result;
}

// Upper quantile via bisection on the Imhof survival function: the smallest
// x with P(Q > x) <= prob, located to a relative width of ~1e-9.
inline double imhof_quantile(const WeightedChiSquareDist& dist, double prob,
                             double tol = 1e-7) {
  if (!(prob > 0.0) || !(prob < 1.0))
    throw std::invalid_argument("imhof_quantile: prob must lie in (0, 1)");
  double lo = 0.0, hi = 1.0;
  while (imhof_survival(dist, hi, tol) > prob && hi < 1e12) hi *= 2.0;
  for (int it = 0; it < 80 && (hi - lo) > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (imhof_survival(dist, mid, tol) > prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Monte-Carlo ground truth: fraction of `draws` simulated sums above x.
inline double empirical_survival_oracle(const WeightedChiSquareDist& dist,
                                        double x, std::int64_t draws,
                                        Rng& rng) {
  if (draws < 10000)
    throw std::invalid_argument("empirical oracle: need at least 1e4 draws");
  const auto lam = dist.positive_weights();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < draws; ++i) {
    double q = 0.0;
    for (double l : lam) {
      const double z = normal(rng);
      q += l * z * z;
    }
    if (q > x) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace randci
