// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the exit code is the number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "randci/randci.hpp"

using namespace randci;

namespace {

constexpr std::uint64_t kMasterSeed = 20250811;
int g_threads = 2;

struct Outcome {
  bool pass = true;
  std::string detail;
  double budget_seconds = 0.0;  // 0 = no budget
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// --- 1: moment-method accuracy against Imhof and the Monte-Carlo oracle ----
Outcome criterion_accuracy() {
  Outcome out;
  out.budget_seconds = 120.0;
  Rng rng(make_rng(derive_seed(kMasterSeed, {1})));
  std::uniform_int_distribution<int> len_dist(1, 25);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst_sw = 0.0, worst_hbe = 0.0, worst_wf = 0.0, worst_lpb = 0.0;
  double worst_mc_sigmas = 0.0;
  int wf_fallbacks = 0;
  for (int set = 0; set < 20; ++set) {
    const int L = len_dist(rng);
    std::vector<double> lam(static_cast<std::size_t>(L));
    for (double& l : lam) l = std::max(unif(rng), 1e-6);
    const WeightedChiSquareDist dist(lam);
    const auto sw = satterthwaite_welch(dist);
    const auto hbe = hall_buckley_eagleson(dist);
    const auto wf = wood_f(dist);
    const auto lpb = lindsay_pilla_basak(dist);
    if (wf.fell_back) ++wf_fallbacks;

    std::vector<double> quantiles;
    for (double p : {0.10, 0.05, 0.01})
      quantiles.push_back(imhof_quantile(dist, p));

    // one million-draw Monte Carlo pass evaluated at all three quantiles
    Rng mc_rng(make_rng(derive_seed(kMasterSeed, {1, 77, static_cast<std::uint64_t>(set)})));
    const std::int64_t draws = 1000000;
    std::int64_t hits[3] = {0, 0, 0};
    std::normal_distribution<double> normal;
    for (std::int64_t i = 0; i < draws; ++i) {
      double q = 0.0;
      for (double l : lam) {
        const double z = normal(mc_rng);
        q += l * z * z;
      }
      for (int j = 0; j < 3; ++j)
        if (q > quantiles[static_cast<std::size_t>(j)]) ++hits[j];
    }

    const double targets[3] = {0.10, 0.05, 0.01};
    for (int j = 0; j < 3; ++j) {
      const double x = quantiles[static_cast<std::size_t>(j)];
      const double t = targets[j];
      worst_sw = std::max(worst_sw, std::abs(sw.survival(x) - t));
      worst_hbe = std::max(worst_hbe, std::abs(hbe.survival(x) - t));
      if (!wf.fell_back)
        worst_wf = std::max(worst_wf, std::abs(wf.survival(x) - t));
      worst_lpb = std::max(worst_lpb, std::abs(lpb.survival(x) - t));
      const double mc = static_cast<double>(hits[j]) / draws;
      const double se = std::sqrt(t * (1.0 - t) / draws);
      worst_mc_sigmas = std::max(worst_mc_sigmas, std::abs(mc - t) / se);
    }
  }
  out.pass = worst_sw <= 0.02 && worst_hbe <= 0.01 && worst_wf <= 0.01 &&
             worst_lpb <= 0.01 && worst_mc_sigmas <= 3.0;
  out.detail = "worst |err| sw=" + fmt(worst_sw) + " hbe=" + fmt(worst_hbe) +
               " woodf=" + fmt(worst_wf) + " (" + std::to_string(wf_fallbacks) +
               " flagged fallbacks) lpb=" + fmt(worst_lpb) +
               " | imhof vs mc: " + fmt(worst_mc_sigmas, 3) + " se";
  return out;
}

// --- 2: closed-form chi-square cases are reproduced exactly ----------------
Outcome criterion_exactness() {
  Outcome out;
  const WeightedChiSquareDist one({1.0});
  const auto sw = satterthwaite_welch(one);
  const double imhof_point = imhof_survival(one, 3.841459, 1e-6);
  bool ok = sw.shape == 0.5 && sw.scale == 2.0;
  ok = ok && std::abs(imhof_point - 0.05) <= 1e-4;
  const WeightedChiSquareDist two({1.0, 1.0});
  double worst = 0.0;
  for (double x : {0.5, 1.0, 2.0, 4.0, 8.0})
    worst = std::max(worst, std::abs(imhof_survival(two, x, 1e-6) -
                                     std::exp(-x / 2.0)));
  ok = ok && worst <= 1e-4;
  out.pass = ok;
  out.detail = "sw(1)=(" + fmt(sw.shape, 3) + "," + fmt(sw.scale, 3) +
               ") imhof chi2_1 sf(3.841459)=" + fmt(imhof_point, 6) +
               " | chi2_2 worst |err|=" + fmt(worst, 3);
  return out;
}

// --- 3: null calibration over conditioning set sizes -----------------------
Outcome criterion_null_calibration() {
  Outcome out;
  out.budget_seconds = 600.0;
  const double crit = ks_critical_value(200, 0.01);
  const std::vector<int> all_k{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto rcot_reports = run_calibration_suite(
      {"rcot"}, {1000}, all_k, 200, kMasterSeed, g_threads);
  const auto rcit_reports = run_calibration_suite(
      {"rcit"}, {1000}, {1, 2, 3, 4}, 200, kMasterSeed, g_threads);
  std::string detail = "crit=" + fmt(crit, 4) + " rcot ks:";
  bool ok = true;
  for (const auto& r : rcot_reports) {
    detail += " " + fmt(r.ks_statistic, 3);
    ok = ok && r.ks_statistic < crit;
  }
  detail += " | rcit ks:";
  for (const auto& r : rcit_reports) {
    detail += " " + fmt(r.ks_statistic, 3);
    ok = ok && r.ks_statistic < crit;
  }
  out.pass = ok;
  out.detail = detail;
  return out;
}

// --- 4: analytic null vs permutation null on shared datasets ---------------
Outcome criterion_analytic_vs_permutation() {
  Outcome out;
  const int datasets = 500;
  std::vector<double> p_lpb(datasets), p_perm(datasets);
  parallel_for(static_cast<std::size_t>(datasets), g_threads, [&](std::size_t t) {
    Rng rng(make_rng(derive_seed(kMasterSeed, {4, t})));
    const PnlData d = gen_pnl_null(1000, 1, rng);
    CITestConfig cfg;
    cfg.seed = derive_seed(kMasterSeed, {4, t, 9});
    p_lpb[t] = rcot(d.x, d.y, d.z, cfg).p_value;
    cfg.approx_method = ApproxMethod::Perm;
    cfg.num_permutations = 500;
    p_perm[t] = rcot(d.x, d.y, d.z, cfg).p_value;
  });
  // two-sample KS distance
  std::vector<double> a(p_lpb), b(p_perm);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    ks = std::max(ks, std::abs(static_cast<double>(i) / a.size() -
                               static_cast<double>(j) / b.size()));
  }
  out.pass = ks < 0.1;
  out.detail = "two-sample KS(lpb, perm) = " + fmt(ks, 4) + " over " +
               std::to_string(datasets) + " shared datasets";
  return out;
}

// --- 5: power against the hidden-common-cause alternative ------------------
Outcome criterion_power() {
  Outcome out;
  const std::vector<int> all_k{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto by_k =
      run_power_suite({"rcot"}, {1000}, all_k, 200, kMasterSeed, g_threads);
  const auto by_n = run_power_suite({"rcot"}, {500, 5000}, {1}, 200,
                                    kMasterSeed, g_threads);
  double lo = 1.0, hi = 0.0;
  for (const auto& r : by_k) {
    lo = std::min(lo, r.aupc_value);
    hi = std::max(hi, r.aupc_value);
  }
  const double aupc_k1 = by_k.front().aupc_value;
  const double aupc_500 = by_n[0].aupc_value;
  const double aupc_5000 = by_n[1].aupc_value;
  const bool clause_level = aupc_k1 > 0.85;
  const bool clause_steady = (hi - lo) < 0.15;
  const bool clause_monotone = aupc_5000 >= aupc_500 - 0.02;
  out.pass = clause_level && clause_steady && clause_monotone;
  out.detail = "aupc(k=1,n=1000)=" + fmt(aupc_k1, 3) +
               (clause_level ? " > 0.85" : " NOT > 0.85") +
               " | spread over k=" + fmt(hi - lo, 3) +
               (clause_steady ? " < 0.15" : " NOT < 0.15") +
               " | aupc(n=5000)=" + fmt(aupc_5000, 3) +
               " vs aupc(n=500)=" + fmt(aupc_500, 3) +
               (clause_monotone ? " ok" : " NOT ok");
  return out;
}

// --- 6: permutation calibration stays flat in k ----------------------------
Outcome criterion_permutation_calibration() {
  Outcome out;
  const double crit = ks_critical_value(200, 0.01);
  const std::vector<int> all_k{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto reports = run_permutation_calibration({"rcot"}, 1000, all_k, 200,
                                                   kMasterSeed, g_threads);
  bool ok = true;
  std::string detail = "crit=" + fmt(crit, 4) + " ks:";
  for (const auto& r : reports) {
    detail += " " + fmt(r.ks_statistic, 3);
    ok = ok && r.ks_statistic < crit;
  }
  out.pass = ok;
  out.detail = detail;
  return out;
}

// --- 7: near-linear scaling in sample size ----------------------------------
Outcome criterion_scalability() {
  Outcome out;
  const auto rows = run_runtime_benchmark({"rcot"}, {10000, 100000}, 3,
                                          derive_seed(kMasterSeed, {7}));
  const double t_small = rows[0].mean_ms, t_large = rows[1].mean_ms;
  const double ratio = t_large / t_small;

  Rng rng(make_rng(derive_seed(kMasterSeed, {7, 7})));
  const PnlData d = gen_pnl_null(1000000, 1, rng);
  CITestConfig cfg;
  cfg.seed = derive_seed(kMasterSeed, {7, 8});
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = rcot(d.x, d.y, d.z, cfg);
  const double t_million = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
  out.pass = ratio < 15.0 && res.p_value >= 0.0 && res.p_value <= 1.0;
  out.detail = "t(1e4)=" + fmt(t_small, 4) + "ms t(1e5)=" + fmt(t_large, 4) +
               "ms ratio=" + fmt(ratio, 3) + " | n=1e6 completed in " +
               fmt(t_million / 1000.0, 3) + "s (p=" + fmt(res.p_value, 3) + ")";
  return out;
}

// --- 8: the discrete counterexample ----------------------------------------
Outcome criterion_table1() {
  Outcome out;
  const Table1Joint t = table1_joint();
  const double want[2][2] = {{0.126, 0.214}, {0.254, 0.406}};
  double worst_marginal = 0.0, worst_mixture = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      worst_marginal =
          std::max(worst_marginal, std::abs(t.joint_xy(x, y) - want[x][y]));
      worst_mixture = std::max(
          worst_mixture, std::abs(t.joint_xy(x, y) - t.product_mixture(x, y)));
    }
  double min_slice_gap = 1.0;
  for (int z = 0; z < 2; ++z) {
    double gap = 0.0;
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        gap = std::max(gap, std::abs(t.conditional_joint(x, y, z) -
                                     t.conditional_product(x, y, z)));
    min_slice_gap = std::min(min_slice_gap, gap);
  }
  out.pass = worst_marginal <= 1e-12 && worst_mixture <= 1e-12 &&
             min_slice_gap > 0.01;
  out.detail = "marginal err=" + fmt(worst_marginal, 2) +
               " mixture gap=" + fmt(worst_mixture, 2) +
               " min conditional dependence gap=" + fmt(min_slice_gap, 3);
  return out;
}

// --- 9: CLT covariance of the statistic matches the estimated Pi -----------
Outcome criterion_clt_covariance() {
  Outcome out;
  const Eigen::Index n = 2000;
  const int sims = 2000;
  Rng map_rng(make_rng(derive_seed(kMasterSeed, {9, 1})));
  const auto map_x = sample_fourier_map(1, 2, 2.0, map_rng);
  const auto map_y = sample_fourier_map(1, 2, 2.0, map_rng);
  const auto map_z = sample_fourier_map(1, 25, 2.0, map_rng);

  std::vector<Eigen::Vector4d> vecs(static_cast<std::size_t>(sims));
  std::vector<Eigen::Matrix4d> pis(static_cast<std::size_t>(sims));
  parallel_for(static_cast<std::size_t>(sims), g_threads, [&](std::size_t s) {
    Rng rng(make_rng(derive_seed(kMasterSeed, {9, 2, s})));
    std::normal_distribution<double> normal;
    Eigen::MatrixXd z(n, 1), x(n, 1), y(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      z(i, 0) = normal(rng);
      x(i, 0) = z(i, 0) + normal(rng);
      y(i, 0) = std::tanh(z(i, 0) + normal(rng));
    }
    const Eigen::MatrixXd fa = standardized(apply_fourier_map(map_x, x));
    const Eigen::MatrixXd fb = standardized(apply_fourier_map(map_y, y));
    const Eigen::MatrixXd fc = standardized(apply_fourier_map(map_z, z));
    const Eigen::MatrixXd ra = ridge_residualize(fa, fc, 1e-10);
    const Eigen::MatrixXd rb = ridge_residualize(fb, fc, 1e-10);
    const Eigen::MatrixXd cross =
        ra.transpose() * rb / (static_cast<double>(n) - 1.0);
    Eigen::Vector4d w;
    w << cross(0, 0), cross(0, 1), cross(1, 0), cross(1, 1);
    vecs[s] = std::sqrt(static_cast<double>(n)) * w;
    pis[s] = estimate_null_second_moment(ra, rb);
  });

  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d pi_ref = Eigen::Matrix4d::Zero();
  for (int s = 0; s < sims; ++s) {
    cov += vecs[static_cast<std::size_t>(s)] *
           vecs[static_cast<std::size_t>(s)].transpose();
    pi_ref += pis[static_cast<std::size_t>(s)];
  }
  cov /= static_cast<double>(sims);
  pi_ref /= static_cast<double>(sims);

  double worst_rel = 0.0;
  int checked = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (std::abs(pi_ref(i, j)) <= 0.1) continue;
      ++checked;
      worst_rel = std::max(
          worst_rel, std::abs(cov(i, j) - pi_ref(i, j)) / std::abs(pi_ref(i, j)));
    }
  out.pass = checked > 0 && worst_rel <= 0.10;
  out.detail = std::to_string(checked) + " entries with |Pi| > 0.1, worst rel err = " +
               fmt(worst_rel, 4);
  return out;
}

// --- 10: structure discovery at desk scale ---------------------------------
Outcome criterion_discovery() {
  Outcome out;
  out.budget_seconds = 1800.0;
  const auto report = run_discovery_experiment(
      50, 20, 2.0, 500, {"rcot", "fisher-z"}, 0.05,
      derive_seed(kMasterSeed, {10}), g_threads);
  bool oracle_ok = true;
  for (int s : report.oracle_shd) oracle_ok = oracle_ok && s == 0;
  const auto& rcot_out = report.outcomes[0];
  const auto& fzt_out = report.outcomes[1];
  const auto cmp = paired_shd_advantage(rcot_out.shd, fzt_out.shd, 0.05);
  out.pass = oracle_ok && rcot_out.mean_shd <= fzt_out.mean_shd &&
             cmp.significant;
  out.detail = std::string("oracle shd all zero: ") +
               (oracle_ok ? "yes" : "NO") +
               " | mean shd rcot=" + fmt(rcot_out.mean_shd, 3) +
               " fzt=" + fmt(fzt_out.mean_shd, 3) +
               " paired t=" + fmt(cmp.t_statistic, 3) +
               (cmp.significant ? " (significant at 0.05)"
                                : " (NOT significant)");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      wanted.push_back(std::atoi(argv[++i]));
    else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
      g_threads = std::max(1, std::atoi(argv[++i]));
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"weighted chi-square accuracy vs Imhof and Monte Carlo",
       criterion_accuracy},
      {"closed-form chi-square exactness", criterion_exactness},
      {"null calibration across conditioning sizes", criterion_null_calibration},
      {"analytic vs permutation null agreement", criterion_analytic_vs_permutation},
      {"power against the shared-error alternative", criterion_power},
      {"permutation calibration stays flat in k", criterion_permutation_calibration},
      {"near-linear runtime scaling", criterion_scalability},
      {"discrete counterexample joint", criterion_table1},
      {"CLT covariance matches estimated Pi", criterion_clt_covariance},
      {"PC discovery beats the Gaussian baseline", criterion_discovery}};

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), id) == wanted.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    if (o.budget_seconds > 0.0 && secs > o.budget_seconds) {
      o.pass = false;
      o.detail += " | over runtime budget of " + fmt(o.budget_seconds, 4) + "s";
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": "
              << criteria[i].first << " [" << fmt(secs, 3) << "s] "
              << o.detail << std::endl;
    if (!o.pass) ++failures;
  }
  return failures;
}
