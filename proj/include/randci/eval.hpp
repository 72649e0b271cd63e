#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "randci/citest.hpp"
#include "randci/rng.hpp"
#include "randci/synth.hpp"

namespace randci {

// Exact sup-distance between the empirical CDF of the p-values and the
// Uniform[0,1] CDF, evaluated at the jump points from both sides.
inline double ks_uniformity(std::vector<double> p_values) {
  if (p_values.empty())
    throw std::invalid_argument("ks_uniformity: empty sample");
  for (double p : p_values)
    if (!(p >= 0.0) || !(p <= 1.0))
      throw std::invalid_argument("ks_uniformity: value outside [0,1]");
  std::sort(p_values.begin(), p_values.end());
  const double n = static_cast<double>(p_values.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    const double hi = (static_cast<double>(i) + 1.0) / n - p_values[i];
    const double lo = p_values[i] - static_cast<double>(i) / n;
    sup = std::max(sup, std::max(hi, lo));
  }
  return sup;
}

// Asymptotic critical value of the one-sample KS statistic,
// sqrt(-log(alpha/2) / 2) / sqrt(n).
inline double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("ks_critical_value: bad arguments");
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) /
         std::sqrt(static_cast<double>(n));
}

// Area under the empirical CDF of the p-values on [0, 1]. For values inside
// [0, 1] the step integral collapses to 1 - mean(p).
inline double aupc(const std::vector<double>& p_values) {
  if (p_values.empty()) throw std::invalid_argument("aupc: empty sample");
  double total = 0.0;
  for (double p : p_values) {
    if (!(p >= 0.0) || !(p <= 1.0))
      throw std::invalid_argument("aupc: value outside [0,1]");
    total += p;
  }
  return 1.0 - total / static_cast<double>(p_values.size());
}

// Runs fn(i) for i in [0, count) across `threads` workers. Work items own
// derived seeds, so scheduling cannot change any result.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min<int>(threads, static_cast<int>(count));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

// A CI test packaged for the harnesses: x, y, z plus a seed.
using CiTestRunner = std::function<CITestResult(
    const Eigen::MatrixXd&, const Eigen::MatrixXd&, const Eigen::MatrixXd&,
    std::uint64_t)>;

inline CiTestRunner make_test_runner(const std::string& name,
                                     CITestConfig base = {}) {
  if (name == "rcot")
    return [base](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                  const Eigen::MatrixXd& z, std::uint64_t seed) {
      CITestConfig cfg = base;
      cfg.seed = seed;
      return rcot(x, y, z, cfg);
    };
  if (name == "rcit")
    return [base](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                  const Eigen::MatrixXd& z, std::uint64_t seed) {
      CITestConfig cfg = base;
      cfg.seed = seed;
      return rcit(x, y, z, cfg);
    };
  if (name == "fisher-z")
    return [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
              const Eigen::MatrixXd& z, std::uint64_t) {
      return fisher_z(x, y, z);
    };
  throw std::invalid_argument("unknown test: " + name);
}

struct ExperimentReport {
  std::string test;
  std::string design;  // pnl-null | pnl-alt | pnl-alt-permuted
  Eigen::Index n = 0;
  int k = 1;
  int trials = 0;
  std::vector<double> p_values;
  double ks_statistic = 0.0;
  double aupc_value = 0.0;
  double mean_runtime_ms = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

enum class SuiteDesign { Null, Alt, AltPermuted };

inline std::uint64_t design_tag(SuiteDesign d) {
  switch (d) {
    case SuiteDesign::Null: return 1;
    case SuiteDesign::Alt: return 2;
    case SuiteDesign::AltPermuted: return 3;
  }
  return 0;
}

inline std::string design_name(SuiteDesign d) {
  switch (d) {
    case SuiteDesign::Null: return "pnl-null";
    case SuiteDesign::Alt: return "pnl-alt";
    case SuiteDesign::AltPermuted: return "pnl-alt-permuted";
  }
  return "pnl-null";
}

inline std::vector<ExperimentReport> run_suite(
    SuiteDesign design, const std::vector<std::string>& tests,
    const std::vector<Eigen::Index>& sizes, const std::vector<int>& k_values,
    int trials, std::uint64_t seed, int threads) {
  if (tests.empty()) throw std::invalid_argument("suite: no tests given");
  if (trials < 50) throw std::invalid_argument("suite: trials must be >= 50");
  std::vector<ExperimentReport> reports;
  for (std::size_t ti = 0; ti < tests.size(); ++ti) {
    const auto runner = make_test_runner(tests[ti]);
    for (Eigen::Index n : sizes) {
      for (int k : k_values) {
        ExperimentReport rep;
        rep.test = tests[ti];
        rep.design = design_name(design);
        rep.n = n;
        rep.k = k;
        rep.trials = trials;
        rep.seed = seed;
        rep.p_values.assign(static_cast<std::size_t>(trials), 0.0);
        std::vector<double> runtime(static_cast<std::size_t>(trials), 0.0);
        parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
          // data seed shared by every test; test seed private per test
          const std::uint64_t data_seed = derive_seed(
              seed, {design_tag(design), static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(k), t});
          const std::uint64_t test_seed = derive_seed(
              seed, {design_tag(design), static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(k), t, 100 + ti});
          Rng rng = make_rng(data_seed);
          PnlData data = design == SuiteDesign::Null
                             ? gen_pnl_null(n, k, rng)
                             : gen_pnl_alt(n, k, rng);
          if (design == SuiteDesign::AltPermuted) {
            // a non-identity row permutation of x breaks the dependence
            std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
            std::iota(perm.begin(), perm.end(), Eigen::Index{0});
            Rng prng = make_rng(derive_seed(data_seed, {7}));
            do {
              std::shuffle(perm.begin(), perm.end(), prng);
            } while (std::is_sorted(perm.begin(), perm.end()));
            Eigen::MatrixXd xp(n, 1);
            for (Eigen::Index i = 0; i < n; ++i)
              xp(i, 0) = data.x(perm[static_cast<std::size_t>(i)], 0);
            data.x = std::move(xp);
          }
          const auto res = runner(data.x, data.y, data.z, test_seed);
          rep.p_values[t] = res.p_value;
          runtime[t] = res.elapsed_ms;
        });
        rep.ks_statistic = ks_uniformity(rep.p_values);
        rep.aupc_value = aupc(rep.p_values);
        rep.mean_runtime_ms =
            std::accumulate(runtime.begin(), runtime.end(), 0.0) /
            static_cast<double>(trials);
        reports.push_back(std::move(rep));
      }
    }
  }
  return reports;
}

}  // namespace detail

inline std::vector<ExperimentReport> run_calibration_suite(
    const std::vector<std::string>& tests, const std::vector<Eigen::Index>& sizes,
    const std::vector<int>& k_values, int trials, std::uint64_t seed,
    int threads = 1) {
  return detail::run_suite(detail::SuiteDesign::Null, tests, sizes, k_values,
                           trials, seed, threads);
}

inline std::vector<ExperimentReport> run_power_suite(
    const std::vector<std::string>& tests, const std::vector<Eigen::Index>& sizes,
    const std::vector<int>& k_values, int trials, std::uint64_t seed,
    int threads = 1) {
  return detail::run_suite(detail::SuiteDesign::Alt, tests, sizes, k_values,
                           trials, seed, threads);
}

inline std::vector<ExperimentReport> run_permutation_calibration(
    const std::vector<std::string>& tests, Eigen::Index n,
    const std::vector<int>& k_values, int trials, std::uint64_t seed,
    int threads = 1) {
  return detail::run_suite(detail::SuiteDesign::AltPermuted, tests, {n},
                           k_values, trials, seed, threads);
}

struct RuntimeRow {
  std::string test;
  Eigen::Index n = 0;
  int repeats = 0;
  double mean_ms = 0.0;
};

// Times only the CI-test call (never the data generation); one warm-up run
// per condition is discarded.
inline std::vector<RuntimeRow> run_runtime_benchmark(
    const std::vector<std::string>& tests, const std::vector<Eigen::Index>& sizes,
    int repeats, std::uint64_t seed) {
  if (tests.empty()) throw std::invalid_argument("benchmark: no tests given");
  if (repeats < 3) throw std::invalid_argument("benchmark: need repeats >= 3");
  std::vector<RuntimeRow> rows;
  for (std::size_t ti = 0; ti < tests.size(); ++ti) {
    const auto runner = make_test_runner(tests[ti]);
    for (Eigen::Index n : sizes) {
      Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(n)}));
      const PnlData data = gen_pnl_null(n, 1, rng);
      runner(data.x, data.y, data.z, derive_seed(seed, {ti, 0}));  // warm-up
      double total = 0.0;
      for (int r = 1; r <= repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        runner(data.x, data.y, data.z,
               derive_seed(seed, {ti, static_cast<std::uint64_t>(r)}));
        total += std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
      }
      rows.push_back({tests[ti], n, repeats, total / repeats});
    }
  }
  return rows;
}

}  // namespace randci
