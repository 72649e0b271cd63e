#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "randci/citest.hpp"
#include "randci/eval.hpp"
#include "randci/graph.hpp"
#include "randci/rng.hpp"
#include "randci/synth.hpp"

namespace randci {

// p-value of the hypothesis "i independent of j given cond".
using CiFunction =
    std::function<double(int, int, const std::vector<int>&)>;

// Separating sets recorded during skeleton search, keyed by the unordered
// pair that was removed.
struct SepsetMap {
  std::map<std::pair<int, int>, std::vector<int>> sets;

  static std::pair<int, int> key(int i, int j) {
    return {std::min(i, j), std::max(i, j)};
  }
  bool contains(int i, int j) const { return sets.count(key(i, j)) > 0; }
  const std::vector<int>& at(int i, int j) const { return sets.at(key(i, j)); }
  void put(int i, int j, std::vector<int> s) {
    sets[key(i, j)] = std::move(s);
  }
};

struct PcResult {
  Cpdag graph;
  SepsetMap sepsets;
  long tests_run = 0;
};

inline CiFunction d_separation_oracle(const Dag& dag) {
  return [dag](int i, int j, const std::vector<int>& cond) {
    return d_separated(dag, i, j, cond) ? 1.0 : 0.0;
  };
}

// Column-level adapters over a data matrix. The per-call seed depends only on
// the unordered pair and the conditioning set, so PC's visiting order cannot
// change any test outcome.
inline CiFunction make_data_ci(const Eigen::MatrixXd& data,
                               const std::string& test,
                               const CITestConfig& base) {
  const auto runner = make_test_runner(test, base);
  const std::uint64_t master = base.seed;
  return [data, runner, master](int i, int j, const std::vector<int>& cond) {
    const int a = std::min(i, j), b = std::max(i, j);
    std::uint64_t h = derive_seed(
        master, {static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b)});
    std::vector<int> sorted = cond;
    std::sort(sorted.begin(), sorted.end());
    for (int c : sorted) h = derive_seed(h, {static_cast<std::uint64_t>(c)});
    Eigen::MatrixXd z(data.rows(), static_cast<Eigen::Index>(sorted.size()));
    for (std::size_t c = 0; c < sorted.size(); ++c)
      z.col(static_cast<Eigen::Index>(c)) = data.col(sorted[c]);
    return runner(data.col(a), data.col(b), z, h).p_value;
  };
}

namespace detail {

inline bool next_subset(std::vector<int>& idx, int pool_size) {
  const int k = static_cast<int>(idx.size());
  int i = k - 1;
  while (i >= 0 && idx[static_cast<std::size_t>(i)] == pool_size - k + i) --i;
  if (i < 0) return false;
  ++idx[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j)
    idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

}  // namespace detail

// PC-stable skeleton: adjacency sets are frozen per level so the removal
// order within a level cannot influence which tests run.
inline PcResult pc_skeleton(int num_vertices, const CiFunction& ci,
                            double alpha, int max_cond = -1) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("pc: alpha must lie in (0, 1)");
  if (max_cond < 0) max_cond = num_vertices - 2;
  PcResult result;
  result.graph = Cpdag(num_vertices);
  for (int i = 0; i < num_vertices; ++i)
    for (int j = i + 1; j < num_vertices; ++j)
      result.graph.set_undirected(i, j);

  for (int level = 0; level <= max_cond; ++level) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_vertices));
    bool any_candidate = false;
    for (int i = 0; i < num_vertices; ++i) {
      adj[static_cast<std::size_t>(i)] = result.graph.adjacent(i);
      if (static_cast<int>(adj[static_cast<std::size_t>(i)].size()) - 1 >=
          level)
        any_candidate = true;
    }
    if (!any_candidate) break;
    for (int i = 0; i < num_vertices; ++i) {
      for (int j : adj[static_cast<std::size_t>(i)]) {
        if (!result.graph.has_edge(i, j)) continue;  // removed this level
        std::vector<int> pool;
        for (int w : adj[static_cast<std::size_t>(i)])
          if (w != j) pool.push_back(w);
        if (static_cast<int>(pool.size()) < level) continue;
        std::vector<int> idx(static_cast<std::size_t>(level));
        std::iota(idx.begin(), idx.end(), 0);
        bool removed = false;
        do {
          std::vector<int> cond;
          cond.reserve(static_cast<std::size_t>(level));
          for (int c : idx) cond.push_back(pool[static_cast<std::size_t>(c)]);
          ++result.tests_run;
          if (ci(i, j, cond) > alpha) {
            result.graph.remove_edge(i, j);
            result.sepsets.put(i, j, cond);
            removed = true;
            break;
          }
        } while (level > 0 &&
                 detail::next_subset(idx, static_cast<int>(pool.size())));
        if (removed) continue;
      }
    }
  }
  return result;
}

namespace detail {

// Orientation pass. Conflicting v-structures cancel to an undirected edge;
// no rule ever overwrites an existing arrowhead or creates a directed cycle.
inline void orient_colliders(Cpdag& g, const SepsetMap& sepsets) {
  const int v = g.num_vertices();
  std::vector<std::pair<int, int>> heads;  // requested arrowheads a -> b
  for (int k = 0; k < v; ++k) {
    const auto adj = g.adjacent(k);
    for (std::size_t a = 0; a < adj.size(); ++a) {
      for (std::size_t b = a + 1; b < adj.size(); ++b) {
        const int i = adj[a], j = adj[b];
        if (g.has_edge(i, j)) continue;
        if (!sepsets.contains(i, j)) continue;
        const auto& s = sepsets.at(i, j);
        if (std::find(s.begin(), s.end(), k) == s.end()) {
          heads.emplace_back(i, k);
          heads.emplace_back(j, k);
        }
      }
    }
  }
  for (const auto& [a, b] : heads) {
    if (!g.is_undirected(a, b)) continue;  // conflict or already oriented
    const bool reverse_requested =
        std::find(heads.begin(), heads.end(), std::make_pair(b, a)) !=
        heads.end();
    if (reverse_requested) continue;  // conflicting v-structures: leave as is
    if (g.directed_path(b, a)) continue;  // would close a directed cycle
    g.set_directed(a, b);
  }
}

// Meek rules R1-R3, iterated to closure. These are complete when the only
// orientation source is the v-structures.
inline void apply_meek_rules(Cpdag& g) {
  const int v = g.num_vertices();
  bool changed = true;
  const auto orient = [&](int a, int b) {
    if (!g.is_undirected(a, b)) return false;
    if (g.directed_path(b, a)) return false;
    g.set_directed(a, b);
    return true;
  };
  while (changed) {
    changed = false;
    for (int a = 0; a < v; ++a) {
      for (int b = 0; b < v; ++b) {
        if (!g.is_undirected(a, b)) continue;
        // R1: c -> a, a - b, c and b nonadjacent  =>  a -> b
        for (int c = 0; c < v && !changed; ++c)
          if (g.is_directed(c, a) && !g.has_edge(c, b))
            changed = orient(a, b);
        if (changed) break;
        // R2: a -> c -> b with a - b  =>  a -> b
        for (int c = 0; c < v && !changed; ++c)
          if (g.is_directed(a, c) && g.is_directed(c, b))
            changed = orient(a, b);
        if (changed) break;
        // R3: a - c -> b, a - d -> b, c and d nonadjacent  =>  a -> b
        for (int c = 0; c < v && !changed; ++c) {
          if (!(g.is_undirected(a, c) && g.is_directed(c, b))) continue;
          for (int d = c + 1; d < v && !changed; ++d) {
            if (!(g.is_undirected(a, d) && g.is_directed(d, b))) continue;
            if (!g.has_edge(c, d)) changed = orient(a, b);
          }
        }
        if (changed) break;
      }
      if (changed) break;
    }
  }
}

}  // namespace detail

// Full PC-stable: skeleton, collider orientation from sepsets, Meek closure.
inline PcResult pc(int num_vertices, const CiFunction& ci, double alpha,
                   int max_cond = -1) {
  PcResult result = pc_skeleton(num_vertices, ci, alpha, max_cond);
  detail::orient_colliders(result.graph, result.sepsets);
  detail::apply_meek_rules(result.graph);
  return result;
}

struct DiscoveryOutcome {
  std::string test;
  std::vector<int> shd;
  double mean_shd = 0.0;
  double ci95_halfwidth = 0.0;
  double mean_runtime_ms = 0.0;
};

struct DiscoveryReport {
  int num_dags = 0;
  int v = 0;
  double expected_neighbors = 0.0;
  Eigen::Index n = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::vector<int> oracle_shd;  // PC with the d-separation oracle vs truth
  std::vector<DiscoveryOutcome> outcomes;
};

// One-sided paired comparison of SHD lists: returns the t statistic for
// mean(a - b) and whether a < b at the given level.
struct PairedComparison {
  double mean_difference = 0.0;
  double t_statistic = 0.0;
  bool significant = false;
};

inline PairedComparison paired_shd_advantage(const std::vector<int>& a,
                                             const std::vector<int>& b,
                                             double level = 0.05) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("paired comparison: bad inputs");
  const std::size_t m = a.size();
  std::vector<double> diff(m);
  for (std::size_t i = 0; i < m; ++i)
    diff[i] = static_cast<double>(a[i]) - static_cast<double>(b[i]);
  const double mean =
      std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(m);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (static_cast<double>(m) - 1.0));
  PairedComparison out;
  out.mean_difference = mean;
  if (sd == 0.0) {
    out.t_statistic = mean < 0.0 ? -std::numeric_limits<double>::infinity()
                     : mean > 0.0 ? std::numeric_limits<double>::infinity()
                                  : 0.0;
    out.significant = mean < 0.0;
    return out;
  }
  out.t_statistic = mean / (sd / std::sqrt(static_cast<double>(m)));
  const boost::math::students_t_distribution<> tdist(
      static_cast<double>(m) - 1.0);
  out.significant = out.t_statistic < boost::math::quantile(tdist, level);
  return out;
}

// The end-to-end discovery experiment: random nonlinear-Gaussian DAG data,
// PC per CI test, SHD against the true CPDAG.
inline DiscoveryReport run_discovery_experiment(
    int num_dags, int v, double expected_neighbors, Eigen::Index n,
    const std::vector<std::string>& tests, double alpha, std::uint64_t seed,
    int threads = 1) {
  if (num_dags < 10)
    throw std::invalid_argument("discovery experiment: need >= 10 dags");
  DiscoveryReport report;
  report.num_dags = num_dags;
  report.v = v;
  report.expected_neighbors = expected_neighbors;
  report.n = n;
  report.alpha = alpha;
  report.seed = seed;
  report.oracle_shd.assign(static_cast<std::size_t>(num_dags), 0);
  for (const auto& t : tests) {
    DiscoveryOutcome o;
    o.test = t;
    o.shd.assign(static_cast<std::size_t>(num_dags), 0);
    report.outcomes.push_back(std::move(o));
  }
  std::vector<std::vector<double>> runtime(
      tests.size(), std::vector<double>(static_cast<std::size_t>(num_dags)));

  parallel_for(static_cast<std::size_t>(num_dags), threads, [&](std::size_t d) {
    Rng rng = make_rng(derive_seed(seed, {d, 1}));
    const Dag dag = gen_random_dag(v, expected_neighbors, rng);
    const Eigen::MatrixXd data =
        simulate_dag_data(dag, n, /*nonlinear=*/true, rng);
    const Cpdag truth = cpdag_from_dag(dag);
    const PcResult oracle = pc(v, d_separation_oracle(dag), alpha);
    report.oracle_shd[d] = structural_hamming_distance(oracle.graph, truth);
    for (std::size_t ti = 0; ti < tests.size(); ++ti) {
      CITestConfig cfg;
      cfg.seed = derive_seed(seed, {d, 2, ti});
      const auto ci = make_data_ci(data, tests[ti], cfg);
      const auto t0 = std::chrono::steady_clock::now();
      const PcResult run = pc(v, ci, alpha);
      runtime[ti][d] = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
      report.outcomes[ti].shd[d] =
          structural_hamming_distance(run.graph, truth);
    }
  });

  for (std::size_t ti = 0; ti < tests.size(); ++ti) {
    auto& o = report.outcomes[ti];
    const double m = static_cast<double>(num_dags);
    o.mean_shd = std::accumulate(o.shd.begin(), o.shd.end(), 0.0) / m;
    double ss = 0.0;
    for (int s : o.shd) ss += (s - o.mean_shd) * (s - o.mean_shd);
    o.ci95_halfwidth = 1.96 * std::sqrt(ss / (m - 1.0) / m);
    o.mean_runtime_ms =
        std::accumulate(runtime[ti].begin(), runtime[ti].end(), 0.0) / m;
  }
  return report;
}

}  // namespace randci
