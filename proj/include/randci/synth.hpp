#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "randci/data.hpp"
#include "randci/graph.hpp"
#include "randci/rng.hpp"

namespace randci {

// The post non-linear transformations the simulation designs draw from.
enum class Nonlinearity { Identity, Square, Cube, Tanh, NegExp };

inline std::string to_string(Nonlinearity g) {
  switch (g) {
    case Nonlinearity::Identity: return "identity";
    case Nonlinearity::Square: return "square";
    case Nonlinearity::Cube: return "cube";
    case Nonlinearity::Tanh: return "tanh";
    case Nonlinearity::NegExp: return "negexp";
  }
  return "identity";
}

inline double apply_nonlinearity(Nonlinearity g, double u) {
  switch (g) {
    case Nonlinearity::Identity: return u;
    case Nonlinearity::Square: return u * u;
    case Nonlinearity::Cube: return u * u * u;
    case Nonlinearity::Tanh: return std::tanh(u);
    case Nonlinearity::NegExp: return std::exp(-std::abs(u));
  }
  return u;
}

inline Nonlinearity sample_nonlinearity(Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 4);
  return static_cast<Nonlinearity>(pick(rng));
}

struct PnlData {
  Eigen::MatrixXd x;  // n x 1
  Eigen::MatrixXd y;  // n x 1
  Eigen::MatrixXd z;  // n x k
  Nonlinearity g1 = Nonlinearity::Identity;
  Nonlinearity g2 = Nonlinearity::Identity;
};

namespace detail {

inline void check_pnl_args(Eigen::Index n, int k) {
  if (n < 2) throw std::invalid_argument("pnl generator: need n >= 2");
  if (k < 1) throw std::invalid_argument("pnl generator: need k >= 1");
}

}  // namespace detail

// Null design: X = g1(mean(Z) + e1), Y = g2(mean(Z) + e2) with Z an n x k
// standard Gaussian block, so X and Y are conditionally independent given Z
// by construction. Explicit g overload for tests that pin the transforms.
inline PnlData gen_pnl_null(Eigen::Index n, int k, Rng& rng, Nonlinearity g1,
                            Nonlinearity g2) {
  detail::check_pnl_args(n, k);
  std::normal_distribution<double> normal(0.0, 1.0);
  PnlData out;
  out.g1 = g1;
  out.g2 = g2;
  out.z.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) out.z(i, j) = normal(rng);
  out.x.resize(n, 1);
  out.y.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zbar = out.z.row(i).mean();
    out.x(i, 0) = apply_nonlinearity(g1, zbar + normal(rng));
    out.y(i, 0) = apply_nonlinearity(g2, zbar + normal(rng));
  }
  return out;
}

inline PnlData gen_pnl_null(Eigen::Index n, int k, Rng& rng) {
  const Nonlinearity g1 = sample_nonlinearity(rng);
  const Nonlinearity g2 = sample_nonlinearity(rng);
  return gen_pnl_null(n, k, rng, g1, g2);
}

// Alternative design: a shared hidden error e_b ~ N(0, 1/16) couples X and Y
// while Z is independent noise, so X and Y are conditionally dependent given
// Z no matter the conditioning.
inline PnlData gen_pnl_alt(Eigen::Index n, int k, Rng& rng, Nonlinearity g1,
                           Nonlinearity g2) {
  detail::check_pnl_args(n, k);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr double shared_sd = 0.25;  // variance 1/16
  PnlData out;
  out.g1 = g1;
  out.g2 = g2;
  out.x.resize(n, 1);
  out.y.resize(n, 1);
  out.z.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double eb = shared_sd * normal(rng);
    out.x(i, 0) = apply_nonlinearity(g1, eb + normal(rng));
    out.y(i, 0) = apply_nonlinearity(g2, eb + normal(rng));
    for (int j = 0; j < k; ++j) out.z(i, j) = normal(rng);
  }
  return out;
}

inline PnlData gen_pnl_alt(Eigen::Index n, int k, Rng& rng) {
  const Nonlinearity g1 = sample_nonlinearity(rng);
  const Nonlinearity g2 = sample_nonlinearity(rng);
  return gen_pnl_alt(n, k, rng, g1, g2);
}

// Random lower-triangular DAG: each lower-triangle cell holds an edge with
// probability expected_neighbors / (v - 1); present edges get a weight drawn
// uniformly from [-1, -0.1] u [0.1, 1].
inline Dag gen_random_dag(int v, double expected_neighbors, Rng& rng) {
  if (v < 2) throw std::invalid_argument("gen_random_dag: need v >= 2");
  if (!(expected_neighbors > 0.0) || expected_neighbors > v - 1)
    throw std::invalid_argument("gen_random_dag: bad expected neighborhood");
  const double edge_prob = expected_neighbors / (v - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(v, v);
  for (int i = 1; i < v; ++i)
    for (int j = 0; j < i; ++j)
      if (unif(rng) < edge_prob) {
        const double mag = 0.1 + 0.9 * unif(rng);
        w(i, j) = unif(rng) < 0.5 ? -mag : mag;
      }
  return make_dag(std::move(w));
}

// Linear Gaussian simulation in topological order; when nonlinear, every
// column is afterwards passed through an independently sampled transform.
// The nonlinearity draws happen after the noise draws so linear and
// nonlinear runs share the same underlying sample for a given rng state.
inline Eigen::MatrixXd simulate_dag_data(const Dag& dag, Eigen::Index n,
                                         bool nonlinear, Rng& rng,
                                         std::vector<Nonlinearity>* tags_out =
                                             nullptr) {
  if (n < 1) throw std::invalid_argument("simulate_dag_data: need n >= 1");
  const int v = dag.num_vertices();
  const auto topo = topological_order(dag);
  if (topo.empty() && v > 0)
    throw std::invalid_argument("simulate_dag_data: graph has a cycle");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd data(n, v);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < v; ++j) data(i, j) = normal(rng);
  for (int idx : topo) {
    for (int p : dag.parents(idx))
      data.col(idx) += dag.weights(idx, p) * data.col(p);
  }
  if (nonlinear) {
    std::vector<Nonlinearity> tags(static_cast<std::size_t>(v));
    for (int j = 0; j < v; ++j) tags[static_cast<std::size_t>(j)] =
        sample_nonlinearity(rng);
    for (int j = 0; j < v; ++j) {
      const Nonlinearity g = tags[static_cast<std::size_t>(j)];
      data.col(j) = data.col(j).unaryExpr(
          [g](double u) { return apply_nonlinearity(g, u); });
    }
    if (tags_out) *tags_out = std::move(tags);
  } else if (tags_out) {
    tags_out->assign(static_cast<std::size_t>(v), Nonlinearity::Identity);
  }
  return data;
}

struct SelectionMetadata {
  std::vector<int> latent_vertices;
  std::vector<int> selection_vertices;
  std::vector<double> selection_quantiles;
  Eigen::Index rows_before = 0;
  Eigen::Index rows_after = 0;
};

// Drops the rows whose value in `column` lies in the bottom q fraction.
inline Eigen::MatrixXd apply_selection(const Eigen::MatrixXd& data, int column,
                                       double q) {
  if (column < 0 || column >= data.cols())
    throw std::invalid_argument("apply_selection: bad column");
  if (!(q >= 0.0) || q >= 1.0)
    throw std::invalid_argument("apply_selection: q must lie in [0, 1)");
  const Eigen::Index n = data.rows();
  const Eigen::Index drop = static_cast<Eigen::Index>(
      std::floor(q * static_cast<double>(n)));
  if (drop == 0) return data;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::nth_element(order.begin(), order.begin() + drop, order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return data(a, column) < data(b, column);
                   });
  std::vector<Eigen::Index> keep(order.begin() + drop, order.end());
  std::sort(keep.begin(), keep.end());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), data.cols());
  for (std::size_t i = 0; i < keep.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = data.row(keep[i]);
  return out;
}

namespace detail {

inline std::vector<int> draw_subset(const std::vector<int>& eligible,
                                    int max_count, Rng& rng) {
  std::uniform_int_distribution<int> count_dist(0, max_count);
  int want = count_dist(rng);
  want = std::min<int>(want, static_cast<int>(eligible.size()));
  std::vector<int> pool = eligible;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(want));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detail

// Latent-and-selection wrapper over simulated DAG data. Latents are drawn
// among vertices with at least two children (common causes), selection
// variables among the remaining vertices with at least two parents
// (colliders); each selection variable truncates its bottom q quantile with
// q ~ Uniform[0.1, 0.5], then latent columns are removed.
inline std::pair<DataMatrix, SelectionMetadata> apply_latent_and_selection(
    const DataMatrix& data, const Dag& dag, Rng& rng) {
  if (data.p() != dag.num_vertices())
    throw std::invalid_argument(
        "apply_latent_and_selection: column count must match dag");
  SelectionMetadata meta;
  meta.rows_before = data.n();

  std::vector<int> latent_eligible;
  for (int i = 0; i < dag.num_vertices(); ++i)
    if (dag.children(i).size() >= 2) latent_eligible.push_back(i);
  meta.latent_vertices = detail::draw_subset(latent_eligible, 3, rng);

  std::vector<int> collider_eligible;
  for (int i = 0; i < dag.num_vertices(); ++i) {
    if (std::find(meta.latent_vertices.begin(), meta.latent_vertices.end(),
                  i) != meta.latent_vertices.end())
      continue;
    if (dag.parents(i).size() >= 2) collider_eligible.push_back(i);
  }
  meta.selection_vertices = detail::draw_subset(collider_eligible, 3, rng);

  Eigen::MatrixXd values = data.values;
  std::uniform_real_distribution<double> qdist(0.1, 0.5);
  for (int s : meta.selection_vertices) {
    const double q = qdist(rng);
    meta.selection_quantiles.push_back(q);
    values = apply_selection(values, s, q);
  }
  meta.rows_after = values.rows();

  std::vector<int> kept;
  for (int i = 0; i < dag.num_vertices(); ++i)
    if (std::find(meta.latent_vertices.begin(), meta.latent_vertices.end(),
                  i) == meta.latent_vertices.end())
      kept.push_back(i);
  Eigen::MatrixXd reduced(values.rows(), static_cast<Eigen::Index>(kept.size()));
  std::vector<std::string> names;
  for (std::size_t c = 0; c < kept.size(); ++c) {
    reduced.col(static_cast<Eigen::Index>(c)) = values.col(kept[c]);
    if (!data.column_names.empty())
      names.push_back(data.column_names[static_cast<std::size_t>(kept[c])]);
    else
      names.push_back(dag.vertex_names[static_cast<std::size_t>(kept[c])]);
  }
  return {DataMatrix{std::move(reduced), std::move(names)}, std::move(meta)};
}

// The discrete counterexample: binary (X, Y, Z) whose conditional slices are
// dependent while the Z-mixture of the joint equals the Z-mixture of the
// conditional products exactly.
struct Table1Joint {
  // pz[z], px_z[x][z], py_z[y][z], pxy_z[x][y][z]
  double pz[2] = {0.2, 0.8};
  double px_z[2][2] = {{0.5, 0.3}, {0.5, 0.7}};
  double py_z[2][2] = {{0.3, 0.4}, {0.7, 0.6}};
  double pxy_z[2][2][2] = {{{0.2, 0.1075}, {0.3, 0.1925}},
                           {{0.1, 0.2925}, {0.4, 0.4075}}};

  double joint(int x, int y, int z) const { return pz[z] * pxy_z[x][y][z]; }
  double joint_xy(int x, int y) const {
    return joint(x, y, 0) + joint(x, y, 1);
  }
  // sum_z P(z) P(x|z) P(y|z)
  double product_mixture(int x, int y) const {
    return pz[0] * px_z[x][0] * py_z[y][0] + pz[1] * px_z[x][1] * py_z[y][1];
  }
  double conditional_joint(int x, int y, int z) const { return pxy_z[x][y][z]; }
  double conditional_product(int x, int y, int z) const {
    return px_z[x][z] * py_z[y][z];
  }
};

inline Table1Joint table1_joint() { return Table1Joint{}; }

}  // namespace randci
