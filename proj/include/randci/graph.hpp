#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace randci {

// Weighted DAG. weights(i, j) != 0 encodes an edge j -> i, matching the
// structural equations X_i = sum_j weights(i, j) X_j + eps_i. Generated
// graphs have strictly lower-triangular support; ingested graphs may use any
// vertex order as long as they are acyclic.
struct Dag {
  Eigen::MatrixXd weights;
  std::vector<std::string> vertex_names;

  int num_vertices() const { return static_cast<int>(weights.rows()); }

  bool has_edge(int from, int to) const { return weights(to, from) != 0.0; }

  std::vector<int> parents(int i) const {
    std::vector<int> out;
    for (int j = 0; j < num_vertices(); ++j)
      if (weights(i, j) != 0.0) out.push_back(j);
    return out;
  }
  std::vector<int> children(int i) const {
    std::vector<int> out;
    for (int j = 0; j < num_vertices(); ++j)
      if (weights(j, i) != 0.0) out.push_back(j);
    return out;
  }
};

inline Dag make_dag(Eigen::MatrixXd weights,
                    std::vector<std::string> names = {}) {
  if (weights.rows() != weights.cols())
    throw std::invalid_argument("dag weights must be square");
  if (names.empty()) {
    names.reserve(static_cast<std::size_t>(weights.rows()));
    for (Eigen::Index i = 0; i < weights.rows(); ++i)
      names.push_back("X" + std::to_string(i + 1));
  } else if (static_cast<Eigen::Index>(names.size()) != weights.rows()) {
    throw std::invalid_argument("dag vertex name count mismatch");
  }
  return Dag{std::move(weights), std::move(names)};
}

// Kahn toposort; empty result means the graph has a cycle.
inline std::vector<int> topological_order(const Dag& dag) {
  const int v = dag.num_vertices();
  std::vector<int> indeg(v, 0);
  for (int i = 0; i < v; ++i)
    indeg[i] = static_cast<int>(dag.parents(i).size());
  std::deque<int> ready;
  for (int i = 0; i < v; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::vector<int> order;
  while (!ready.empty()) {
    const int u = ready.front();
    ready.pop_front();
    order.push_back(u);
    for (int c : dag.children(u))
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (static_cast<int>(order.size()) != v) order.clear();
  return order;
}

inline bool is_acyclic(const Dag& dag) {
  return !topological_order(dag).empty() || dag.num_vertices() == 0;
}

// d-separation via the reachable-trail construction: walk (vertex,
// direction) states, passing through colliders only when an ancestor of the
// conditioning set, and through non-colliders only when unconditioned.
inline bool d_separated(const Dag& dag, int x, int y,
                        const std::vector<int>& z) {
  const int v = dag.num_vertices();
  if (x < 0 || x >= v || y < 0 || y >= v)
    throw std::invalid_argument("d_separated: vertex out of range");
  if (x == y) throw std::invalid_argument("d_separated: x == y");
  std::vector<bool> in_z(static_cast<std::size_t>(v), false);
  for (int c : z) {
    if (c < 0 || c >= v) throw std::invalid_argument("d_separated: bad z");
    if (c == x || c == y)
      throw std::invalid_argument("d_separated: z contains an endpoint");
    in_z[static_cast<std::size_t>(c)] = true;
  }
  // ancestors of z (including z)
  std::vector<bool> anc_z(static_cast<std::size_t>(v), false);
  {
    std::deque<int> queue(z.begin(), z.end());
    for (int c : z) anc_z[static_cast<std::size_t>(c)] = true;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int p : dag.parents(u))
        if (!anc_z[static_cast<std::size_t>(p)]) {
          anc_z[static_cast<std::size_t>(p)] = true;
          queue.push_back(p);
        }
    }
  }
  // states: (vertex, entered-from-child?) i.e. direction of travel into it
  enum { FromChild = 0, FromParent = 1 };
  std::vector<std::array<bool, 2>> seen(static_cast<std::size_t>(v),
                                        {false, false});
  std::deque<std::pair<int, int>> queue;
  queue.emplace_back(x, FromChild);  // as if we came "up" into x
  seen[static_cast<std::size_t>(x)][FromChild] = true;
  while (!queue.empty()) {
    auto [u, dir] = queue.front();
    queue.pop_front();
    if (u == y) return false;
    const bool conditioned = in_z[static_cast<std::size_t>(u)];
    const auto push = [&](int w, int d) {
      if (!seen[static_cast<std::size_t>(w)][static_cast<std::size_t>(d)]) {
        seen[static_cast<std::size_t>(w)][static_cast<std::size_t>(d)] = true;
        queue.emplace_back(w, d);
      }
    };
    if (dir == FromChild && !conditioned) {
      for (int p : dag.parents(u)) push(p, FromChild);
      for (int c : dag.children(u)) push(c, FromParent);
    } else if (dir == FromParent) {
      if (!conditioned)
        for (int c : dag.children(u)) push(c, FromParent);
      if (anc_z[static_cast<std::size_t>(u)])
        for (int p : dag.parents(u)) push(p, FromChild);
    }
  }
  return true;
}

// Partially directed graph over a fixed vertex set. mark(i, j) set means the
// pair is linked with an arrowhead at j; both marks set means undirected.
class Cpdag {
 public:
  Cpdag() = default;
  explicit Cpdag(int num_vertices)
      : v_(num_vertices),
        mark_(static_cast<std::size_t>(num_vertices) * num_vertices, 0) {}

  int num_vertices() const { return v_; }

  bool has_edge(int i, int j) const { return at(i, j) || at(j, i); }
  bool is_directed(int i, int j) const { return at(i, j) && !at(j, i); }
  bool is_undirected(int i, int j) const { return at(i, j) && at(j, i); }

  void set_undirected(int i, int j) {
    check(i, j);
    at(i, j) = 1;
    at(j, i) = 1;
  }
  void set_directed(int i, int j) {
    check(i, j);
    at(i, j) = 1;
    at(j, i) = 0;
  }
  void remove_edge(int i, int j) {
    check(i, j);
    at(i, j) = 0;
    at(j, i) = 0;
  }

  std::vector<int> adjacent(int i) const {
    std::vector<int> out;
    for (int j = 0; j < v_; ++j)
      if (j != i && has_edge(i, j)) out.push_back(j);
    return out;
  }

  struct Edge {
    int from, to;
    bool directed;
  };
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (int i = 0; i < v_; ++i)
      for (int j = 0; j < v_; ++j) {
        if (is_directed(i, j)) out.push_back({i, j, true});
        if (i < j && is_undirected(i, j)) out.push_back({i, j, false});
      }
    return out;
  }

  // true if the directed subgraph would gain a cycle by orienting i -> j
  bool directed_path(int from, int to) const {
    std::vector<bool> seen(static_cast<std::size_t>(v_), false);
    std::deque<int> queue{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      if (u == to) return true;
      for (int w = 0; w < v_; ++w)
        if (is_directed(u, w) && !seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          queue.push_back(w);
        }
    }
    return false;
  }

 private:
  std::uint8_t& at(int i, int j) {
    return mark_[static_cast<std::size_t>(i) * v_ + j];
  }
  std::uint8_t at(int i, int j) const {
    return mark_[static_cast<std::size_t>(i) * v_ + j];
  }
  void check(int i, int j) const {
    if (i == j || i < 0 || j < 0 || i >= v_ || j >= v_)
      throw std::invalid_argument("cpdag: bad vertex pair");
  }

  int v_ = 0;
  std::vector<std::uint8_t> mark_;
};

// Number of vertex pairs whose status (absent / undirected / i->j / j->i)
// differs between the two graphs.
inline int structural_hamming_distance(const Cpdag& a, const Cpdag& b) {
  if (a.num_vertices() != b.num_vertices())
    throw std::invalid_argument("shd: vertex counts differ");
  int dist = 0;
  for (int i = 0; i < a.num_vertices(); ++i)
    for (int j = i + 1; j < a.num_vertices(); ++j) {
      const auto status = [&](const Cpdag& g) {
        if (g.is_directed(i, j)) return 1;
        if (g.is_directed(j, i)) return 2;
        if (g.is_undirected(i, j)) return 3;
        return 0;
      };
      if (status(a) != status(b)) ++dist;
    }
  return dist;
}

// Chickering's edge-labelling algorithm: the CPDAG of a DAG keeps an edge
// directed exactly when it is compelled in every member of the Markov
// equivalence class.
inline Cpdag cpdag_from_dag(const Dag& dag) {
  const int v = dag.num_vertices();
  const auto topo = topological_order(dag);
  if (topo.empty() && v > 0)
    throw std::invalid_argument("cpdag_from_dag: graph has a cycle");
  std::vector<int> topo_pos(static_cast<std::size_t>(v), 0);
  for (int i = 0; i < v; ++i)
    topo_pos[static_cast<std::size_t>(topo[static_cast<std::size_t>(i)])] = i;

  // order edges: by topological position of the child, then reverse
  // topological position of the parent
  struct E {
    int from, to;
  };
  std::vector<E> ordered;
  for (int i = 0; i < v; ++i) {
    const int y = topo[static_cast<std::size_t>(i)];
    auto ps = dag.parents(y);
    std::sort(ps.begin(), ps.end(), [&](int a, int b) {
      return topo_pos[static_cast<std::size_t>(a)] >
             topo_pos[static_cast<std::size_t>(b)];
    });
    for (int x : ps) ordered.push_back({x, y});
  }

  enum Label { Unknown = 0, Compelled = 1, Reversible = 2 };
  Eigen::MatrixXi label = Eigen::MatrixXi::Zero(v, v);  // label(from, to)
  const auto parents_of = [&](int node) { return dag.parents(node); };

  for (const auto& [x, y] : ordered) {
    if (label(x, y) != Unknown) continue;
    bool done = false;
    for (int w : parents_of(x)) {
      if (label(w, x) != Compelled) continue;
      if (!dag.has_edge(w, y)) {
        // w -> x -> y with w not a parent of y: everything into y compelled
        for (int p : parents_of(y)) label(p, y) = Compelled;
        done = true;
        break;
      }
      label(w, y) = Compelled;
    }
    if (done) continue;
    bool exists_z = false;
    for (int zz : parents_of(y)) {
      if (zz == x) continue;
      if (!dag.has_edge(zz, x)) {
        exists_z = true;
        break;
      }
    }
    for (int p : parents_of(y))
      if (label(p, y) == Unknown)
        label(p, y) = exists_z ? Compelled : Reversible;
  }

  Cpdag out(v);
  for (int y = 0; y < v; ++y)
    for (int x : parents_of(y)) {
      if (label(x, y) == Compelled)
        out.set_directed(x, y);
      else
        out.set_undirected(x, y);
    }
  return out;
}

}  // namespace randci
