#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "randci/citest.hpp"
#include "randci/data.hpp"
#include "randci/eval.hpp"
#include "randci/graph.hpp"
#include "randci/pc.hpp"
#include "randci/synth.hpp"

namespace randci {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV: comma separated, header row required, '.' decimal, UTF-8. Any cell
// that does not parse as a 64-bit float aborts with a row/column diagnostic.
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline DataMatrix read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> names = split_csv_line(line);
  if (names.empty()) throw std::invalid_argument("csv: empty header row");
  std::vector<double> cells;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tokens = split_csv_line(line);
    ++rows;
    if (tokens.size() != names.size())
      throw std::invalid_argument("csv: row " + std::to_string(rows) + " has " +
                                  std::to_string(tokens.size()) +
                                  " cells, expected " +
                                  std::to_string(names.size()));
    for (std::size_t c = 0; c < tokens.size(); ++c) {
      const std::string& tok = tokens[c];
      double value = 0.0;
      const char* begin = tok.data();
      const char* end = tok.data() + tok.size();
      while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc{} || ptr != end)
        throw std::invalid_argument("csv: unparsable cell at row " +
                                    std::to_string(rows) + ", column " +
                                    std::to_string(c + 1) + " ('" + tok + "')");
      cells.push_back(value);
    }
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows),
                         static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < names.size(); ++c)
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          cells[r * names.size() + c];
  return make_data(std::move(values), names);
}

inline DataMatrix read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  return read_csv(in);
}

inline void write_csv(std::ostream& out, const DataMatrix& data) {
  char buf[32];
  for (Eigen::Index c = 0; c < data.p(); ++c) {
    if (c) out << ',';
    out << (data.column_names.empty() ? "c" + std::to_string(c + 1)
                                      : data.column_names[static_cast<std::size_t>(c)]);
  }
  out << '\n';
  for (Eigen::Index r = 0; r < data.n(); ++r) {
    for (Eigen::Index c = 0; c < data.p(); ++c) {
      if (c) out << ',';
      const auto [ptr, ec] =
          std::to_chars(buf, buf + sizeof(buf), data.values(r, c));
      out.write(buf, ptr - buf);
      (void)ec;
    }
    out << '\n';
  }
}

inline void write_csv_file(const std::string& path, const DataMatrix& data) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  write_csv(out, data);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json to_json(const CITestResult& r) {
  return json{{"statistic", r.statistic},
              {"p_value", r.p_value},
              {"method", r.method},
              {"eigenvalue_count", r.eigenvalues.size()},
              {"eigenvalues", r.eigenvalues},
              {"n", r.n},
              {"elapsed_ms", r.elapsed_ms},
              {"fallback", r.fallback_flag}};
}

inline json to_json(const ExperimentReport& r) {
  return json{{"test", r.test},
              {"design", r.design},
              {"n", r.n},
              {"k", r.k},
              {"trials", r.trials},
              {"p_values", r.p_values},
              {"ks_statistic", r.ks_statistic},
              {"aupc", r.aupc_value},
              {"mean_runtime_ms", r.mean_runtime_ms},
              {"seed", r.seed}};
}

inline ExperimentReport experiment_report_from_json(const json& j) {
  ExperimentReport r;
  r.test = j.at("test").get<std::string>();
  r.design = j.at("design").get<std::string>();
  r.n = j.at("n").get<Eigen::Index>();
  r.k = j.at("k").get<int>();
  r.trials = j.at("trials").get<int>();
  r.p_values = j.at("p_values").get<std::vector<double>>();
  r.ks_statistic = j.at("ks_statistic").get<double>();
  r.aupc_value = j.at("aupc").get<double>();
  r.mean_runtime_ms = j.at("mean_runtime_ms").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

inline json to_json(const Dag& dag) {
  json edges = json::array();
  for (int i = 0; i < dag.num_vertices(); ++i)
    for (int p : dag.parents(i))
      edges.push_back(json{{"from", p}, {"to", i}, {"weight", dag.weights(i, p)}});
  return json{{"num_vertices", dag.num_vertices()},
              {"vertex_names", dag.vertex_names},
              {"edges", edges}};
}

inline Dag dag_from_json(const json& j) {
  const int v = j.at("num_vertices").get<int>();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(v, v);
  for (const auto& e : j.at("edges")) {
    const int from = e.at("from").get<int>();
    const int to = e.at("to").get<int>();
    if (from < 0 || from >= v || to < 0 || to >= v || from == to)
      throw std::invalid_argument("dag json: bad edge endpoints");
    w(to, from) = e.contains("weight") ? e.at("weight").get<double>() : 1.0;
  }
  std::vector<std::string> names;
  if (j.contains("vertex_names"))
    names = j.at("vertex_names").get<std::vector<std::string>>();
  Dag dag = make_dag(std::move(w), std::move(names));
  if (!is_acyclic(dag))
    throw std::invalid_argument("dag json: graph contains a cycle");
  return dag;
}

inline json to_json(const Cpdag& g) {
  json edges = json::array();
  for (const auto& e : g.edges())
    edges.push_back(json{{"from", e.from},
                         {"to", e.to},
                         {"mark", e.directed ? "directed" : "undirected"}});
  return json{{"num_vertices", g.num_vertices()}, {"edges", edges}};
}

inline Cpdag cpdag_from_json(const json& j) {
  Cpdag g(j.at("num_vertices").get<int>());
  for (const auto& e : j.at("edges")) {
    const int from = e.at("from").get<int>();
    const int to = e.at("to").get<int>();
    const std::string mark = e.at("mark").get<std::string>();
    if (mark == "directed")
      g.set_directed(from, to);
    else if (mark == "undirected")
      g.set_undirected(from, to);
    else
      throw std::invalid_argument("cpdag json: unknown mark " + mark);
  }
  return g;
}

// Adjacency-matrix CSV for a CPDAG: cell (i, j) is 1 when the pair carries an
// arrowhead at j (both cells set for an undirected edge).
inline void write_cpdag_csv(std::ostream& out, const Cpdag& g,
                            const std::vector<std::string>& names = {}) {
  const int v = g.num_vertices();
  for (int j = 0; j < v; ++j) {
    if (j) out << ',';
    out << (names.empty() ? "X" + std::to_string(j + 1)
                          : names[static_cast<std::size_t>(j)]);
  }
  out << '\n';
  for (int i = 0; i < v; ++i) {
    for (int j = 0; j < v; ++j) {
      if (j) out << ',';
      const bool head_at_j =
          i != j && (g.is_directed(i, j) || g.is_undirected(i, j));
      out << (head_at_j ? 1 : 0);
    }
    out << '\n';
  }
}

inline Cpdag cpdag_from_adjacency(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("cpdag adjacency must be square");
  const int v = static_cast<int>(a.rows());
  Cpdag g(v);
  for (int i = 0; i < v; ++i)
    for (int j = i + 1; j < v; ++j) {
      const bool ij = a(i, j) != 0.0, ji = a(j, i) != 0.0;
      if (ij && ji)
        g.set_undirected(i, j);
      else if (ij)
        g.set_directed(i, j);
      else if (ji)
        g.set_directed(j, i);
    }
  return g;
}

inline json to_json(const DiscoveryReport& r) {
  json outcomes = json::array();
  for (const auto& o : r.outcomes)
    outcomes.push_back(json{{"test", o.test},
                            {"shd", o.shd},
                            {"mean_shd", o.mean_shd},
                            {"ci95_halfwidth", o.ci95_halfwidth},
                            {"mean_runtime_ms", o.mean_runtime_ms}});
  return json{{"num_dags", r.num_dags},
              {"v", r.v},
              {"expected_neighbors", r.expected_neighbors},
              {"n", r.n},
              {"alpha", r.alpha},
              {"seed", r.seed},
              {"oracle_shd", r.oracle_shd},
              {"outcomes", outcomes}};
}

inline json to_json(const SelectionMetadata& m) {
  return json{{"latent_vertices", m.latent_vertices},
              {"selection_vertices", m.selection_vertices},
              {"selection_quantiles", m.selection_quantiles},
              {"rows_before", m.rows_before},
              {"rows_after", m.rows_after}};
}

}  // namespace randci
