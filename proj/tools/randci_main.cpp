// Command-line surface: data ingestion, single CI tests, simulation suites,
// null-approximation accuracy tables, and PC-based structure discovery.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "randci/randci.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int default_threads() {
  if (const char* env = std::getenv("RANDCI_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

struct Manifest {
  std::string command;
  randci::json config;
  std::uint64_t seed = 0;
  std::string started_at;

  randci::json finish() const {
    return randci::json{{"command", command},       {"config", config},
                        {"seed", seed},             {"tool_version", kVersion},
                        {"started_at", started_at}, {"finished_at", iso_timestamp()}};
  }
};

void emit_json(const randci::json& doc, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write file: " + out_path);
  out << doc.dump(2) << '\n';
}

// "1,3,5..8" -> {1,3,5,6,7,8}
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(std::stoi(item));
    } else {
      const int lo = std::stoi(item.substr(0, dots));
      const int hi = std::stoi(item.substr(dots + 2));
      if (hi < lo) throw std::invalid_argument("bad range: " + item);
      for (int v = lo; v <= hi; ++v) out.push_back(v);
    }
  }
  if (out.empty()) throw std::invalid_argument("empty integer list");
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Eigen::MatrixXd select_columns(const randci::DataMatrix& data,
                               const std::vector<std::string>& names) {
  Eigen::MatrixXd out(data.n(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = std::find(data.column_names.begin(),
                              data.column_names.end(), names[i]);
    if (it == data.column_names.end())
      throw std::invalid_argument("column not found: " + names[i]);
    out.col(static_cast<Eigen::Index>(i)) =
        data.values.col(it - data.column_names.begin());
  }
  return out;
}

randci::json reports_to_json(const std::vector<randci::ExperimentReport>& reps) {
  randci::json arr = randci::json::array();
  for (const auto& r : reps) arr.push_back(randci::to_json(r));
  return arr;
}

void write_summary_csv(const std::string& path,
                       const std::vector<randci::ExperimentReport>& reps) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << "test,design,n,k,trials,ks_statistic,aupc,mean_runtime_ms,seed\n";
  for (const auto& r : reps)
    out << r.test << ',' << r.design << ',' << r.n << ',' << r.k << ','
        << r.trials << ',' << r.ks_statistic << ',' << r.aupc_value << ','
        << r.mean_runtime_ms << ',' << r.seed << '\n';
}

// --- subcommand bodies -----------------------------------------------------

int run_test_command(const std::string& data_path, const std::string& x_col,
                     const std::string& y_col, const std::string& z_cols,
                     const std::string& method, const std::string& approx,
                     std::uint64_t seed, int permutations,
                     const std::string& out_path, Manifest manifest) {
  const randci::DataMatrix data = randci::read_csv_file(data_path);
  const Eigen::MatrixXd x = select_columns(data, {x_col});
  const Eigen::MatrixXd y = select_columns(data, {y_col});
  Eigen::MatrixXd z(data.n(), 0);
  if (!z_cols.empty()) z = select_columns(data, parse_name_list(z_cols));

  randci::CITestResult result;
  if (method == "fisher-z") {
    result = randci::fisher_z(x, y, z);
  } else {
    randci::CITestConfig cfg;
    cfg.approx_method = randci::approx_method_from_string(approx);
    cfg.seed = seed;
    cfg.num_permutations = permutations;
    result = method == "rcot" ? randci::rcot(x, y, z, cfg)
             : method == "rcit"
                 ? randci::rcit(x, y, z, cfg)
                 : throw std::invalid_argument("unknown method: " + method);
  }
  randci::json doc = randci::to_json(result);
  doc["seed"] = seed;
  doc["manifest"] = manifest.finish();
  emit_json(doc, out_path);
  return 0;
}

int run_synth_pnl(bool alternative, Eigen::Index n, int k, std::uint64_t seed,
                  const std::string& out_path, Manifest manifest) {
  randci::Rng rng = randci::make_rng(seed);
  const randci::PnlData d = alternative ? randci::gen_pnl_alt(n, k, rng)
                                        : randci::gen_pnl_null(n, k, rng);
  std::vector<std::string> names{"X", "Y"};
  for (int j = 1; j <= k; ++j) names.push_back("Z" + std::to_string(j));
  Eigen::MatrixXd values(n, 2 + k);
  values.col(0) = d.x.col(0);
  values.col(1) = d.y.col(0);
  values.rightCols(k) = d.z;
  randci::write_csv_file(out_path, randci::DataMatrix{values, names});
  randci::json meta{{"design", alternative ? "pnl-alt" : "pnl-null"},
                    {"n", n},
                    {"k", k},
                    {"g1", randci::to_string(d.g1)},
                    {"g2", randci::to_string(d.g2)},
                    {"columns", names},
                    {"manifest", manifest.finish()}};
  emit_json(meta, out_path + ".meta.json");
  return 0;
}

int run_synth_dag(int v, double expected_neighbors, Eigen::Index n,
                  bool nonlinear, bool latents, bool selection,
                  std::uint64_t seed, const std::string& out_prefix,
                  Manifest manifest) {
  randci::Rng rng = randci::make_rng(seed);
  const randci::Dag dag = randci::gen_random_dag(v, expected_neighbors, rng);
  std::vector<randci::Nonlinearity> tags;
  Eigen::MatrixXd values = randci::simulate_dag_data(dag, n, nonlinear, rng, &tags);
  randci::DataMatrix data{values, dag.vertex_names};
  randci::json meta{{"v", v},
                    {"expected_neighbors", expected_neighbors},
                    {"n", n},
                    {"nonlinear", nonlinear},
                    {"seed", seed}};
  randci::json tag_names = randci::json::array();
  for (const auto t : tags) tag_names.push_back(randci::to_string(t));
  meta["nonlinearities"] = tag_names;
  if (latents || selection) {
    auto [reduced, sel_meta] = randci::apply_latent_and_selection(data, dag, rng);
    data = std::move(reduced);
    meta["latent_selection"] = randci::to_json(sel_meta);
  }
  randci::write_csv_file(out_prefix + ".csv", data);
  randci::json truth = randci::to_json(dag);
  emit_json(truth, out_prefix + ".dag.json");
  meta["manifest"] = manifest.finish();
  emit_json(meta, out_prefix + ".meta.json");
  return 0;
}

int run_suite_command(const std::string& kind, const std::string& tests,
                      const std::string& sizes, const std::string& ks,
                      int trials, std::uint64_t seed, int threads,
                      const std::string& out_path, const std::string& csv_path,
                      Manifest manifest) {
  const auto test_names = parse_name_list(tests);
  if (test_names.empty()) throw std::invalid_argument("empty test list");
  std::vector<Eigen::Index> size_list;
  for (int s : parse_int_list(sizes)) size_list.push_back(s);
  const std::vector<int> k_list = parse_int_list(ks);
  std::vector<randci::ExperimentReport> reports;
  if (kind == "calibrate")
    reports = randci::run_calibration_suite(test_names, size_list, k_list,
                                            trials, seed, threads);
  else if (kind == "power")
    reports = randci::run_power_suite(test_names, size_list, k_list, trials,
                                      seed, threads);
  else
    reports = randci::run_permutation_calibration(test_names, size_list.at(0),
                                                  k_list, trials, seed, threads);
  randci::json doc{{"reports", reports_to_json(reports)},
                   {"manifest", manifest.finish()}};
  emit_json(doc, out_path);
  if (!csv_path.empty()) write_summary_csv(csv_path, reports);
  return 0;
}

int run_bench_command(const std::string& tests, const std::string& sizes,
                      int repeats, std::uint64_t seed,
                      const std::string& out_path, Manifest manifest) {
  const auto test_names = parse_name_list(tests);
  if (test_names.empty()) throw std::invalid_argument("empty test list");
  std::vector<Eigen::Index> size_list;
  for (int s : parse_int_list(sizes)) size_list.push_back(s);
  const auto rows = randci::run_runtime_benchmark(test_names, size_list,
                                                  repeats, seed);
  randci::json arr = randci::json::array();
  for (const auto& r : rows)
    arr.push_back(randci::json{{"test", r.test},
                               {"n", r.n},
                               {"repeats", r.repeats},
                               {"mean_ms", r.mean_ms}});
  emit_json(randci::json{{"rows", arr}, {"manifest", manifest.finish()}},
            out_path);
  return 0;
}

int run_bench_null(int sets, int max_weights, std::uint64_t seed,
                   const std::string& out_path, Manifest manifest) {
  if (sets < 1) throw std::invalid_argument("bench-null: need sets >= 1");
  randci::Rng rng = randci::make_rng(seed);
  std::uniform_int_distribution<int> count_dist(1, max_weights);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  randci::json arr = randci::json::array();
  for (int s = 0; s < sets; ++s) {
    const int L = count_dist(rng);
    std::vector<double> lam(static_cast<std::size_t>(L));
    for (double& l : lam) l = std::max(unif(rng), 1e-6);
    const randci::WeightedChiSquareDist dist(lam);
    const auto sw = randci::satterthwaite_welch(dist);
    const auto hbe = randci::hall_buckley_eagleson(dist);
    const auto wf = randci::wood_f(dist);
    const auto lpb = randci::lindsay_pilla_basak(dist);
    randci::json rows = randci::json::array();
    for (double q : {0.90, 0.95, 0.99}) {
      const double x = randci::imhof_quantile(dist, 1.0 - q);
      const double target = 1.0 - q;
      rows.push_back(randci::json{
          {"quantile", q},
          {"x", x},
          {"imhof", target},
          {"sw_error", std::abs(sw.survival(x) - target)},
          {"hbe_error", std::abs(hbe.survival(x) - target)},
          {"woodf_error", std::abs(wf.survival(x) - target)},
          {"woodf_fallback", wf.fell_back},
          {"lpb_error", std::abs(lpb.survival(x) - target)},
          {"lpb_fallback", lpb.fell_back}});
    }
    arr.push_back(randci::json{{"weights", lam}, {"rows", rows}});
  }
  emit_json(randci::json{{"sets", arr}, {"manifest", manifest.finish()}},
            out_path);
  return 0;
}

int run_discover(const std::string& data_path, const std::string& test,
                 double alpha, std::uint64_t seed, const std::string& approx,
                 const std::string& truth_path, const std::string& out_path,
                 const std::string& adjacency_path, Manifest manifest) {
  const randci::DataMatrix data = randci::read_csv_file(data_path);
  randci::CITestConfig cfg;
  cfg.seed = seed;
  cfg.approx_method = randci::approx_method_from_string(approx);
  const auto ci = randci::make_data_ci(data.values, test, cfg);
  const auto result = randci::pc(static_cast<int>(data.p()), ci, alpha);

  randci::json doc = randci::to_json(result.graph);
  doc["vertex_names"] = data.column_names;
  doc["tests_run"] = result.tests_run;
  if (!truth_path.empty()) {
    std::ifstream in(truth_path);
    if (!in) throw std::invalid_argument("cannot open file: " + truth_path);
    const randci::Dag truth = randci::dag_from_json(randci::json::parse(in));
    if (truth.num_vertices() != static_cast<int>(data.p()))
      throw std::invalid_argument("truth graph size does not match data");
    doc["shd_to_truth_cpdag"] = randci::structural_hamming_distance(
        result.graph, randci::cpdag_from_dag(truth));
  }
  doc["manifest"] = manifest.finish();
  emit_json(doc, out_path);
  if (!adjacency_path.empty()) {
    std::ofstream out(adjacency_path);
    if (!out) throw std::invalid_argument("cannot write file: " + adjacency_path);
    randci::write_cpdag_csv(out, result.graph, data.column_names);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized Fourier-feature conditional independence testing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string data_path, x_col, y_col, z_cols, method = "rcot", approx = "lpb";
  std::string out_path, csv_path, adjacency_path, truth_path, tests, sizes, ks;
  std::uint64_t seed = 0;
  int threads = default_threads();
  int trials = 200, repeats = 3, permutations = 500, sets = 20, max_weights = 25;
  Eigen::Index n = 1000;
  int k = 1, v = 20;
  double expected_neighbors = 2.0, alpha = 0.05;
  bool nonlinear = false, latents = false, selection = false;

  auto* cmd_test = app.add_subcommand("test", "run one CI test on CSV columns");
  cmd_test->add_option("--data", data_path)->required();
  cmd_test->add_option("--x", x_col)->required();
  cmd_test->add_option("--y", y_col)->required();
  cmd_test->add_option("--z", z_cols);
  cmd_test->add_option("--method", method)
      ->check(CLI::IsMember({"rcot", "rcit", "fisher-z"}));
  cmd_test->add_option("--approx", approx)
      ->check(CLI::IsMember({"lpb", "hbe", "sw", "woodf", "imhof", "perm"}));
  cmd_test->add_option("--permutations", permutations);
  cmd_test->add_option("--seed", seed);
  cmd_test->add_option("--out", out_path);

  auto* cmd_synth = app.add_subcommand("synth", "generate simulation data");
  cmd_synth->require_subcommand(1);
  auto* synth_null = cmd_synth->add_subcommand("pnl-null");
  auto* synth_alt = cmd_synth->add_subcommand("pnl-alt");
  for (auto* sub : {synth_null, synth_alt}) {
    sub->add_option("--n", n)->required();
    sub->add_option("--k", k)->required();
    sub->add_option("--seed", seed);
    sub->add_option("--out", out_path)->required();
  }
  auto* synth_dag = cmd_synth->add_subcommand("dag");
  synth_dag->add_option("--v", v);
  synth_dag->add_option("--en", expected_neighbors);
  synth_dag->add_option("--n", n)->required();
  synth_dag->add_flag("--nonlinear", nonlinear);
  synth_dag->add_flag("--latents", latents);
  synth_dag->add_flag("--selection", selection);
  synth_dag->add_option("--seed", seed);
  synth_dag->add_option("--out", out_path)->required();

  const auto add_suite_options = [&](CLI::App* sub, bool with_sizes) {
    sub->add_option("--tests", tests)->required();
    if (with_sizes) {
      auto* size_opt = sub->add_option("--sizes", sizes, "sample sizes, e.g. 500,1000");
      auto* n_opt = sub->add_option("--n", n, "single sample size");
      size_opt->excludes(n_opt);
    } else {
      sub->add_option("--n", n);
    }
    sub->add_option("--k", ks);
    sub->add_option("--trials", trials);
    sub->add_option("--seed", seed);
    sub->add_option("--threads", threads);
    sub->add_option("--out", out_path);
    sub->add_option("--summary-csv", csv_path);
  };
  auto* cmd_cal = app.add_subcommand("calibrate", "null-calibration suite");
  add_suite_options(cmd_cal, true);
  auto* cmd_pow = app.add_subcommand("power", "power suite");
  add_suite_options(cmd_pow, true);
  auto* cmd_perm = app.add_subcommand("perm", "permutation calibration suite");
  add_suite_options(cmd_perm, false);

  auto* cmd_bench = app.add_subcommand("bench", "runtime benchmark");
  cmd_bench->add_option("--tests", tests)->required();
  cmd_bench->add_option("--sizes", sizes)->required();
  cmd_bench->add_option("--repeats", repeats);
  cmd_bench->add_option("--seed", seed);
  cmd_bench->add_option("--out", out_path);

  std::string weight_mode = "random";
  auto* cmd_bn = app.add_subcommand("bench-null",
                                    "null-approximation accuracy table");
  cmd_bn->add_option("--weights", weight_mode)->check(CLI::IsMember({"random"}));
  cmd_bn->add_option("--sets", sets);
  cmd_bn->add_option("--max-weights", max_weights);
  cmd_bn->add_option("--seed", seed);
  cmd_bn->add_option("--out", out_path);

  auto* cmd_disc = app.add_subcommand("discover", "PC structure discovery");
  cmd_disc->add_option("--data", data_path)->required();
  cmd_disc->add_option("--test", method)
      ->check(CLI::IsMember({"rcot", "rcit", "fisher-z"}));
  cmd_disc->add_option("--approx", approx)
      ->check(CLI::IsMember({"lpb", "hbe", "sw", "woodf", "imhof", "perm"}));
  cmd_disc->add_option("--alpha", alpha);
  cmd_disc->add_option("--seed", seed);
  cmd_disc->add_option("--truth", truth_path);
  cmd_disc->add_option("--out", out_path);
  cmd_disc->add_option("--adjacency-out", adjacency_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Manifest manifest;
  manifest.seed = seed;
  manifest.started_at = iso_timestamp();
  std::vector<std::string> args(argv + 1, argv + argc);
  manifest.config = randci::json(args);

  try {
    if (cmd_test->parsed()) {
      manifest.command = "test";
      return run_test_command(data_path, x_col, y_col, z_cols, method, approx,
                              seed, permutations, out_path, manifest);
    }
    if (cmd_synth->parsed()) {
      if (synth_dag->parsed()) {
        manifest.command = "synth dag";
        return run_synth_dag(v, expected_neighbors, n, nonlinear, latents,
                             selection, seed, out_path, manifest);
      }
      manifest.command = synth_alt->parsed() ? "synth pnl-alt" : "synth pnl-null";
      if (k < 1) throw std::invalid_argument("k must be >= 1");
      return run_synth_pnl(synth_alt->parsed(), n, k, seed, out_path, manifest);
    }
    if (cmd_cal->parsed() || cmd_pow->parsed() || cmd_perm->parsed()) {
      const std::string kind = cmd_cal->parsed()   ? "calibrate"
                               : cmd_pow->parsed() ? "power"
                                                   : "perm";
      manifest.command = kind;
      if (ks.empty()) ks = "1";
      if (kind == "perm" || sizes.empty()) sizes = std::to_string(n);
      return run_suite_command(kind, tests, sizes, ks, trials, seed, threads,
                               out_path, csv_path, manifest);
    }
    if (cmd_bench->parsed()) {
      manifest.command = "bench";
      return run_bench_command(tests, sizes, repeats, seed, out_path, manifest);
    }
    if (cmd_bn->parsed()) {
      manifest.command = "bench-null";
      return run_bench_null(sets, max_weights, seed, out_path, manifest);
    }
    if (cmd_disc->parsed()) {
      manifest.command = "discover";
      return run_discover(data_path, method, alpha, seed, approx, truth_path,
                          out_path, adjacency_path, manifest);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const randci::AccuracyError& e) {
    std::cerr << "numerical error: " << e.what()
              << " (best estimate " << e.best_estimate << ")\n";
    randci::json diag{{"error", e.what()}, {"best_estimate", e.best_estimate}};
    std::cout << diag.dump(2) << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
