// Command-line front end: optimize, bench, report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dmads/dmads.hpp"

namespace fs = std::filesystem;
using namespace dmads;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitProtocol = 2;
constexpr int kExitConfig = 3;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

struct OptimizeArgs {
  std::string space_file;
  std::string blackbox;
  std::string x0_file;
  std::size_t budget = 100;
  std::uint64_t seed = 0;
  double epsilon = 0.05;
  std::optional<double> target;
  std::string algo = "delta-mads";
  std::size_t parallel = 1;
  std::string out = "run";
  std::string mode = "persistent";
  double timeout = 600.0;
  double initial_poll_size = 0.125;
  double min_poll_size = 1e-6;
  double trigger = 0.05;
  std::size_t search_budget = 2;
  std::size_t max_search_points = 40;
  std::string search_function = "adaptive";
  double k = 1.0;
  std::string dump_triangulation;
};

void dump_triangulation(const RunResult& r, const SearchSpace& space, const std::string& path) {
  const auto& reals = space.real_indices();
  std::vector<Eigen::VectorXd> pts;
  for (const auto& e : r.history) {
    if (!e.ok() || !same_discrete_part(e.point, r.incumbent.point, space)) continue;
    Eigen::VectorXd u(static_cast<Eigen::Index>(reals.size()));
    for (std::size_t j = 0; j < reals.size(); ++j) u(static_cast<Eigen::Index>(j)) = space.normalize(reals[j], as_real(e.point[reals[j]]));
    pts.push_back(u);
  }
  ordered_json doc;
  try {
    doc = triangulation_to_json(triangulate(pts));
  } catch (const Error& e) {
    doc["error"] = e.what();
  }
  auto out = open_out(path);
  out << doc.dump(1) << '\n';
}

int run_optimize(const OptimizeArgs& a) {
  DriverConfig cfg;
  cfg.budget = a.budget;
  cfg.seed = a.seed;
  cfg.epsilon = a.epsilon;
  cfg.initial_target = a.target;
  cfg.parallelism = a.parallel;
  cfg.initial_poll_size = a.initial_poll_size;
  cfg.min_poll_size = a.min_poll_size;
  cfg.extended_poll_trigger = a.trigger;
  cfg.search_budget_per_iter = a.search_budget;
  cfg.max_search_points = a.max_search_points;
  if (a.search_function == "adaptive") {
    cfg.search_function = SearchFunction::Adaptive;
  } else if (a.search_function == "constant-k") {
    cfg.search_function = SearchFunction::ConstantK;
  } else {
    throw ConfigError("unknown search function '" + a.search_function + "'");
  }
  cfg.constant_k = a.k;
  cfg.validate();
  const auto algo = algorithm_from_string(a.algo);

  std::optional<SearchSpace> space;
  if (!a.space_file.empty()) space = space_from_json(read_json_file(a.space_file));

  std::unique_ptr<Blackbox> blackbox;
  std::optional<Point> x0;
  const std::string prefix = "builtin:";
  if (a.blackbox.rfind(prefix, 0) == 0) {
    const auto problem = builtin_problem(a.blackbox.substr(prefix.size()));
    if (space && !(*space == problem.space)) throw ConfigError("--space does not match the builtin problem's space");
    space = problem.space;
    x0 = problem.advantageous;
    blackbox = std::make_unique<FunctionBlackbox>(FunctionBlackbox::from_objective(problem.objective));
  } else {
    if (!space) throw ConfigError("--space is required for external blackboxes");
    SubprocessOptions so;
    if (a.mode == "persistent") {
      so.mode = WorkerMode::Persistent;
    } else if (a.mode == "oneshot") {
      so.mode = WorkerMode::Oneshot;
    } else {
      throw ConfigError("unknown worker mode '" + a.mode + "'");
    }
    so.timeout_s = a.timeout;
    blackbox = std::make_unique<SubprocessBlackbox>(a.blackbox, *space, so);
  }
  if (!a.x0_file.empty()) {
    try {
      x0 = point_from_json(read_json_file(a.x0_file), *space);
    } catch (const StructuralError& e) {
      throw ConfigError(std::string("--x0: ") + e.what());
    }
  }
  if (!x0) throw ConfigError("--x0 is required for external blackboxes");
  if (!space->contains(*x0)) throw ConfigError("--x0 lies outside the search space");

  const auto result = optimize(*space, *blackbox, *x0, cfg, algo);

  fs::create_directories(a.out);
  {
    auto out = open_out(fs::path(a.out) / "history.jsonl");
    write_history(out, result.history, *space);
  }
  {
    auto out = open_out(fs::path(a.out) / "iterations.jsonl");
    write_iterations(out, result.iterations);
  }
  {
    auto out = open_out(fs::path(a.out) / "timings.jsonl");
    write_timings(out, result.timings);
  }
  {
    auto out = open_out(fs::path(a.out) / "summary.json");
    out << summary_to_json(result, *space).dump(2) << '\n';
  }
  if (!a.dump_triangulation.empty()) dump_triangulation(result, *space, a.dump_triangulation);

  std::cout << "best " << format_double(result.incumbent.value_or_inf()) << " after " << result.evaluations_used
            << " evaluations (" << result.stop_reason << ")\n";
  return kExitOk;
}

struct BenchArgs {
  std::string suite = "standard";
  std::string algos = "delta-mads,mads,random";
  std::string problems;
  std::size_t budget = 100;
  std::size_t seeds = 10;
  std::size_t checkpoint = 10;
  std::string init = "random";
  std::string out = "bench";
  bool histories = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run_bench_cmd(const BenchArgs& a) {
  if (a.suite != "standard") throw ConfigError("unknown suite '" + a.suite + "'");
  BenchConfig cfg;
  cfg.algorithms.clear();
  for (const auto& name : split_list(a.algos)) cfg.algorithms.push_back(algorithm_from_string(name));
  if (cfg.algorithms.empty()) throw ConfigError("no algorithms given");
  if (a.budget < 1 || a.seeds < 1 || a.checkpoint < 1) throw ConfigError("budget, seeds and checkpoint must be positive");
  cfg.budget = a.budget;
  cfg.seeds = a.seeds;
  cfg.checkpoint_every = a.checkpoint;
  cfg.init = init_policy_from_string(a.init);

  std::vector<BenchmarkProblem> problems;
  if (a.problems.empty()) {
    problems = builtin_suite();
  } else {
    for (const auto& name : split_list(a.problems)) problems.push_back(builtin_problem(name));
  }

  const auto runs = run_bench(problems, cfg);
  fs::create_directories(a.out);
  {
    auto out = open_out(fs::path(a.out) / "results.csv");
    write_results_csv(out, runs);
  }
  {
    auto out = open_out(fs::path(a.out) / "summary.csv");
    write_summary_csv(out, summarize(runs));
  }
  if (a.histories) {
    for (const auto& r : runs) {
      const auto dir = fs::path(a.out) / "runs" / r.problem / to_string(r.algorithm) / ("seed" + std::to_string(r.seed));
      fs::create_directories(dir);
      auto out = open_out(dir / "history.jsonl");
      write_history(out, r.result.history, builtin_problem(r.problem).space);
    }
  }
  std::cout << runs.size() << " runs written to " << a.out << '\n';
  return kExitOk;
}

struct ReportArgs {
  std::string runs;
  std::string svg;
  std::string csv;
  std::string title;
};

int run_report(const ReportArgs& a) {
  if (!fs::is_directory(a.runs)) throw ConfigError("--runs must be a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(a.runs)) {
    if (entry.is_regular_file() && entry.path().filename() == "history.jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no history.jsonl under " + a.runs);
  std::vector<Series> series;
  for (const auto& f : files) {
    std::ifstream in(f);
    auto rel = fs::relative(f.parent_path(), a.runs).generic_string();
    if (rel == ".") rel = fs::path(a.runs).filename().string();
    try {
      series.push_back({rel, convergence_table(in)});
    } catch (const ParseError& e) {
      throw ParseError(f.string() + ", " + e.what());
    }
  }
  if (!a.csv.empty()) {
    auto out = open_out(a.csv);
    write_convergence_csv(out, series);
  }
  if (!a.svg.empty()) {
    auto out = open_out(a.svg);
    out << render_svg(series, a.title);
  }
  std::cout << series.size() << " runs reported\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-variable blackbox optimization with a mesh poll and a Delaunay surrogate search"};
  app.require_subcommand(1);

  OptimizeArgs oa;
  auto* opt = app.add_subcommand("optimize", "Optimize one blackbox");
  opt->add_option("--space", oa.space_file, "Search-space JSON file");
  opt->add_option("--blackbox", oa.blackbox, "Worker command, or builtin:NAME")->required();
  opt->add_option("--x0", oa.x0_file, "Initial point JSON file");
  opt->add_option("--budget", oa.budget, "Maximum blackbox evaluations");
  opt->add_option("--seed", oa.seed, "Random seed");
  opt->add_option("--epsilon", oa.epsilon, "Target step");
  opt->add_option("--target", oa.target, "Initial target (default f(x0) - 10 epsilon)");
  opt->add_option("--algo", oa.algo, "delta-mads | mads | dogs | random");
  opt->add_option("--parallel", oa.parallel, "Concurrent evaluations");
  opt->add_option("--out", oa.out, "Output directory");
  opt->add_option("--mode", oa.mode, "Worker mode: persistent | oneshot");
  opt->add_option("--timeout", oa.timeout, "Per-evaluation timeout in seconds");
  opt->add_option("--initial-poll-size", oa.initial_poll_size, "Initial poll size in (0, 1]");
  opt->add_option("--min-poll-size", oa.min_poll_size, "Stop when the poll size drops below this");
  opt->add_option("--extended-poll-trigger", oa.trigger, "Relative trigger for extended-poll descents");
  opt->add_option("--search-budget", oa.search_budget, "Search candidates per iteration");
  opt->add_option("--max-search-points", oa.max_search_points, "Points kept in the surrogate model");
  opt->add_option("--search-function", oa.search_function, "adaptive | constant-k");
  opt->add_option("--k", oa.k, "K of the constant-K search function");
  opt->add_option("--dump-triangulation", oa.dump_triangulation, "Write the final triangulation as JSON");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run the benchmark suite");
  bench->add_option("--suite", ba.suite, "Suite name");
  bench->add_option("--algos", ba.algos, "Comma-separated algorithms");
  bench->add_option("--problems", ba.problems, "Comma-separated subset of problems");
  bench->add_option("--budget", ba.budget, "Evaluations per run");
  bench->add_option("--seeds", ba.seeds, "Seeds per cell");
  bench->add_option("--checkpoint", ba.checkpoint, "Checkpoint interval in evaluations");
  bench->add_option("--init", ba.init, "random | advantageous | disadvantageous");
  bench->add_option("--out", ba.out, "Output directory");
  bench->add_flag("--histories", ba.histories, "Also write every run's history");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Convergence curves from run histories");
  report->add_option("--runs", ra.runs, "Directory searched for history.jsonl files")->required();
  report->add_option("--svg", ra.svg, "SVG output");
  report->add_option("--csv", ra.csv, "CSV output");
  report->add_option("--title", ra.title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*opt) return run_optimize(oa);
    if (*bench) return run_bench_cmd(ba);
    return run_report(ra);
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << '\n';
    return kExitProtocol;
  } catch (const InitialPointFailed& e) {
    std::cerr << e.what() << '\n';
    return kExitFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidSpace& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StructuralError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
