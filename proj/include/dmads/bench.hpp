#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "dmads/benchmarks.hpp"
#include "dmads/driver.hpp"

namespace dmads {

enum class InitPolicy { Random, Advantageous, Disadvantageous };

inline InitPolicy init_policy_from_string(const std::string& s) {
  if (s == "random") return InitPolicy::Random;
  if (s == "advantageous") return InitPolicy::Advantageous;
  if (s == "disadvantageous") return InitPolicy::Disadvantageous;
  throw ConfigError("unknown init policy '" + s + "'");
}

struct BenchConfig {
  std::vector<Algorithm> algorithms{Algorithm::DeltaMads, Algorithm::Mads, Algorithm::Random};
  std::size_t budget = 100;
  std::size_t seeds = 10;
  std::size_t checkpoint_every = 10;
  InitPolicy init = InitPolicy::Random;
  DriverConfig driver;  // budget and seed are overwritten per cell
};

struct BenchRun {
  std::string problem;
  Algorithm algorithm = Algorithm::DeltaMads;
  std::size_t seed = 0;
  RunResult result;
  std::vector<std::pair<std::size_t, double>> checkpoints;  // (evaluations, best so far)
  double final_best = 0.0;
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Starting point for one (problem, seed) cell; identical for every
/// algorithm. Random starts are drawn from the whole space.
inline Point starting_point(const BenchmarkProblem& p, std::size_t seed, InitPolicy policy) {
  switch (policy) {
    case InitPolicy::Advantageous: return p.advantageous;
    case InitPolicy::Disadvantageous: return p.disadvantageous;
    case InitPolicy::Random: break;
  }
  std::mt19937_64 rng(mix_seed(fnv1a(p.name), seed));
  return random_point(p.space, rng);
}

/// Best-so-far after every `every` evaluations up to `budget`; runs that
/// stopped early carry their final best forward.
inline std::vector<std::pair<std::size_t, double>> checkpoints(const std::vector<Evaluation>& history,
                                                               std::size_t budget, std::size_t every) {
  std::vector<std::pair<std::size_t, double>> out;
  double best = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  for (std::size_t c = every; c <= budget; c += every) {
    for (; k < history.size() && history[k].ordinal <= c; ++k) best = std::min(best, history[k].value_or_inf());
    out.emplace_back(c, best);
  }
  return out;
}

inline BenchRun run_cell(const BenchmarkProblem& p, Algorithm algo, std::size_t seed, const BenchConfig& cfg) {
  auto bb = FunctionBlackbox::from_objective(p.objective);
  DriverConfig dc = cfg.driver;
  dc.budget = cfg.budget;
  dc.seed = seed;
  BenchRun run;
  run.problem = p.name;
  run.algorithm = algo;
  run.seed = seed;
  run.result = optimize(p.space, bb, starting_point(p, seed, cfg.init), dc, algo);
  run.checkpoints = checkpoints(run.result.history, cfg.budget, cfg.checkpoint_every);
  run.final_best = std::numeric_limits<double>::infinity();
  for (const auto& e : run.result.history) run.final_best = std::min(run.final_best, e.value_or_inf());
  return run;
}

/// Every (problem, algorithm, seed) cell in that nesting order.
inline std::vector<BenchRun> run_bench(const std::vector<BenchmarkProblem>& problems, const BenchConfig& cfg) {
  std::vector<BenchRun> out;
  for (const auto& p : problems) {
    for (auto a : cfg.algorithms) {
      for (std::size_t s = 0; s < cfg.seeds; ++s) out.push_back(run_cell(p, a, s, cfg));
    }
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// results.csv: problem,algo,seed,evaluations,best
inline void write_results_csv(std::ostream& os, const std::vector<BenchRun>& runs) {
  os << "problem,algo,seed,evaluations,best\n";
  for (const auto& r : runs) {
    for (const auto& [evals, best] : r.checkpoints) {
      os << r.problem << ',' << to_string(r.algorithm) << ',' << r.seed << ',' << evals << ',' << format_double(best)
         << '\n';
    }
  }
}

struct CellSummary {
  std::string problem;
  Algorithm algorithm = Algorithm::DeltaMads;
  std::size_t runs = 0;
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one run
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline std::vector<CellSummary> summarize(const std::vector<BenchRun>& runs) {
  std::vector<CellSummary> out;
  for (std::size_t i = 0; i < runs.size();) {
    std::size_t j = i;
    std::vector<double> finals;
    while (j < runs.size() && runs[j].problem == runs[i].problem && runs[j].algorithm == runs[i].algorithm) {
      finals.push_back(runs[j].final_best);
      ++j;
    }
    CellSummary c;
    c.problem = runs[i].problem;
    c.algorithm = runs[i].algorithm;
    c.runs = finals.size();
    c.median = median_of(finals);
    c.mean = std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(finals.size());
    double ss = 0.0;
    for (double f : finals) ss += (f - c.mean) * (f - c.mean);
    c.stddev = finals.size() > 1 ? std::sqrt(ss / static_cast<double>(finals.size() - 1)) : 0.0;
    out.push_back(c);
    i = j;
  }
  return out;
}

/// summary.csv: problem,algo,runs,median,mean,std
inline void write_summary_csv(std::ostream& os, const std::vector<CellSummary>& cells) {
  os << "problem,algo,runs,median,mean,std\n";
  for (const auto& c : cells) {
    os << c.problem << ',' << to_string(c.algorithm) << ',' << c.runs << ',' << format_double(c.median) << ','
       << format_double(c.mean) << ',' << format_double(c.stddev) << '\n';
  }
}

}  // namespace dmads
