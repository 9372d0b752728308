#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dmads/evaluator.hpp"
#include "dmads/mesh.hpp"
#include "dmads/poll.hpp"
#include "dmads/surrogate_search.hpp"

namespace dmads {

enum class Algorithm { DeltaMads, Mads, Dogs, Random };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::DeltaMads: return "delta-mads";
    case Algorithm::Mads: return "mads";
    case Algorithm::Dogs: return "dogs";
    case Algorithm::Random: return "random";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  for (auto a : {Algorithm::DeltaMads, Algorithm::Mads, Algorithm::Dogs, Algorithm::Random}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + s + "' (expected delta-mads, mads, dogs or random)");
}

struct DriverConfig {
  std::size_t budget = 100;
  std::optional<double> initial_target;  // default f(x0) − 10ε
  double epsilon = 0.05;
  std::size_t search_budget_per_iter = 2;  // 0 disables the search
  bool enable_poll = true;
  double initial_poll_size = 0.125;
  double min_poll_size = 1e-6;
  double extended_poll_trigger = 0.05;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::size_t max_search_points = 40;
  SearchFunction search_function = SearchFunction::Adaptive;
  double constant_k = 1.0;
  std::size_t samples_per_simplex = 20;
  std::size_t descent_iterations = 10;

  void validate() const {
    if (budget < 1) throw ConfigError("budget must be at least 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie strictly inside (0, 1)");
    if (!(min_poll_size > 0.0)) throw ConfigError("minimum poll size must be positive");
    if (!(initial_poll_size > 0.0 && initial_poll_size <= 1.0)) throw ConfigError("initial poll size must lie in (0, 1]");
    if (!(extended_poll_trigger > 0.0)) throw ConfigError("extended poll trigger must be positive");
    if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
    if (max_search_points < 3) throw ConfigError("max search points must be at least 3");
    if (constant_k < 0.0) throw ConfigError("K must be nonnegative");
  }

  /// Applies the switches that turn the hybrid into one of its components.
  DriverConfig with_algorithm(Algorithm a) const {
    DriverConfig c = *this;
    if (a == Algorithm::Mads) c.search_budget_per_iter = 0;
    if (a == Algorithm::Dogs) {
      c.enable_poll = false;
      c.search_budget_per_iter = std::max<std::size_t>(1, c.search_budget_per_iter);
    }
    return c;
  }
};

/// y − ε when the target was strictly beaten, y + ε otherwise.
inline double update_target(double f_best, double target, double epsilon) {
  return f_best < target ? target - epsilon : target + epsilon;
}

/// Per-iteration log record.
struct IterationRecord {
  std::uint64_t iteration = 0;
  double target = 0.0;
  double next_target = 0.0;
  std::int64_t target_steps = 0;  // target = y0 + target_steps·ε
  double poll_size = 0.0;
  double next_poll_size = 0.0;
  bool search_success = false;
  bool poll_success = false;
  bool extended_poll_success = false;
  std::string search_note;  // why the search proposed nothing, if it did not
  std::size_t evaluations_used = 0;
  double incumbent_value = 0.0;

  bool success() const { return search_success || poll_success || extended_poll_success; }
};

struct DriverState {
  Evaluation incumbent;
  double target_origin = 0.0;
  std::int64_t target_steps = 0;
  double epsilon = 0.05;
  Mesh mesh;
  std::uint64_t iteration = 0;
  bool done = false;
  std::string stop_reason;
  std::vector<IterationRecord> log;

  double target() const { return target_origin + static_cast<double>(target_steps) * epsilon; }
};

struct RunResult {
  Algorithm algorithm = Algorithm::DeltaMads;
  Evaluation incumbent;
  std::vector<Evaluation> history;
  std::vector<IterationRecord> iterations;
  std::vector<Timing> timings;
  std::size_t evaluations_used = 0;
  std::string stop_reason;
};

/// The hybrid loop: surrogate search on the continuous variables with x^N
/// frozen, then a MADS poll over the full mixed space, then the mesh and
/// target updates.
class Driver {
public:
  Driver(const SearchSpace& space, Blackbox& blackbox, DriverConfig config)
      : space_(space), config_(std::move(config)), evaluator_(space_, blackbox, config_.budget, config_.parallelism) {
    config_.validate();
  }

  Evaluator& evaluator() { return evaluator_; }
  const DriverConfig& config() const { return config_; }

  /// Evaluates x0 and sets up mesh and target.
  DriverState start(const Point& x0) {
    space_.check_structure(x0);
    if (!space_.contains(x0)) throw StructuralError("initial point lies outside the search space");
    evaluator_.set_context(0, config_.initial_target.value_or(std::numeric_limits<double>::quiet_NaN()),
                           config_.initial_poll_size);
    auto r = evaluator_.evaluate(x0, Step::Initial);
    if (!r || !r->evaluation.ok()) {
      const auto reason = r ? std::get<Failure>(r->evaluation.outcome).reason : "no budget";
      throw InitialPointFailed("initial point evaluation failed: " + reason);
    }
    DriverState st;
    st.incumbent = r->evaluation;
    st.epsilon = config_.epsilon;
    st.target_origin = config_.initial_target.value_or(*st.incumbent.objective() - 10.0 * config_.epsilon);
    st.mesh = make_mesh(space_, x0, config_.initial_poll_size);
    if (!config_.enable_poll) initial_design(st);
    check_stop(st);
    return st;
  }

  /// Surrogate search step. Returns true on strict improvement of the incumbent.
  bool step_search(DriverState& st, IterationRecord& rec) {
    if (config_.search_budget_per_iter == 0) {
      rec.search_note = "disabled";
      return false;
    }
    if (space_.real_indices().empty()) {
      rec.search_note = "no continuous variables";
      return false;
    }
    std::optional<SearchModel> model;
    try {
      model = build_model(st);
    } catch (const NotEnoughPoints&) {
      rec.search_note = "not enough points";
      return false;
    } catch (const DimensionTooHigh&) {
      rec.search_note = "dimension too high";
      return false;
    } catch (const SingularSystem&) {
      rec.search_note = "singular model";
      return false;
    }

    const auto discrete = split(st.incumbent.point, space_).discrete;
    SearchOptions opt;
    opt.function = config_.search_function;
    opt.constant_k = config_.constant_k;
    opt.samples_per_simplex = config_.samples_per_simplex;
    opt.descent_iterations = config_.descent_iterations;
    opt.seed = mix_seed(config_.seed, 0x5ea4c000 + st.iteration);
    auto is_cached = [this](const Point& p) { return evaluator_.is_cached(p); };

    for (std::size_t c = 0; c < config_.search_budget_per_iter; ++c) {
      auto candidate = search_minimize(*model, st.mesh, space_, discrete, is_cached, opt);
      if (!candidate) {
        rec.search_note = "no uncached candidate";
        return false;
      }
      auto r = evaluator_.evaluate(*candidate, Step::Search);
      if (!r) return false;
      if (r->evaluation.value_or_inf() < st.incumbent.value_or_inf()) {
        st.incumbent = r->evaluation;
        return true;
      }
    }
    return false;
  }

  /// Poll step, followed by the extended poll when the poll does not improve.
  bool step_poll(DriverState& st, IterationRecord& rec) {
    if (!config_.enable_poll) return false;
    const auto candidates = poll_candidates(st.incumbent.point, st.mesh, space_, mix_seed(config_.seed, st.iteration));
    auto res = opportunistic_poll(candidates, evaluator_, st.incumbent.value_or_inf());
    if (res.success) {
      st.incumbent = *res.best;
      rec.poll_success = true;
      return true;
    }
    if (res.exhausted || space_.categorical_indices().empty()) return false;
    auto ext = extended_poll(st.incumbent, st.mesh, space_, config_.extended_poll_trigger, evaluator_,
                             mix_seed(config_.seed, 0xe8000000ULL + st.iteration));
    if (ext.success) {
      st.incumbent = *ext.best;
      rec.extended_poll_success = true;
      return true;
    }
    return false;
  }

  /// One full iteration: search, poll, mesh update, target update.
  void iterate(DriverState& st) {
    if (st.done) return;
    IterationRecord rec;
    rec.iteration = st.iteration;
    rec.target = st.target();
    rec.target_steps = st.target_steps;
    rec.poll_size = st.mesh.delta_p;
    evaluator_.set_context(st.iteration, rec.target, st.mesh.delta_p);

    rec.search_success = step_search(st, rec);
    if (!evaluator_.exhausted()) step_poll(st, rec);

    // the mesh follows the poll; a search success alone does not coarsen it
    const bool mesh_success =
        config_.enable_poll ? rec.poll_success || rec.extended_poll_success : rec.search_success;
    if (config_.enable_poll || !mesh_success) st.mesh = update_mesh(st.mesh, mesh_success, space_);
    st.target_steps += st.incumbent.value_or_inf() < rec.target ? -1 : 1;
    rec.next_target = st.target();
    rec.next_poll_size = st.mesh.delta_p;
    rec.evaluations_used = evaluator_.used();
    rec.incumbent_value = st.incumbent.value_or_inf();
    st.log.push_back(std::move(rec));
    ++st.iteration;
    check_stop(st);
  }

  RunResult run(const Point& x0) {
    auto st = start(x0);
    while (!st.done) iterate(st);
    return finish(st);
  }

  RunResult finish(const DriverState& st) const {
    RunResult out;
    out.algorithm = !config_.enable_poll                 ? Algorithm::Dogs
                    : config_.search_budget_per_iter == 0 ? Algorithm::Mads
                                                          : Algorithm::DeltaMads;
    out.incumbent = st.incumbent;
    out.history = evaluator_.history();
    out.iterations = st.log;
    out.timings = evaluator_.timings();
    out.evaluations_used = evaluator_.used();
    out.stop_reason = st.stop_reason;
    return out;
  }

private:
  void check_stop(DriverState& st) {
    if (evaluator_.exhausted()) {
      st.done = true;
      st.stop_reason = "budget";
    } else if (st.mesh.delta_p < config_.min_poll_size) {
      st.done = true;
      st.stop_reason = "poll size below minimum";
    }
  }

  /// Surrogate-only runs start from x0 plus its continuous poll stencil.
  void initial_design(DriverState& st) {
    std::vector<Point> design;
    for (auto& c : poll_candidates(st.incumbent.point, st.mesh, space_, mix_seed(config_.seed, 0x1d))) {
      if (same_discrete_part(c.point, st.incumbent.point, space_)) design.push_back(std::move(c.point));
    }
    for (auto& r : evaluator_.evaluate_batch(design, Step::Initial)) {
      if (r && r->evaluation.value_or_inf() < st.incumbent.value_or_inf()) st.incumbent = r->evaluation;
    }
  }

  /// Cached successes sharing the incumbent's x^N. Above the cap, keeps the
  /// incumbent's nearest neighbors for half the slots and fills the rest by
  /// farthest-point sampling.
  SearchModel build_model(const DriverState& st) const {
    const auto& reals = space_.real_indices();
    auto to_unit = [&](const Point& p) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(reals.size()));
      for (std::size_t j = 0; j < reals.size(); ++j) u(static_cast<Eigen::Index>(j)) = space_.normalize(reals[j], as_real(p[reals[j]]));
      return u;
    };
    std::vector<Eigen::VectorXd> pts;
    std::vector<double> vals;
    for (const auto& e : evaluator_.cache().entries()) {
      if (!e.ok() || !same_discrete_part(e.point, st.incumbent.point, space_)) continue;
      pts.push_back(to_unit(e.point));
      vals.push_back(*e.objective());
    }
    if (pts.size() > config_.max_search_points) {
      const Eigen::VectorXd center = to_unit(st.incumbent.point);
      std::vector<std::size_t> order(pts.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return (pts[a] - center).squaredNorm() < (pts[b] - center).squaredNorm();
      });
      const std::size_t near = config_.max_search_points / 2;
      std::vector<std::size_t> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(near));
      std::vector<bool> taken(pts.size(), false);
      for (auto i : keep) taken[i] = true;
      std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
      auto relax = [&](std::size_t k) {
        for (std::size_t i = 0; i < pts.size(); ++i) dist[i] = std::min(dist[i], (pts[i] - pts[k]).squaredNorm());
      };
      for (auto k : keep) relax(k);
      while (keep.size() < config_.max_search_points) {
        std::size_t far = pts.size();
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (!taken[i] && (far == pts.size() || dist[i] > dist[far])) far = i;
        }
        taken[far] = true;
        keep.push_back(far);
        relax(far);
      }
      std::sort(keep.begin(), keep.end());
      std::vector<Eigen::VectorXd> p2;
      std::vector<double> v2;
      for (auto i : keep) {
        p2.push_back(pts[i]);
        v2.push_back(vals[i]);
      }
      pts = std::move(p2);
      vals = std::move(v2);
    }
    return SearchModel::build(pts, vals, st.target());
  }

  SearchSpace space_;
  DriverConfig config_;
  Evaluator evaluator_;
};

/// Seeded uniform point of the space.
inline Point random_point(const SearchSpace& space, std::mt19937_64& rng) {
  Point p;
  p.values.reserve(space.size());
  for (const auto& v : space.variables()) {
    switch (v.kind) {
      case VariableKind::Real:
        p.values.emplace_back(std::min(v.upper, v.lower + detail::unit_uniform(rng) * v.range()));
        break;
      case VariableKind::Integer: {
        const auto span = static_cast<std::uint64_t>(v.range()) + 1;
        p.values.emplace_back(static_cast<std::int64_t>(v.lower) + static_cast<std::int64_t>(rng() % span));
        break;
      }
      case VariableKind::Categorical:
        p.values.emplace_back(v.categories[rng() % v.categories.size()]);
        break;
    }
  }
  return p;
}

/// Uniform random search: x0 first, then seeded uniform samples.
inline RunResult random_search(const SearchSpace& space, Blackbox& blackbox, const Point& x0,
                               const DriverConfig& config) {
  config.validate();
  Evaluator ev(space, blackbox, config.budget, config.parallelism);
  auto first = ev.evaluate(x0, Step::Initial);
  if (!first || !first->evaluation.ok()) throw InitialPointFailed("initial point evaluation failed");
  RunResult out;
  out.algorithm = Algorithm::Random;
  out.incumbent = first->evaluation;
  std::mt19937_64 rng(mix_seed(config.seed, 0x52414e44));
  std::size_t attempts = 0;
  while (!ev.exhausted() && attempts < 100 * config.budget) {
    std::vector<Point> batch;
    for (std::size_t k = 0; k < std::min(ev.parallelism(), ev.remaining()); ++k) batch.push_back(random_point(space, rng));
    attempts += batch.size();
    for (auto& r : ev.evaluate_batch(batch, Step::Benchmark)) {
      if (r && r->evaluation.value_or_inf() < out.incumbent.value_or_inf()) out.incumbent = r->evaluation;
    }
  }
  out.history = ev.history();
  out.timings = ev.timings();
  out.evaluations_used = ev.used();
  out.stop_reason = ev.exhausted() ? "budget" : "search space exhausted";
  return out;
}

/// Runs one of the four algorithms from x0.
inline RunResult optimize(const SearchSpace& space, Blackbox& blackbox, const Point& x0, const DriverConfig& config,
                          Algorithm algorithm = Algorithm::DeltaMads) {
  if (algorithm == Algorithm::Random) return random_search(space, blackbox, x0, config);
  Driver driver(space, blackbox, config.with_algorithm(algorithm));
  auto result = driver.run(x0);
  result.algorithm = algorithm;
  return result;
}

}  // namespace dmads
