#include <atomic>
#include <cmath>

#include <gtest/gtest.h>

#include "dmads/benchmarks.hpp"
#include "dmads/driver.hpp"
#include "oracles.hpp"

using namespace dmads;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Answers calls from a fixed script, in call order.
class ScriptedBlackbox : public Blackbox {
public:
  explicit ScriptedBlackbox(std::vector<Outcome> script) : script_(std::move(script)) {}
  Outcome evaluate(const Point&, std::size_t) override { return script_.at(calls_++); }
  std::size_t calls() const { return calls_; }

private:
  std::vector<Outcome> script_;
  std::size_t calls_ = 0;
};

class CountingBlackbox : public Blackbox {
public:
  explicit CountingBlackbox(std::function<double(const Point&)> f) : f_(std::move(f)) {}
  Outcome evaluate(const Point& x, std::size_t) override {
    ++calls;
    return Success{f_(x)};
  }
  std::atomic<std::size_t> calls{0};

private:
  std::function<double(const Point&)> f_;
};

SearchSpace unit_box(std::size_t n) { return detail::box(n, 0.0, 1.0); }

SearchModel model_1d(std::vector<double> xs, std::vector<double> fs, double target) {
  std::vector<Eigen::VectorXd> pts;
  for (double x : xs) pts.push_back(vec({x}));
  SearchModel m;
  m.interpolant = Interpolant::solve(pts, fs);
  m.triangulation = triangulate(pts);
  m.target = target;
  return m;
}

SearchSpace mixed_toy_space() {
  return SearchSpace({VariableSpec::real("x1", -1, 1), VariableSpec::real("x2", -1, 1),
                      VariableSpec::categorical("kind", {"bad1", "bad2", "good", "bad3"})});
}

double mixed_toy(const Point& p) {
  const double x1 = as_real(p[0]), x2 = as_real(p[1]);
  return (as_label(p[2]) == "good" ? 0.0 : 1.0) + x1 * x1 + x2 * x2;
}

}  // namespace

TEST(Evaluator, CacheAndBudget) {
  const auto s = unit_box(1);
  CountingBlackbox bb([](const Point& p) { return as_real(p[0]); });
  Evaluator ev(s, bb, 3);
  const Point a{{0.25}};
  auto r1 = ev.evaluate(a, Step::Poll);
  auto r2 = ev.evaluate(a, Step::Search);
  ASSERT_TRUE(r1 && r2);
  EXPECT_FALSE(r1->cached);
  EXPECT_TRUE(r2->cached);
  EXPECT_EQ(r2->evaluation.step, Step::Poll);
  EXPECT_EQ(bb.calls, 1u);
  EXPECT_EQ(ev.used(), 1u);

  auto batch = ev.evaluate_batch({Point{{0.5}}, Point{{0.5}}, Point{{0.75}}, Point{{1.0}}}, Step::Poll);
  EXPECT_EQ(bb.calls, 3u);
  ASSERT_TRUE(batch[0] && batch[1] && batch[2]);
  EXPECT_EQ(batch[0]->evaluation.ordinal, batch[1]->evaluation.ordinal);
  EXPECT_FALSE(batch[3]);
  EXPECT_TRUE(ev.exhausted());
  EXPECT_FALSE(ev.evaluate(Point{{0.1}}, Step::Poll));
  EXPECT_TRUE(ev.evaluate(Point{{0.75}}, Step::Poll));
  EXPECT_THROW(ev.evaluate(Point{{1.5}}, Step::Poll), StructuralError);
  for (std::size_t i = 0; i < ev.history().size(); ++i) EXPECT_EQ(ev.history()[i].ordinal, i + 1);
  EXPECT_EQ(ev.timings().size(), 3u);
}

TEST(Evaluator, ParallelBatchKeepsOrder) {
  const auto s = unit_box(1);
  CountingBlackbox bb([](const Point& p) { return as_real(p[0]) * 2; });
  Evaluator ev(s, bb, 10, 3);
  std::vector<Point> pts;
  for (int i = 0; i < 7; ++i) pts.push_back(Point{{i / 10.0}});
  auto out = ev.evaluate_batch(pts, Step::Poll);
  for (int i = 0; i < 7; ++i) {
    ASSERT_TRUE(out[static_cast<std::size_t>(i)]);
    EXPECT_EQ(out[static_cast<std::size_t>(i)]->evaluation.ordinal, static_cast<std::uint64_t>(i + 1));
    EXPECT_DOUBLE_EQ(*out[static_cast<std::size_t>(i)]->evaluation.objective(), i / 5.0);
  }
}

TEST(FunctionBlackbox, ExceptionsBecomeFailures) {
  FunctionBlackbox bb([](const Point&) -> Outcome { throw std::runtime_error("nan loss"); });
  const auto o = bb.evaluate(Point{{0.1}}, 0);
  ASSERT_FALSE(succeeded(o));
  EXPECT_EQ(std::get<Failure>(o).reason, "nan loss");
}

TEST(Poll, StopsAfterFirstImprovement) {
  const auto s = unit_box(1);
  ScriptedBlackbox bb({Success{2.0}, Failure{"crash"}, Success{0.5}, Success{0.1}, Success{0.0}});
  Evaluator ev(s, bb, 100);
  PollSet cands;
  for (int i = 1; i <= 5; ++i) cands.push_back({Point{{i / 10.0}}, "d" + std::to_string(i)});
  const auto r = opportunistic_poll(cands, ev, 1.0);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.evaluations, 3u);
  EXPECT_EQ(bb.calls(), 3u);
  ASSERT_TRUE(r.best);
  EXPECT_EQ(*r.best->objective(), 0.5);
}

TEST(Poll, FailuresNeverImprove) {
  const auto s = unit_box(1);
  ScriptedBlackbox bb({Failure{"a"}, Failure{"b"}});
  Evaluator ev(s, bb, 100);
  PollSet cands{{Point{{0.1}}, "d1"}, {Point{{0.2}}, "-d1"}};
  const auto r = opportunistic_poll(cands, ev, 1.0);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.evaluations, 2u);
}

TEST(Poll, ReportsExhaustion) {
  const auto s = unit_box(1);
  ScriptedBlackbox bb({Success{2.0}});
  Evaluator ev(s, bb, 1);
  PollSet cands{{Point{{0.1}}, "d1"}, {Point{{0.2}}, "-d1"}};
  const auto r = opportunistic_poll(cands, ev, 1.0);
  EXPECT_TRUE(r.exhausted);
  EXPECT_FALSE(r.success);
}

TEST(ExtendedPoll, EvaluatesDeclaredNeighbors) {
  SearchSpace s({VariableSpec::real("lr", 0, 1), VariableSpec::categorical("activation", {"ReLU", "Sigmoid", "Tanh"})});
  CountingBlackbox bb([](const Point& p) { return as_label(p[1]) == "ReLU" ? 1.0 : 5.0; });
  Evaluator ev(s, bb, 100);
  const Point inc{{0.5, std::string("ReLU")}};
  auto e = ev.evaluate(inc, Step::Initial)->evaluation;
  const auto r = extended_poll(e, make_mesh(s, inc, 0.125), s, 0.05, ev, 1);
  EXPECT_EQ(r.evaluations, 2u);
  EXPECT_FALSE(r.success);
  std::set<std::string> seen;
  for (const auto& h : ev.history()) seen.insert(as_label(h.point[1]));
  EXPECT_EQ(seen, (std::set<std::string>{"ReLU", "Sigmoid", "Tanh"}));
}

TEST(ExtendedPoll, RestrictedNeighborsAndTrigger) {
  SearchSpace s({VariableSpec::real("lr", 0, 1),
                 VariableSpec::categorical("activation", {"ReLU", "Sigmoid", "Tanh"}, {{"ReLU", {"Tanh"}}})});
  // Tanh is slightly worse at lr=0.5 but better elsewhere: only the
  // triggered poll around it can find the improvement
  CountingBlackbox bb([](const Point& p) {
    const double x = as_real(p[0]);
    return as_label(p[1]) == "Tanh" ? 1.02 + (x - 0.5) : 1.0;
  });
  Evaluator ev(s, bb, 100);
  const Point inc{{0.5, std::string("ReLU")}};
  auto e = ev.evaluate(inc, Step::Initial)->evaluation;
  const auto r = extended_poll(e, make_mesh(s, inc, 0.125), s, 0.05, ev, 1);
  EXPECT_TRUE(r.success);
  ASSERT_TRUE(r.best);
  EXPECT_EQ(as_label(r.best->point[1]), "Tanh");
  EXPECT_LT(as_real(r.best->point[0]), 0.5);
  for (const auto& h : ev.history()) EXPECT_NE(as_label(h.point[1]), "Sigmoid");

  Evaluator ev2(s, bb, 100);
  auto e2 = ev2.evaluate(inc, Step::Initial)->evaluation;
  const auto r2 = extended_poll(e2, make_mesh(s, inc, 0.125), s, 0.01, ev2, 1);
  EXPECT_FALSE(r2.success);
  EXPECT_EQ(r2.evaluations, 1u);
}

TEST(Target, UpdateRule) {
  EXPECT_DOUBLE_EQ(update_target(0.9, 1.0, 0.05), 0.95);
  EXPECT_DOUBLE_EQ(update_target(1.0, 1.0, 0.05), 1.05);
  EXPECT_DOUBLE_EQ(update_target(1.2, 1.0, 0.05), 1.05);
}

TEST(Search, OneDimensionalExplorationPicksMidpoint) {
  const auto m = model_1d({0.0, 1.0}, {1.0, 1.0}, 0.0);
  // grid oracle: s = (1 - 0) / (x (1 - x)) is smallest at the midpoint
  double best_x = 0, best_s = INFINITY;
  for (int i = 1; i < 10000; ++i) {
    const double x = i / 10000.0;
    const double sc = (m.interpolant(vec({x})) - m.target) / m.triangulation.uncertainty(vec({x}));
    if (sc < best_s) {
      best_s = sc;
      best_x = x;
    }
  }
  EXPECT_NEAR(best_x, 0.5, 1e-4);
  auto ranked = rank_search_points(m, {});
  ASSERT_EQ(ranked.size(), 1u);
  const auto refined = refine_search_point(m, {}, ranked[0]);
  EXPECT_NEAR(refined.x(0), 0.5, 1e-6);
  EXPECT_EQ(refined.score.regime, 1);

  const auto s = unit_box(1);
  const auto mesh = make_mesh(s, Point{{0.0}}, 0.125);
  const auto c = search_minimize(m, mesh, s, {}, [](const Point&) { return false; });
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(as_real((*c)[0]), 0.5);
}

TEST(Search, ExploitationRegimeMinimizesInterpolant) {
  const auto m = model_1d({0.0, 0.3, 0.6, 1.0}, {1.0, 0.2, 0.4, 1.5}, 2.0);
  double best_x = 0, best_p = INFINITY;
  for (int i = 0; i <= 10000; ++i) {
    const double x = i / 10000.0;
    if (m.interpolant(vec({x})) < best_p) {
      best_p = m.interpolant(vec({x}));
      best_x = x;
    }
  }
  auto ranked = rank_search_points(m, {});
  ASSERT_FALSE(ranked.empty());
  const auto refined = refine_search_point(m, {}, ranked[0]);
  EXPECT_EQ(refined.score.regime, 0);
  EXPECT_NEAR(refined.x(0), best_x, 1e-3);
  EXPECT_NEAR(refined.score.value, best_p, 1e-6);
  // pure exploration would pick the middle of the widest simplex instead
  EXPECT_GT(std::abs(refined.x(0) - 0.8), 0.05);
}

TEST(Search, ConstantKTradesOff) {
  const auto m = model_1d({0.0, 1.0}, {0.0, 0.0}, -1.0);
  SearchOptions opt;
  opt.function = SearchFunction::ConstantK;
  opt.constant_k = 2.0;
  auto ranked = rank_search_points(m, opt);
  const auto refined = refine_search_point(m, opt, ranked[0]);
  EXPECT_NEAR(refined.x(0), 0.5, 1e-6);
  EXPECT_NEAR(refined.score.value, -0.5, 1e-9);
}

TEST(Search, SkipsCachedProjections) {
  const auto m = model_1d({0.0, 0.5, 1.0}, {1.0, 1.0, 1.0}, 0.0);
  const auto s = unit_box(1);
  const auto mesh = make_mesh(s, Point{{0.0}}, 0.125);
  const auto first = search_minimize(m, mesh, s, {}, [](const Point&) { return false; });
  ASSERT_TRUE(first);
  const auto key = canonical_key(*first, s);
  const auto second = search_minimize(m, mesh, s, {}, [&](const Point& p) { return canonical_key(p, s) == key; });
  ASSERT_TRUE(second);
  EXPECT_NE(canonical_key(*second, s), key);
  EXPECT_FALSE(search_minimize(m, mesh, s, {}, [](const Point&) { return true; }));
  EXPECT_THROW(search_minimize(m, mesh, unit_box(2), {}, [](const Point&) { return false; }), StructuralError);
}

TEST(Driver, SphereFromFixedStart) {
  const auto prob = make_sphere(2);
  auto bb = FunctionBlackbox::from_objective(prob.objective);
  DriverConfig cfg;
  cfg.budget = 200;
  const auto x0 = detail::real_point({0.8, 0.6});
  for (auto algo : {Algorithm::DeltaMads, Algorithm::Mads}) {
    const auto r = optimize(prob.space, bb, x0, cfg, algo);
    EXPECT_LE(r.incumbent.value_or_inf(), 1e-4) << to_string(algo);
    EXPECT_EQ(oracle::check_run_invariants(r, prob.space, cfg.budget, cfg.epsilon), "") << to_string(algo);
  }
}

TEST(Driver, MixedToyFindsGoodCategory) {
  const auto s = mixed_toy_space();
  auto bb = FunctionBlackbox::from_objective(mixed_toy);
  DriverConfig cfg;
  cfg.budget = 100;
  const Point x0{{0.6, -0.4, std::string("bad1")}};
  const auto r = optimize(s, bb, x0, cfg);
  // oracle: enumerate the categories at the returned continuous part
  std::string best_label;
  double best = INFINITY;
  for (const auto& label : s[2].categories) {
    Point p = r.incumbent.point;
    p[2] = label;
    if (mixed_toy(p) < best) {
      best = mixed_toy(p);
      best_label = label;
    }
  }
  EXPECT_EQ(as_label(r.incumbent.point[2]), best_label);
  EXPECT_EQ(best_label, "good");
  EXPECT_EQ(oracle::check_run_invariants(r, s, cfg.budget, cfg.epsilon), "");
}

TEST(Driver, InvariantsAcrossSuite) {
  for (const auto& prob : builtin_suite()) {
    auto bb = FunctionBlackbox::from_objective(prob.objective);
    DriverConfig cfg;
    cfg.budget = 60;
    cfg.seed = 3;
    for (auto algo : {Algorithm::DeltaMads, Algorithm::Mads, Algorithm::Dogs}) {
      const auto r = optimize(prob.space, bb, prob.disadvantageous, cfg, algo);
      EXPECT_EQ(oracle::check_run_invariants(r, prob.space, cfg.budget, cfg.epsilon, algo != Algorithm::Dogs), "")
          << prob.name << " " << to_string(algo);
    }
  }
}

TEST(Driver, Deterministic) {
  const auto prob = make_categorical_branin();
  auto bb = FunctionBlackbox::from_objective(prob.objective);
  DriverConfig cfg;
  cfg.budget = 80;
  cfg.seed = 11;
  const auto a = optimize(prob.space, bb, prob.disadvantageous, cfg);
  const auto b = optimize(prob.space, bb, prob.disadvantageous, cfg);
  EXPECT_EQ(oracle::history_text(a, prob.space), oracle::history_text(b, prob.space));
  cfg.seed = 12;
  const auto c = optimize(prob.space, bb, prob.disadvantageous, cfg);
  EXPECT_NE(oracle::history_text(a, prob.space), oracle::history_text(c, prob.space));
}

TEST(Driver, ParallelRunMatchesInvariants) {
  const auto prob = make_branin();
  auto bb = FunctionBlackbox::from_objective(prob.objective);
  DriverConfig cfg;
  cfg.budget = 60;
  cfg.parallelism = 4;
  const auto r = optimize(prob.space, bb, prob.disadvantageous, cfg);
  EXPECT_EQ(oracle::check_run_invariants(r, prob.space, cfg.budget, cfg.epsilon), "");
}

TEST(Driver, TargetStartsTenEpsilonBelowF0) {
  const auto prob = make_sphere(2);
  auto bb = FunctionBlackbox::from_objective(prob.objective);
  DriverConfig cfg;
  cfg.budget = 30;
  const auto x0 = detail::real_point({0.8, 0.6});
  auto r = optimize(prob.space, bb, x0, cfg);
  ASSERT_FALSE(r.iterations.empty());
  EXPECT_DOUBLE_EQ(r.iterations[0].target, 1.0 - 0.5);
  cfg.initial_target = -3.0;
  r = optimize(prob.space, bb, x0, cfg);
  EXPECT_DOUBLE_EQ(r.iterations[0].target, -3.0);
}

TEST(Driver, StopsOnBudgetOrPollSize) {
  const auto prob = make_sphere(2);
  auto bb = FunctionBlackbox::from_objective(prob.objective);
  DriverConfig cfg;
  cfg.budget = 1;
  auto r = optimize(prob.space, bb, prob.advantageous, cfg);
  EXPECT_EQ(r.evaluations_used, 1u);
  EXPECT_EQ(r.stop_reason, "budget");
  EXPECT_TRUE(r.iterations.empty());

  cfg.budget = 5000;
  cfg.min_poll_size = 1e-3;
  r = optimize(prob.space, bb, prob.advantageous, cfg, Algorithm::Mads);
  EXPECT_EQ(r.stop_reason, "poll size below minimum");
  EXPECT_LT(r.iterations.back().next_poll_size, 1e-3);
}

TEST(Driver, InitialPointErrors) {
  const auto s = unit_box(2);
  FunctionBlackbox failing([](const Point&) -> Outcome { return Failure{"boom"}; });
  EXPECT_THROW(optimize(s, failing, Point{{0.5, 0.5}}, DriverConfig{}), InitialPointFailed);
  auto ok = FunctionBlackbox::from_objective([](const Point&) { return 0.0; });
  EXPECT_THROW(optimize(s, ok, Point{{0.5, 1.5}}, DriverConfig{}), StructuralError);
  EXPECT_THROW(optimize(s, ok, Point{{0.5}}, DriverConfig{}), StructuralError);
}

TEST(Driver, ConfigValidation) {
  const auto s = unit_box(2);
  auto ok = FunctionBlackbox::from_objective([](const Point&) { return 0.0; });
  DriverConfig cfg;
  cfg.epsilon = 0.0;
  EXPECT_THROW(optimize(s, ok, Point{{0.5, 0.5}}, cfg), ConfigError);
  cfg = {};
  cfg.budget = 0;
  EXPECT_THROW(optimize(s, ok, Point{{0.5, 0.5}}, cfg), ConfigError);
  cfg = {};
  cfg.initial_poll_size = 2.0;
  EXPECT_THROW(optimize(s, ok, Point{{0.5, 0.5}}, cfg), ConfigError);
  EXPECT_THROW(algorithm_from_string("nomad"), ConfigError);
  EXPECT_EQ(algorithm_from_string("dogs"), Algorithm::Dogs);
}

TEST(Driver, AllDiscreteSpaceRunsWithoutSearch) {
  SearchSpace s({VariableSpec::integer("n", 0, 40), VariableSpec::categorical("c", {"a", "b"})});
  auto bb = FunctionBlackbox::from_objective(
      [](const Point& p) { return std::abs(as_integer(p[0]) - 17) + (as_label(p[1]) == "b" ? 0.0 : 3.0); });
  DriverConfig cfg;
  cfg.budget = 100;
  const auto r = optimize(s, bb, Point{{std::int64_t{0}, std::string("a")}}, cfg);
  EXPECT_EQ(r.incumbent.value_or_inf(), 0.0);
  for (const auto& it : r.iterations) EXPECT_EQ(it.search_note, "no continuous variables");
}

TEST(Driver, SearchProposalsShareDiscretePart) {
  const auto prob = make_categorical_branin();
  auto bb = FunctionBlackbox::from_objective(prob.objective);
  DriverConfig cfg;
  cfg.budget = 120;
  const auto r = optimize(prob.space, bb, prob.disadvantageous, cfg);
  std::size_t searches = 0;
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    if (r.history[i].step != Step::Search) continue;
    ++searches;
    EXPECT_TRUE(prob.space.contains(r.history[i].point));
  }
  EXPECT_GT(searches, 0u);
}

TEST(RandomSearch, UsesBudgetAndIsSeeded) {
  const auto prob = make_sphere(6);
  auto bb = FunctionBlackbox::from_objective(prob.objective);
  DriverConfig cfg;
  cfg.budget = 50;
  const auto a = optimize(prob.space, bb, prob.disadvantageous, cfg, Algorithm::Random);
  const auto b = optimize(prob.space, bb, prob.disadvantageous, cfg, Algorithm::Random);
  EXPECT_EQ(a.evaluations_used, 50u);
  EXPECT_EQ(oracle::history_text(a, prob.space), oracle::history_text(b, prob.space));
  EXPECT_EQ(a.history.front().step, Step::Initial);
  EXPECT_EQ(a.history.back().step, Step::Benchmark);
}
