#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "dmads/error.hpp"
#include "dmads/problem_space.hpp"

namespace dmads {

/// Analytic test problem with a documented optimum.
struct BenchmarkProblem {
  std::string name;
  SearchSpace space;
  std::function<double(const Point&)> objective;
  double optimum = 0.0;
  Point optimizer;
  bool multimodal = false;
  Point advantageous;
  Point disadvantageous;
};

namespace detail {

inline std::vector<double> reals_of(const Point& p) {
  std::vector<double> out;
  for (const auto& v : p.values) out.push_back(as_real(v));
  return out;
}

inline Point real_point(std::vector<double> xs) {
  Point p;
  for (double x : xs) p.values.emplace_back(x);
  return p;
}

inline SearchSpace box(std::size_t n, double lo, double hi) {
  std::vector<VariableSpec> vars;
  for (std::size_t i = 0; i < n; ++i) vars.push_back(VariableSpec::real("x" + std::to_string(i + 1), lo, hi));
  return SearchSpace(std::move(vars));
}

}  // namespace detail

inline double sphere(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline double rosenbrock(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

inline double styblinski_tang(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v * v * v - 16.0 * v * v + 5.0 * v;
  return 0.5 * s;
}

inline double branin(double x1, double x2) {
  constexpr double pi = std::numbers::pi;
  constexpr double b = 5.1 / (4.0 * pi * pi);
  constexpr double c = 5.0 / pi;
  constexpr double t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

/// Stationary point of the one-dimensional Styblinski–Tang term.
inline constexpr double kStyblinskiTangArgmin = -2.903534027771177;
/// Per-coordinate minimum value of the Styblinski–Tang function.
inline constexpr double kStyblinskiTangMin = -39.16616570377142;
/// Global minimum of the Branin function, 5/(4π).
inline constexpr double kBraninMin = 0.39788735772973816;

/// Category offsets of the categorical Branin problem.
inline const std::map<std::string, double>& categorical_branin_offsets() {
  static const std::map<std::string, double> offsets{{"a", 0.6}, {"b", 0.0}, {"c", 0.3}};
  return offsets;
}

inline BenchmarkProblem make_sphere(std::size_t n) {
  BenchmarkProblem p;
  p.name = "sphere" + std::to_string(n);
  p.space = detail::box(n, -5.0, 5.0);
  p.objective = [](const Point& x) { return sphere(detail::reals_of(x)); };
  p.optimum = 0.0;
  p.optimizer = detail::real_point(std::vector<double>(n, 0.0));
  p.advantageous = detail::real_point(std::vector<double>(n, 0.5));
  p.disadvantageous = detail::real_point(std::vector<double>(n, 4.5));
  return p;
}

inline BenchmarkProblem make_rosenbrock(std::size_t n) {
  BenchmarkProblem p;
  p.name = "rosenbrock" + std::to_string(n);
  p.space = detail::box(n, -2.0, 2.0);
  p.objective = [](const Point& x) { return rosenbrock(detail::reals_of(x)); };
  p.optimum = 0.0;
  p.optimizer = detail::real_point(std::vector<double>(n, 1.0));
  p.multimodal = n >= 4;  // a second local minimum near (−1, 1, …, 1)
  p.advantageous = detail::real_point(std::vector<double>(n, 0.5));
  std::vector<double> bad(n, 1.5);
  bad[0] = -1.5;
  p.disadvantageous = detail::real_point(bad);
  return p;
}

inline BenchmarkProblem make_styblinski_tang(std::size_t n) {
  BenchmarkProblem p;
  p.name = "styblinski_tang" + std::to_string(n);
  p.space = detail::box(n, -5.0, 5.0);
  p.objective = [](const Point& x) { return styblinski_tang(detail::reals_of(x)); };
  p.optimum = kStyblinskiTangMin * static_cast<double>(n);
  p.optimizer = detail::real_point(std::vector<double>(n, kStyblinskiTangArgmin));
  p.multimodal = true;
  p.advantageous = detail::real_point(std::vector<double>(n, -2.0));
  p.disadvantageous = detail::real_point(std::vector<double>(n, 2.5));
  return p;
}

inline BenchmarkProblem make_branin() {
  BenchmarkProblem p;
  p.name = "branin";
  p.space = SearchSpace({VariableSpec::real("x1", -5.0, 10.0), VariableSpec::real("x2", 0.0, 15.0)});
  p.objective = [](const Point& x) { return branin(as_real(x[0]), as_real(x[1])); };
  p.optimum = kBraninMin;
  p.optimizer = detail::real_point({std::numbers::pi, 2.275});
  p.multimodal = true;
  p.advantageous = detail::real_point({2.0, 4.0});
  p.disadvantageous = detail::real_point({-4.0, 1.0});
  return p;
}

/// Three Branin surfaces offset by a category, with x2 = 0.025·x2i on an
/// integer grid x2i ∈ [0, 600]. The minimizers of the "b" surface fall on the
/// grid (x2i = 91, 99, 491), so the optimum is the plain Branin minimum.
inline BenchmarkProblem make_categorical_branin() {
  BenchmarkProblem p;
  p.name = "categorical_branin";
  p.space = SearchSpace({VariableSpec::categorical("surface", {"a", "b", "c"}), VariableSpec::real("x1", -5.0, 10.0),
                         VariableSpec::integer("x2i", 0, 600)});
  p.objective = [](const Point& x) {
    const double x2 = 0.025 * static_cast<double>(as_integer(x[2]));
    return branin(as_real(x[1]), x2) + categorical_branin_offsets().at(as_label(x[0]));
  };
  p.optimum = kBraninMin;
  p.optimizer = Point{{std::string("b"), std::numbers::pi, std::int64_t{91}}};
  p.multimodal = true;
  p.advantageous = Point{{std::string("b"), 2.0, std::int64_t{160}}};
  p.disadvantageous = Point{{std::string("a"), -4.0, std::int64_t{40}}};
  return p;
}

/// Separable stand-in for a hyperparameter-tuning objective over the VAE
/// space (32 input features). Zero at `toy_hpo_optimizer()`.
inline double toy_hpo(const Point& x) {
  static const std::map<std::string, double> activation{{"ReLU", 0.0}, {"Sigmoid", 0.3}, {"Tanh", 0.1}};
  static const std::map<std::string, double> optimizer{{"SGD", 0.2}, {"Adam", 0.0}, {"Adagrad", 0.3}, {"RMSProp", 0.1}};
  auto sq = [](double v) { return v * v; };
  double f = 0.0;
  f += sq((static_cast<double>(as_integer(x[0])) - 3.0) / 49.0);
  f += sq((static_cast<double>(as_integer(x[1])) - 8.0) / 30.0);
  f += sq((static_cast<double>(as_integer(x[2])) - 128.0) / 502.0);
  f += activation.at(as_label(x[3]));
  f += sq(as_real(x[4]) - 0.2);
  f += optimizer.at(as_label(x[5]));
  const double hp_opt[4] = {0.1, 0.9, 0.5, 0.3};
  for (int k = 0; k < 4; ++k) f += sq(as_real(x[6 + static_cast<std::size_t>(k)]) - hp_opt[k]);
  f += sq((as_real(x[10]) - 0.95) / 0.5);
  return f;
}

inline Point toy_hpo_optimizer() {
  return Point{{std::int64_t{3}, std::int64_t{8}, std::int64_t{128}, std::string("ReLU"), 0.2, std::string("Adam"), 0.1,
                0.9, 0.5, 0.3, 0.95}};
}

inline BenchmarkProblem make_toy_hpo() {
  BenchmarkProblem p;
  p.name = "toy_hpo";
  p.space = builtin_vae_space(32);
  p.objective = toy_hpo;
  p.optimum = 0.0;
  p.optimizer = toy_hpo_optimizer();
  p.advantageous = Point{{std::int64_t{4}, std::int64_t{10}, std::int64_t{100}, std::string("ReLU"), 0.3,
                          std::string("RMSProp"), 0.2, 0.7, 0.5, 0.4, 0.9}};
  p.disadvantageous = Point{{std::int64_t{40}, std::int64_t{30}, std::int64_t{500}, std::string("Sigmoid"), 0.9,
                             std::string("Adagrad"), 0.9, 0.1, 0.0, 1.0, 0.5}};
  return p;
}

/// The standard suite, in a fixed order.
inline std::vector<BenchmarkProblem> builtin_suite() {
  return {make_sphere(2),       make_sphere(6), make_rosenbrock(2),           make_rosenbrock(4),
          make_styblinski_tang(4), make_branin(), make_categorical_branin(), make_toy_hpo()};
}

inline BenchmarkProblem builtin_problem(const std::string& name) {
  for (auto& p : builtin_suite()) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown builtin problem '" + name + "'");
}

}  // namespace dmads
