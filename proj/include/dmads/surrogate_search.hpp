#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <unordered_set>
#include <vector>

#include "dmads/delaunay.hpp"
#include "dmads/directions.hpp"
#include "dmads/interpolant.hpp"
#include "dmads/mesh.hpp"
#include "dmads/problem_space.hpp"

namespace dmads {

enum class SearchFunction {
  Adaptive,   // s_a(x) = (p(x) − y) / e(x)
  ConstantK,  // s(x) = p(x) − K e(x)
};

struct SearchOptions {
  SearchFunction function = SearchFunction::Adaptive;
  double constant_k = 1.0;
  std::size_t samples_per_simplex = 20;
  std::size_t descent_iterations = 10;
  std::uint64_t seed = 0;
};

/// Surrogate over the continuous subspace: triangulation for the uncertainty
/// e(x), interpolant p(x), and the target value y. Immutable once built.
struct SearchModel {
  Triangulation triangulation;
  Interpolant interpolant;
  double target = 0.0;

  /// Throws NotEnoughPoints or DimensionTooHigh when no model can be built.
  static SearchModel build(const std::vector<Eigen::VectorXd>& points, const std::vector<double>& values,
                           double target) {
    SearchModel m;
    m.interpolant = fit_interpolant(points, values);
    m.triangulation = triangulate(points);
    m.target = target;
    return m;
  }
};

/// Search-function score compared lexicographically: regime 0 holds points
/// where the interpolant already reaches the target (ranked by p), regime 1
/// everything else (ranked by the search function).
struct SearchScore {
  int regime = 2;
  double value = std::numeric_limits<double>::infinity();

  bool operator<(const SearchScore& o) const {
    return regime != o.regime ? regime < o.regime : value < o.value;
  }
};

struct SearchProposal {
  Eigen::VectorXd x;  // normalized continuous coordinates
  SearchScore score;
  std::size_t simplex = 0;
};

namespace detail {

inline SearchScore score_value(const SearchModel& model, const SearchOptions& opt, double e, double p) {
  if (!std::isfinite(p)) return {};
  if (opt.function == SearchFunction::ConstantK) return {1, p - opt.constant_k * std::max(0.0, e)};
  if (p <= model.target) return {0, p};
  if (!(e > 0.0)) return {};
  return {1, (p - model.target) / e};
}

inline SearchScore score_point(const SearchModel& model, const SearchOptions& opt, std::size_t s,
                               const Eigen::VectorXd& x) {
  return score_value(model, opt, model.triangulation.uncertainty_in(s, x), model.interpolant(x));
}

inline Eigen::VectorXd retract_to_simplex(const Triangulation& tri, std::size_t s, const Eigen::VectorXd& y) {
  Eigen::VectorXd lambda = tri.barycentric(s, y);
  if (lambda.minCoeff() >= 0.0) return y;
  lambda = lambda.cwiseMax(0.0);
  lambda /= lambda.sum();
  return tri.from_barycentric(s, lambda);
}

inline double max_edge(const Triangulation& tri, std::size_t s) {
  const auto& sx = tri.simplices()[s];
  double m = 0.0;
  for (std::size_t a = 0; a < sx.vertices.size(); ++a) {
    for (std::size_t b = a + 1; b < sx.vertices.size(); ++b) {
      m = std::max(m, (tri.vertex(sx, a) - tri.vertex(sx, b)).norm());
    }
  }
  return m;
}

}  // namespace detail

/// Best sampled point of every simplex, best first. Samples per simplex: the
/// barycenter, the circumcenter when it is interior, and seeded
/// Dirichlet-random interior points.
inline std::vector<SearchProposal> rank_search_points(const SearchModel& model, const SearchOptions& opt) {
  const auto& tri = model.triangulation;
  const auto n1 = static_cast<Eigen::Index>(tri.dimension() + 1);
  std::vector<SearchProposal> out;
  for (std::size_t s = 0; s < tri.simplices().size(); ++s) {
    SearchProposal best;
    best.simplex = s;
    auto consider = [&](const Eigen::VectorXd& lambda) {
      const Eigen::VectorXd x = tri.from_barycentric(s, lambda);
      const auto sc = detail::score_value(model, opt, tri.uncertainty_bary(s, lambda, x), model.interpolant(x));
      if (sc < best.score) {
        best.score = sc;
        best.x = x;
      }
    };
    consider(Eigen::VectorXd::Constant(n1, 1.0 / static_cast<double>(n1)));
    const auto center_lambda = tri.barycentric(s, tri.simplices()[s].sphere.center);
    if (center_lambda.minCoeff() > 1e-12) consider(center_lambda);
    std::mt19937_64 rng(mix_seed(opt.seed, s));
    for (std::size_t k = 0; k < opt.samples_per_simplex; ++k) {
      Eigen::VectorXd lambda(n1);
      for (Eigen::Index j = 0; j < n1; ++j) lambda(j) = -std::log(1.0 - detail::unit_uniform(rng));
      lambda /= lambda.sum();
      consider(lambda);
    }
    if (best.score.regime < 2) out.push_back(std::move(best));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SearchProposal& a, const SearchProposal& b) { return a.score < b.score; });
  return out;
}

/// Coordinate descent with step halving, confined to the proposal's simplex.
inline SearchProposal refine_search_point(const SearchModel& model, const SearchOptions& opt, SearchProposal prop) {
  const auto& tri = model.triangulation;
  double h = 0.25 * detail::max_edge(tri, prop.simplex);
  for (std::size_t it = 0; it < opt.descent_iterations; ++it) {
    bool improved = false;
    for (Eigen::Index j = 0; j < prop.x.size(); ++j) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd y = prop.x;
        y(j) += sign * h;
        y = detail::retract_to_simplex(tri, prop.simplex, y);
        const auto sc = detail::score_point(model, opt, prop.simplex, y);
        if (sc < prop.score) {
          prop.score = sc;
          prop.x = y;
          improved = true;
        }
      }
    }
    if (!improved) h *= 0.5;
  }
  return prop;
}

/// One uncached mesh candidate from the surrogate, or nullopt when every
/// proposal projects onto an already evaluated point. `discrete` is the frozen
/// x^N; the continuous part comes from minimizing the search function. Only
/// the global best is refined; when it projects onto a cached point the best
/// points of the other simplices are tried in rank order.
inline std::optional<Point> search_minimize(const SearchModel& model, const Mesh& mesh, const SearchSpace& space,
                                            const std::vector<Value>& discrete,
                                            const std::function<bool(const Point&)>& is_cached,
                                            const SearchOptions& opt = {}) {
  const auto& reals = space.real_indices();
  if (reals.size() != model.triangulation.dimension()) {
    throw StructuralError("search model dimension does not match the real variables of the space");
  }
  std::unordered_set<CanonicalKey> tried;
  auto ranked = rank_search_points(model, opt);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    auto prop = r == 0 ? refine_search_point(model, opt, std::move(ranked[r])) : std::move(ranked[r]);
    std::vector<double> real(reals.size());
    for (std::size_t j = 0; j < reals.size(); ++j) {
      real[j] = space.denormalize(reals[j], std::clamp(prop.x(static_cast<Eigen::Index>(j)), 0.0, 1.0));
    }
    Point candidate = project_to_mesh(merge(discrete, real, space), mesh, space);
    if (!tried.insert(canonical_key(candidate, space)).second) continue;
    if (!is_cached(candidate)) return candidate;
  }
  return std::nullopt;
}

}  // namespace dmads
