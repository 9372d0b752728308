#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "dmads/directions.hpp"
#include "dmads/evaluator.hpp"
#include "dmads/mesh.hpp"

namespace dmads {

struct PollCandidate {
  Point point;
  std::string tag;  // "d3", "-d1", "int:batch_size+", ...
};

using PollSet = std::vector<PollCandidate>;

/// Mesh neighbors of the incumbent: continuous coordinates stepped by Δm·d for
/// every poll direction d, then each integer variable by ±integer_step. All
/// candidates are projected to the mesh and bounds; duplicates and copies of
/// the incumbent are dropped. Categorical values are never changed here.
inline PollSet poll_candidates(const Point& incumbent, const Mesh& mesh, const SearchSpace& space,
                               std::uint64_t seed) {
  PollSet out;
  std::unordered_set<CanonicalKey> seen{canonical_key(incumbent, space)};
  auto push = [&](Point p, std::string tag) {
    if (seen.insert(canonical_key(p, space)).second) out.push_back({std::move(p), std::move(tag)});
  };

  const auto& reals = space.real_indices();
  const auto dirs = generate_directions(reals.size(), seed, mesh.delta_m, mesh.delta_p);
  const std::size_t half = dirs.size() / 2;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    Point p = incumbent;
    for (std::size_t j = 0; j < reals.size(); ++j) {
      const auto i = reals[j];
      const double u = space.normalize(i, as_real(incumbent[i])) + mesh.delta_m * dirs[k](j);
      p[i] = space.denormalize(i, u);
    }
    std::string tag = (k < half ? "d" : "-d") + std::to_string(k % half + 1);
    push(project_to_mesh(p, mesh, space), std::move(tag));
  }

  for (auto i : space.integer_indices()) {
    const auto step = mesh.integer_step.at(i);
    for (int sign : {+1, -1}) {
      Point p = incumbent;
      p[i] = as_integer(incumbent[i]) + sign * step;
      push(project_bounds(p, space), "int:" + space[i].name + (sign > 0 ? "+" : "-"));
    }
  }
  return out;
}

struct PollResult {
  std::optional<Evaluation> best;  // improving evaluation, else best seen
  bool success = false;
  bool exhausted = false;
  std::size_t evaluations = 0;  // blackbox calls issued (cache hits excluded)
};

/// Evaluates candidates in order (in batches of the evaluator's parallelism)
/// and stops after the first batch holding a strict improvement over
/// `incumbent_value`. Failures never improve.
inline PollResult opportunistic_poll(const PollSet& candidates, Evaluator& evaluator, double incumbent_value,
                                     Step step = Step::Poll) {
  PollResult result;
  const std::size_t batch = evaluator.parallelism();
  for (std::size_t start = 0; start < candidates.size(); start += batch) {
    const std::size_t end = std::min(candidates.size(), start + batch);
    std::vector<Point> points;
    for (std::size_t k = start; k < end; ++k) points.push_back(candidates[k].point);
    const auto before = evaluator.used();
    auto outcomes = evaluator.evaluate_batch(points, step);
    result.evaluations += evaluator.used() - before;

    for (auto& r : outcomes) {
      if (!r) {
        result.exhausted = true;
        continue;
      }
      const Evaluation& e = r->evaluation;
      if (!result.best || e.value_or_inf() < result.best->value_or_inf()) result.best = e;
      if (e.value_or_inf() < incumbent_value) result.success = true;
    }
    if (result.success || result.exhausted) break;
  }
  return result;
}

/// Extended poll over categorical neighborhoods. Every declared neighbor label
/// of every categorical variable is substituted into the incumbent and
/// evaluated. Neighbors whose value is within `trigger`·|f(incumbent)| of the
/// incumbent (or better) get one poll round of their own, most promising
/// first, until one of them improves on the best value found.
inline PollResult extended_poll(const Evaluation& incumbent, const Mesh& mesh, const SearchSpace& space,
                                double trigger, Evaluator& evaluator, std::uint64_t seed) {
  PollResult result;
  result.best = incumbent;
  if (space.categorical_indices().empty()) return result;

  const double f_inc = incumbent.value_or_inf();
  std::vector<Point> base;
  for (auto i : space.categorical_indices()) {
    const auto& label = as_label(incumbent.point[i]);
    for (const auto& nbr : space[i].neighbors.at(label)) {
      Point p = incumbent.point;
      p[i] = nbr;
      base.push_back(std::move(p));
    }
  }

  std::vector<Evaluation> evaluated;
  const std::size_t batch = evaluator.parallelism();
  for (std::size_t start = 0; start < base.size() && !result.exhausted; start += batch) {
    const std::size_t end = std::min(base.size(), start + batch);
    const auto before = evaluator.used();
    auto outcomes =
        evaluator.evaluate_batch({base.begin() + static_cast<std::ptrdiff_t>(start),
                                  base.begin() + static_cast<std::ptrdiff_t>(end)},
                                 Step::ExtendedPoll);
    result.evaluations += evaluator.used() - before;
    for (auto& r : outcomes) {
      if (!r) {
        result.exhausted = true;
        continue;
      }
      evaluated.push_back(r->evaluation);
      if (r->evaluation.value_or_inf() < result.best->value_or_inf()) result.best = r->evaluation;
    }
  }

  std::vector<Evaluation> triggered;
  for (const auto& e : evaluated) {
    if (e.ok() && e.value_or_inf() <= f_inc + trigger * std::abs(f_inc)) triggered.push_back(e);
  }
  std::stable_sort(triggered.begin(), triggered.end(),
                   [](const Evaluation& a, const Evaluation& b) { return a.value_or_inf() < b.value_or_inf(); });

  for (std::size_t t = 0; t < triggered.size() && !result.exhausted; ++t) {
    const auto candidates = poll_candidates(triggered[t].point, mesh, space, mix_seed(seed, t + 1));
    const double reference = result.best->value_or_inf();
    auto round = opportunistic_poll(candidates, evaluator, reference, Step::ExtendedPoll);
    result.evaluations += round.evaluations;
    result.exhausted = result.exhausted || round.exhausted;
    if (round.best && round.best->value_or_inf() < reference) {
      result.best = round.best;
      break;
    }
  }
  result.success = result.best->value_or_inf() < f_inc;
  return result;
}

}  // namespace dmads
