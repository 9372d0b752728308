#pragma once

// Brute-force references shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmads/delaunay.hpp"
#include "dmads/driver.hpp"
#include "dmads/json_io.hpp"

namespace oracle {

inline std::vector<Eigen::VectorXd> random_points(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::VectorXd> pts;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(dim));
    for (auto& c : p) c = u(rng);
    pts.push_back(p);
  }
  return pts;
}

// every vertex of the set lies on or outside every circumsphere
inline bool empty_circumspheres(const dmads::Triangulation& tri, double tol = 1e-9) {
  for (const auto& s : tri.simplices()) {
    for (std::size_t i = 0; i < tri.vertices().size(); ++i) {
      if (std::find(s.vertices.begin(), s.vertices.end(), static_cast<int>(i)) != s.vertices.end()) continue;
      if ((tri.vertices()[i] - s.sphere.center).norm() < s.sphere.radius - tol) return false;
    }
  }
  return true;
}

// all (n+1)-subsets of the points whose circumsphere is empty; for points in
// general position this is exactly the Delaunay triangulation
inline std::set<std::vector<int>> brute_force_delaunay(const std::vector<Eigen::VectorXd>& pts, double tol = 1e-9) {
  const auto n = static_cast<std::size_t>(pts.front().size());
  const auto m = pts.size();
  std::set<std::vector<int>> out;
  std::vector<int> pick(n + 1);
  std::vector<bool> mask(m, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n + 1), true);
  do {
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i) if (mask[i]) pick[k++] = static_cast<int>(i);
    std::vector<Eigen::VectorXd> verts;
    Eigen::MatrixXd edges(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n + 1; ++j) verts.push_back(pts[static_cast<std::size_t>(pick[j])]);
    for (std::size_t j = 1; j < n + 1; ++j) edges.col(static_cast<Eigen::Index>(j - 1)) = verts[j] - verts[0];
    if (std::abs(edges.determinant()) < 1e-10) continue;
    const auto sphere = dmads::circumsphere(verts);
    bool empty = true;
    for (std::size_t i = 0; i < m && empty; ++i) {
      if (mask[i]) continue;
      if ((pts[i] - sphere.center).norm() < sphere.radius - tol) empty = false;
    }
    if (empty) out.insert(pick);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return out;
}

inline std::set<std::vector<int>> simplex_set(const dmads::Triangulation& tri) {
  std::set<std::vector<int>> out;
  for (const auto& s : tri.simplices()) out.insert(s.vertices);
  return out;
}

inline bool positively_spans(const std::vector<Eigen::VectorXd>& dirs, const Eigen::VectorXd& v) {
  for (const auto& d : dirs) {
    if (v.dot(d) > 0.0) return true;
  }
  return false;
}

inline Eigen::VectorXd random_unit(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  do {
    for (auto& c : v) c = g(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

// Checks the loop invariants on one run. Returns an empty string when they
// all hold, else a description of the first violation.
inline std::string check_run_invariants(const dmads::RunResult& r, const dmads::SearchSpace& space,
                                        std::size_t budget, double epsilon, bool poll_enabled = true) {
  const auto& it = r.iterations;
  for (std::size_t k = 0; k < it.size(); ++k) {
    const auto& rec = it[k];
    if (std::abs(std::abs(rec.next_target - rec.target) - epsilon) > 1e-12 * std::max(1.0, std::abs(rec.target))) {
      return "target step at iteration " + std::to_string(k) + " is not epsilon";
    }
    if (k + 1 < it.size()) {
      if (std::abs(it[k + 1].target_steps - rec.target_steps) != 1) return "target steps not unit";
      if (it[k + 1].target != rec.next_target) return "target trace not continuous";
      if (it[k + 1].poll_size != rec.next_poll_size) return "poll size trace not continuous";
      if (it[k + 1].incumbent_value > rec.incumbent_value) return "incumbent increased";
    }
    if (!rec.success() && rec.next_poll_size != rec.poll_size / 2.0) {
      return "poll size did not halve after failed iteration " + std::to_string(k);
    }
    if (poll_enabled && (rec.poll_success || rec.extended_poll_success) &&
        rec.next_poll_size != std::min(1.0, 2.0 * rec.poll_size)) {
      return "poll size did not double after successful poll " + std::to_string(k);
    }
  }
  if (r.history.size() != r.evaluations_used) return "history length differs from evaluations used";
  if (r.evaluations_used > budget) return "budget exceeded";
  std::set<dmads::CanonicalKey> keys;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    if (r.history[i].ordinal != i + 1) return "ordinals not contiguous";
    if (!keys.insert(dmads::canonical_key(r.history[i].point, space)).second) return "point evaluated twice";
    best = std::min(best, r.history[i].value_or_inf());
  }
  if (best != r.incumbent.value_or_inf()) return "incumbent is not the best evaluated point";
  return {};
}

inline std::string history_text(const dmads::RunResult& r, const dmads::SearchSpace& space) {
  std::ostringstream os;
  dmads::write_history(os, r.history, space);
  return os.str();
}

}  // namespace oracle
