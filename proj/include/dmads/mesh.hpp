#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dmads/problem_space.hpp"

namespace dmads {

/// MADS mesh state. Sizes live in normalized continuous coordinates, where
/// every real variable spans [0,1]. The lattice is anchored at `anchor`.
struct Mesh {
  double delta_m = 0.015625;
  double delta_p = 0.125;
  // per variable index; meaningful for integer variables only
  std::vector<std::int64_t> integer_step;
  Point anchor;
};

namespace detail {

inline std::int64_t integer_step_for(double delta_p, const VariableSpec& v) {
  return std::max<std::int64_t>(1, std::llround(delta_p * v.range()));
}

inline void refresh_integer_steps(Mesh& mesh, const SearchSpace& space) {
  mesh.integer_step.assign(space.size(), 0);
  for (auto i : space.integer_indices()) mesh.integer_step[i] = integer_step_for(mesh.delta_p, space[i]);
}

}  // namespace detail

inline Mesh make_mesh(const SearchSpace& space, const Point& anchor, double initial_poll_size) {
  if (!(initial_poll_size > 0.0 && initial_poll_size <= 1.0)) {
    throw ConfigError("initial poll size must lie in (0, 1]");
  }
  Mesh mesh;
  mesh.delta_p = initial_poll_size;
  mesh.delta_m = std::min(mesh.delta_p, mesh.delta_p * mesh.delta_p);
  mesh.anchor = anchor;
  detail::refresh_integer_steps(mesh, space);
  return mesh;
}

/// Success doubles the poll size (capped at 1), failure halves it; the mesh
/// size follows as min(Δp, Δp²).
inline Mesh update_mesh(const Mesh& mesh, bool success, const SearchSpace& space) {
  Mesh out = mesh;
  out.delta_p = success ? std::min(2.0 * mesh.delta_p, 1.0) : mesh.delta_p / 2.0;
  out.delta_m = std::min(out.delta_p, out.delta_p * out.delta_p);
  detail::refresh_integer_steps(out, space);
  return out;
}

/// Lattice index range [lo, hi] of normalized coordinate offsets from the
/// anchor that keep a real variable inside [0,1].
inline std::pair<double, double> lattice_range(double anchor_u, double delta_m) {
  return {std::ceil((0.0 - anchor_u) / delta_m - 1e-9), std::floor((1.0 - anchor_u) / delta_m + 1e-9)};
}

/// Rounds every real coordinate to the nearest anchored lattice point inside
/// the bounds, and every integer to its clamped value. Categories untouched.
inline Point project_to_mesh(const Point& p, const Mesh& mesh, const SearchSpace& space) {
  Point out = project_bounds(p, space);
  for (auto i : space.real_indices()) {
    const double ua = space.normalize(i, as_real(mesh.anchor[i]));
    const double u = space.normalize(i, as_real(out[i]));
    auto [lo, hi] = lattice_range(ua, mesh.delta_m);
    const double k = std::clamp(std::round((u - ua) / mesh.delta_m), lo, hi);
    const auto& v = space[i];
    out[i] = std::clamp(space.denormalize(i, ua + k * mesh.delta_m), v.lower, v.upper);
  }
  return out;
}

/// True when every real coordinate of `p` sits on the anchored lattice of
/// `mesh` within `tol` (in lattice units of normalized coordinates).
inline bool on_mesh(const Point& p, const Mesh& mesh, const SearchSpace& space, double tol = 1e-9) {
  for (auto i : space.real_indices()) {
    const double offset = space.normalize(i, as_real(p[i])) - space.normalize(i, as_real(mesh.anchor[i]));
    const double k = offset / mesh.delta_m;
    if (std::abs(offset - std::round(k) * mesh.delta_m) > tol) return false;
  }
  return true;
}

}  // namespace dmads
