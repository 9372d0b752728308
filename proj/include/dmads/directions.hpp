#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace dmads {

/// splitmix64 finalizer; derives independent seeds from (seed, stream).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

/// Uniform in [0,1) from the top 53 bits; identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double standard_normal(std::mt19937_64& rng) {
  // Box-Muller; avoids log(0)
  const double u1 = 1.0 - unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Integer vector q = round(alpha * v) with the largest squared norm not
/// exceeding `target_sq` (and at least one nonzero entry).
inline Eigen::VectorXd integer_householder_seed(const Eigen::VectorXd& v, double target_sq) {
  const auto n = v.size();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  best(imax) = v(imax) >= 0 ? 1.0 : -1.0;
  double best_sq = 1.0;
  const double alpha_max = std::sqrt(target_sq) + std::sqrt(static_cast<double>(n)) + 1.0;
  const double step = 1.0 / (8.0 * std::sqrt(static_cast<double>(n)));
  for (double alpha = step; alpha <= alpha_max; alpha += step) {
    Eigen::VectorXd q = (alpha * v).array().round().matrix();
    const double sq = q.squaredNorm();
    if (sq > best_sq && sq <= target_sq) {
      best = q;
      best_sq = sq;
    }
  }
  return best;
}

}  // namespace detail

/// OrthoMADS-style poll directions in normalized continuous coordinates.
///
/// A seeded pseudorandom unit vector v is turned into an integer vector q
/// whose squared norm approximates Δp/Δm; the columns h_i of the integer
/// Householder matrix ‖q‖² I − 2 q qᵀ are mutually orthogonal with norm ‖q‖²,
/// so the steps Δm·h_i have length ≈ Δp. Returns {h_1..h_n, −h_1..−h_n}, a
/// positive spanning set. Entries are integers, so steps stay on the mesh.
inline std::vector<Eigen::VectorXd> generate_directions(std::size_t n_cont, std::uint64_t seed,
                                                        double delta_m, double delta_p) {
  std::vector<Eigen::VectorXd> dirs;
  if (n_cont == 0) return dirs;
  const auto n = static_cast<Eigen::Index>(n_cont);
  std::mt19937_64 rng(seed);
  Eigen::VectorXd v(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) v(i) = detail::standard_normal(rng);
  } while (v.norm() < 1e-12);
  v.normalize();

  const double target_sq = std::max(1.0, delta_p / delta_m);
  const Eigen::VectorXd q = detail::integer_householder_seed(v, target_sq);
  const Eigen::MatrixXd h =
      q.squaredNorm() * Eigen::MatrixXd::Identity(n, n) - 2.0 * q * q.transpose();

  dirs.reserve(2 * n_cont);
  for (Eigen::Index j = 0; j < n; ++j) dirs.push_back(h.col(j));
  for (Eigen::Index j = 0; j < n; ++j) dirs.push_back(-h.col(j));
  return dirs;
}

}  // namespace dmads
