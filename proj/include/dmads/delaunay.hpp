#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "dmads/error.hpp"

namespace dmads {

/// Largest continuous dimension accepted by `triangulate`.
inline constexpr std::size_t kMaxTriangulationDim = 8;
/// Simplices at or below this volume are treated as degenerate.
inline constexpr double kMinSimplexVolume = 1e-12;
/// Amplitude of the perturbation applied to degenerate inputs.
inline constexpr double kJitter = 1e-9;

struct Sphere {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// Circumsphere of a simplex given by n+1 vertices in R^n.
inline Sphere circumsphere(const std::vector<Eigen::VectorXd>& vertices) {
  if (vertices.empty()) throw SingularSystem("circumsphere of an empty simplex");
  const auto n = vertices.front().size();
  if (static_cast<Eigen::Index>(vertices.size()) != n + 1) {
    throw SingularSystem("circumsphere needs n+1 vertices in R^n");
  }
  // 2 (v_i - v_0) . c = |v_i - v_0|^2, with c = z - v_0
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd e = vertices[static_cast<std::size_t>(i + 1)] - vertices[0];
    a.row(i) = 2.0 * e.transpose();
    b(i) = e.squaredNorm();
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-14);
  if (n > 0 && lu.rank() < n) throw SingularSystem("degenerate simplex has no circumsphere");
  const Eigen::VectorXd c = n > 0 ? Eigen::VectorXd(lu.solve(b)) : Eigen::VectorXd(0);
  return {vertices[0] + c, c.norm()};
}

/// One simplex of a triangulation, with cached geometry.
struct Simplex {
  std::vector<int> vertices;  // n+1 vertex indices
  Sphere sphere;
  double volume = 0.0;
  Eigen::MatrixXd inverse_edges;  // inverse of [v_1 - v_0, ..., v_n - v_0]
};

/// Delaunay triangulation of points in [0,1]^n.
class Triangulation {
public:
  Triangulation() = default;
  Triangulation(std::size_t dim, std::vector<Eigen::VectorXd> vertices, std::vector<Simplex> simplices)
      : dim_(dim), vertices_(std::move(vertices)), simplices_(std::move(simplices)) {}

  std::size_t dimension() const { return dim_; }
  const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }
  const std::vector<Simplex>& simplices() const { return simplices_; }

  const Eigen::VectorXd& vertex(const Simplex& s, std::size_t k) const {
    return vertices_[static_cast<std::size_t>(s.vertices[k])];
  }

  /// Barycentric coordinates of x with respect to simplex s.
  Eigen::VectorXd barycentric(std::size_t s, const Eigen::VectorXd& x) const {
    const auto& sx = simplices_[s];
    const Eigen::VectorXd tail = sx.inverse_edges * (x - vertex(sx, 0));
    Eigen::VectorXd lambda(tail.size() + 1);
    lambda(0) = 1.0 - tail.sum();
    lambda.tail(tail.size()) = tail;
    return lambda;
  }

  Eigen::VectorXd from_barycentric(std::size_t s, const Eigen::VectorXd& lambda) const {
    const auto& sx = simplices_[s];
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    for (std::size_t k = 0; k < sx.vertices.size(); ++k) x += lambda(static_cast<Eigen::Index>(k)) * vertex(sx, k);
    return x;
  }

  /// First simplex containing x (barycentric coordinates >= -tol).
  std::optional<std::size_t> locate(const Eigen::VectorXd& x, double tol = 1e-10) const {
    for (std::size_t s = 0; s < simplices_.size(); ++s) {
      if (barycentric(s, x).minCoeff() >= -tol) return s;
    }
    return std::nullopt;
  }

  /// r² − ‖x − z‖² of simplex s, evaluated in the equivalent barycentric form
  /// Σ λ_i ‖x − v_i‖², which stays accurate for thin simplices.
  double uncertainty_in(std::size_t s, const Eigen::VectorXd& x) const {
    const auto lambda = barycentric(s, x);
    const auto& sx = simplices_[s];
    double e = 0.0;
    for (std::size_t k = 0; k < sx.vertices.size(); ++k) {
      e += lambda(static_cast<Eigen::Index>(k)) * (x - vertex(sx, k)).squaredNorm();
    }
    return e;
  }

  /// Same as uncertainty_in for a point already given by its barycentric
  /// coordinates `lambda` in simplex s.
  double uncertainty_bary(std::size_t s, const Eigen::VectorXd& lambda, const Eigen::VectorXd& x) const {
    const auto& sx = simplices_[s];
    double e = 0.0;
    for (std::size_t k = 0; k < sx.vertices.size(); ++k) {
      e += lambda(static_cast<Eigen::Index>(k)) * (x - vertex(sx, k)).squaredNorm();
    }
    return e;
  }

  /// Uncertainty e(x) on the containing simplex. Throws OutsideHull.
  double uncertainty(const Eigen::VectorXd& x) const {
    const auto s = locate(x);
    if (!s) throw OutsideHull("point lies outside the triangulated hull");
    return std::max(0.0, uncertainty_in(*s, x));
  }

private:
  std::size_t dim_ = 0;
  std::vector<Eigen::VectorXd> vertices_;
  std::vector<Simplex> simplices_;
};

namespace detail {

inline double det_or_zero(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 1.0;
  return m.partialPivLu().determinant();
}

/// Incremental Bowyer-Watson insertion over a triangulation closed by one
/// symbolic vertex at infinity (index -1). A cell holding the infinite vertex
/// stands for a convex-hull facet; a new point conflicts with it when it lies
/// strictly beyond that facet.
class BowyerWatson {
public:
  BowyerWatson(const std::vector<Eigen::VectorXd>& points, bool strict)
      : pts_(points), n_(points.front().size()), strict_(strict) {}

  /// False when a degenerate predicate was hit in strict mode.
  bool run() {
    auto first = initial_simplex();
    if (!first) throw NotEnoughPoints("points are not affinely independent");
    build_initial(*first);
    std::vector<bool> used(pts_.size(), false);
    for (int i : *first) used[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (used[i]) continue;
      insert(static_cast<int>(i));
      if (strict_ && degenerate_) return false;
    }
    return !(strict_ && degenerate_);
  }

  /// Vertex index lists of the finite cells.
  std::vector<std::vector<int>> finite_cells() const {
    std::vector<std::vector<int>> out;
    for (const auto& c : cells_) {
      if (c.alive && std::find(c.v.begin(), c.v.end(), -1) == c.v.end()) out.push_back(c.v);
    }
    return out;
  }

private:
  struct Cell {
    std::vector<int> v;    // n+1 vertices, -1 = infinity
    std::vector<int> adj;  // adj[j] is the cell across the facet opposite v[j]
    bool alive = true;
    // cached fast-path geometry
    bool has_sphere = false;
    Eigen::VectorXd center;
    double r2 = 0.0;
    Eigen::VectorXd normal;  // infinite cells: outward unit normal of the hull facet
    double offset = 0.0;
  };

  const Eigen::VectorXd& P(int i) const { return pts_[static_cast<std::size_t>(i)]; }

  std::optional<std::vector<int>> initial_simplex() const {
    std::vector<int> chosen{0};
    std::vector<Eigen::VectorXd> basis;
    for (Eigen::Index k = 0; k < n_; ++k) {
      double best = 0.0;
      int best_i = -1;
      Eigen::VectorXd best_r;
      for (std::size_t i = 0; i < pts_.size(); ++i) {
        Eigen::VectorXd r = pts_[i] - pts_[0];
        for (const auto& q : basis) r -= q.dot(r) * q;
        const double d = r.norm();
        if (d > best) {
          best = d;
          best_i = static_cast<int>(i);
          best_r = r;
        }
      }
      if (best_i < 0 || best < 1e-12) return std::nullopt;
      basis.push_back(best_r / best);
      chosen.push_back(best_i);
    }
    return chosen;
  }

  void build_initial(const std::vector<int>& first) {
    interior_ = Eigen::VectorXd::Zero(n_);
    for (int i : first) interior_ += P(i);
    interior_ /= static_cast<double>(first.size());
    std::vector<int> ids;
    ids.push_back(add_cell(first));
    for (std::size_t j = 0; j < first.size(); ++j) {
      auto v = first;
      v[j] = -1;
      ids.push_back(add_cell(v));
    }
    link(ids);
  }

  int add_cell(std::vector<int> v) {
    Cell c;
    c.v = std::move(v);
    c.adj.assign(c.v.size(), -1);
    cache_geometry(c);
    cells_.push_back(std::move(c));
    return static_cast<int>(cells_.size() - 1);
  }

  static std::vector<int> facet_key(const std::vector<int>& v, std::size_t skip) {
    std::vector<int> f;
    f.reserve(v.size() - 1);
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k != skip) f.push_back(v[k]);
    }
    std::sort(f.begin(), f.end());
    return f;
  }

  /// Pairs up unlinked facets among `ids`.
  void link(const std::vector<int>& ids) {
    std::map<std::vector<int>, std::pair<int, std::size_t>> open;
    for (int id : ids) {
      auto& c = cells_[static_cast<std::size_t>(id)];
      for (std::size_t j = 0; j < c.v.size(); ++j) {
        if (c.adj[j] != -1) continue;
        auto key = facet_key(c.v, j);
        auto it = open.find(key);
        if (it == open.end()) {
          open.emplace(std::move(key), std::make_pair(id, j));
        } else {
          c.adj[j] = it->second.first;
          cells_[static_cast<std::size_t>(it->second.first)].adj[it->second.second] = id;
          open.erase(it);
        }
      }
    }
  }

  void cache_geometry(Cell& c) const {
    const auto inf = std::find(c.v.begin(), c.v.end(), -1);
    if (inf == c.v.end()) {
      std::vector<Eigen::VectorXd> verts;
      for (int i : c.v) verts.push_back(P(i));
      Eigen::MatrixXd a(n_, n_);
      Eigen::VectorXd b(n_);
      for (Eigen::Index i = 0; i < n_; ++i) {
        const Eigen::VectorXd e = verts[static_cast<std::size_t>(i + 1)] - verts[0];
        a.row(i) = 2.0 * e.transpose();
        b(i) = e.squaredNorm();
      }
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
      if (lu.rcond() > 1e-7) {
        const Eigen::VectorXd z = lu.solve(b);
        c.center = verts[0] + z;
        c.r2 = z.squaredNorm();
        c.has_sphere = std::isfinite(c.r2);
      }
      return;
    }
    std::vector<Eigen::VectorXd> facet;
    for (int i : c.v) {
      if (i >= 0) facet.push_back(P(i));
    }
    Eigen::VectorXd nrm(n_);
    if (n_ == 1) {
      nrm << 1.0;
    } else {
      Eigen::MatrixXd e(n_ - 1, n_);
      for (Eigen::Index k = 1; k < n_; ++k) e.row(k - 1) = (facet[static_cast<std::size_t>(k)] - facet[0]).transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(e);
      const Eigen::MatrixXd ker = lu.kernel();
      if (ker.cols() != 1) return;
      nrm = ker.col(0).normalized();
    }
    double off = nrm.dot(facet[0]);
    if (nrm.dot(interior_) - off > 0) {
      nrm = -nrm;
      off = -off;
    }
    c.normal = nrm;
    c.offset = off;
    c.has_sphere = true;
  }

  /// Sign-carrying lifted determinant test for finite cells.
  bool insphere_exact(const Cell& c, const Eigen::VectorXd& p) {
    const auto m = n_ + 1;
    Eigen::MatrixXd lifted(m, m);
    double scale = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::VectorXd d = P(c.v[static_cast<std::size_t>(i)]) - p;
      lifted.row(i).head(n_) = d.transpose();
      lifted(i, n_) = d.squaredNorm();
      scale *= std::max(lifted.row(i).norm(), 1e-300);
    }
    Eigen::MatrixXd edges(n_, n_);
    double oscale = 1.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      edges.row(i) = (P(c.v[static_cast<std::size_t>(i + 1)]) - P(c.v[0])).transpose();
      oscale *= std::max(edges.row(i).norm(), 1e-300);
    }
    const double d = det_or_zero(lifted);
    const double o = det_or_zero(edges);
    if (std::abs(d) <= 1e-12 * scale || std::abs(o) <= 1e-12 * oscale) degenerate_ = true;
    const double sign = (n_ % 2 == 0) ? 1.0 : -1.0;
    return sign * o * d > 0.0;
  }

  bool beyond_facet_exact(const Cell& c, const Eigen::VectorXd& p) {
    std::vector<Eigen::VectorXd> facet;
    for (int i : c.v) {
      if (i >= 0) facet.push_back(P(i));
    }
    Eigen::MatrixXd m(n_, n_);
    double scale = 1.0;
    for (Eigen::Index k = 1; k < n_; ++k) {
      m.row(k - 1) = (facet[static_cast<std::size_t>(k)] - facet[0]).transpose();
      scale *= std::max(m.row(k - 1).norm(), 1e-300);
    }
    m.row(n_ - 1) = (p - facet[0]).transpose();
    const double op = det_or_zero(m) ;
    const double sp = scale * std::max(m.row(n_ - 1).norm(), 1e-300);
    m.row(n_ - 1) = (interior_ - facet[0]).transpose();
    const double oi = det_or_zero(m);
    if (std::abs(op) <= 1e-12 * sp) degenerate_ = true;
    return op * oi < 0.0;
  }

  bool in_conflict(const Cell& c, const Eigen::VectorXd& p) {
    const bool infinite = std::find(c.v.begin(), c.v.end(), -1) != c.v.end();
    if (infinite) {
      if (c.has_sphere) {
        const double dist = c.normal.dot(p) - c.offset;
        if (dist > 1e-9) return true;
        if (dist < -1e-9) return false;
      }
      return beyond_facet_exact(c, p);
    }
    if (c.has_sphere) {
      const double d2 = (p - c.center).squaredNorm();
      if (d2 < c.r2 * (1.0 - 1e-9)) return true;
      if (d2 > c.r2 * (1.0 + 1e-9)) return false;
    }
    return insphere_exact(c, p);
  }

  void insert(int pi) {
    const Eigen::VectorXd& p = P(pi);
    int seed_cell = -1;
    for (std::size_t k = cells_.size(); k-- > 0;) {
      if (cells_[k].alive && in_conflict(cells_[k], p)) {
        seed_cell = static_cast<int>(k);
        break;
      }
    }
    if (seed_cell < 0) {
      degenerate_ = true;
      return;
    }

    std::vector<int> conflict{seed_cell};
    std::vector<char> state(cells_.size(), 0);  // 0 unknown, 1 conflict, 2 clear
    state[static_cast<std::size_t>(seed_cell)] = 1;
    for (std::size_t q = 0; q < conflict.size(); ++q) {
      const auto& c = cells_[static_cast<std::size_t>(conflict[q])];
      for (int nb : c.adj) {
        auto& st = state[static_cast<std::size_t>(nb)];
        if (st != 0) continue;
        if (in_conflict(cells_[static_cast<std::size_t>(nb)], p)) {
          st = 1;
          conflict.push_back(nb);
        } else {
          st = 2;
        }
      }
    }

    std::vector<int> created;
    for (int ci : conflict) {
      for (std::size_t j = 0; j < cells_[static_cast<std::size_t>(ci)].v.size(); ++j) {
        const int outside = cells_[static_cast<std::size_t>(ci)].adj[j];
        if (state[static_cast<std::size_t>(outside)] == 1) continue;
        auto v = cells_[static_cast<std::size_t>(ci)].v;
        v[j] = pi;
        const int id = add_cell(std::move(v));
        cells_[static_cast<std::size_t>(id)].adj[j] = outside;
        auto& out_cell = cells_[static_cast<std::size_t>(outside)];
        for (auto& a : out_cell.adj) {
          if (a == ci) a = id;
        }
        created.push_back(id);
      }
    }
    for (int ci : conflict) cells_[static_cast<std::size_t>(ci)].alive = false;
    link(created);
  }

  const std::vector<Eigen::VectorXd>& pts_;
  Eigen::Index n_;
  bool strict_;
  bool degenerate_ = false;
  Eigen::VectorXd interior_;
  std::vector<Cell> cells_;
};

}  // namespace detail

/// Delaunay triangulation of normalized continuous points by incremental
/// insertion. Duplicates are merged (12-digit rounding). When exact
/// predicates hit a degeneracy (cospherical or coplanar inputs), the points
/// are perturbed by at most 1e-9 and the construction is redone; simplices are
/// always reported in the original coordinates.
inline Triangulation triangulate(const std::vector<Eigen::VectorXd>& input) {
  if (input.empty()) throw NotEnoughPoints("no points to triangulate");
  const auto dim = static_cast<std::size_t>(input.front().size());
  if (dim == 0) throw NotEnoughPoints("zero-dimensional points");
  if (dim > kMaxTriangulationDim) {
    throw DimensionTooHigh("triangulation limited to " + std::to_string(kMaxTriangulationDim) + " dimensions");
  }

  std::vector<Eigen::VectorXd> pts;
  std::set<std::vector<long long>> seen;
  for (const auto& p : input) {
    if (static_cast<std::size_t>(p.size()) != dim) throw NotEnoughPoints("points of mixed dimension");
    std::vector<long long> key(dim);
    for (std::size_t k = 0; k < dim; ++k) key[k] = std::llround(p(static_cast<Eigen::Index>(k)) * 1e12);
    if (seen.insert(std::move(key)).second) pts.push_back(p);
  }
  if (pts.size() < dim + 1) throw NotEnoughPoints("need at least n+1 distinct points");

  {
    Eigen::MatrixXd edges(static_cast<Eigen::Index>(pts.size() - 1), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 1; i < pts.size(); ++i) edges.row(static_cast<Eigen::Index>(i - 1)) = (pts[i] - pts[0]).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(edges);
    const auto& sv = svd.singularValues();
    if (sv.size() < static_cast<Eigen::Index>(dim) || sv(static_cast<Eigen::Index>(dim) - 1) <= 1e-9 * std::max(1.0, sv(0))) {
      throw NotEnoughPoints("fewer than n+1 affinely independent points");
    }
  }

  std::vector<std::vector<int>> cells;
  {
    detail::BowyerWatson exact(pts, true);
    if (exact.run()) {
      cells = exact.finite_cells();
    } else {
      std::vector<Eigen::VectorXd> jittered = pts;
      std::mt19937_64 rng(0x6a09e667f3bcc908ULL);
      for (auto& p : jittered) {
        for (Eigen::Index k = 0; k < p.size(); ++k) {
          p(k) += kJitter * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
        }
      }
      detail::BowyerWatson perturbed(jittered, false);
      perturbed.run();
      cells = perturbed.finite_cells();
    }
  }

  std::vector<Simplex> simplices;
  double factorial = 1.0;
  for (std::size_t k = 2; k <= dim; ++k) factorial *= static_cast<double>(k);
  for (auto& v : cells) {
    std::sort(v.begin(), v.end());
    Eigen::MatrixXd edges(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 1; k <= dim; ++k) {
      edges.col(static_cast<Eigen::Index>(k - 1)) = pts[static_cast<std::size_t>(v[k])] - pts[static_cast<std::size_t>(v[0])];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(edges);
    const double volume = std::abs(lu.determinant()) / factorial;
    if (!(volume > kMinSimplexVolume)) continue;
    Simplex s;
    s.vertices = v;
    s.volume = volume;
    s.inverse_edges = lu.inverse();
    std::vector<Eigen::VectorXd> verts;
    for (int i : v) verts.push_back(pts[static_cast<std::size_t>(i)]);
    try {
      s.sphere = circumsphere(verts);
    } catch (const SingularSystem&) {
      continue;
    }
    simplices.push_back(std::move(s));
  }
  std::sort(simplices.begin(), simplices.end(),
            [](const Simplex& a, const Simplex& b) { return a.vertices < b.vertices; });
  if (simplices.empty()) throw NotEnoughPoints("triangulation produced no non-degenerate simplex");
  return Triangulation(dim, std::move(pts), std::move(simplices));
}

}  // namespace dmads
