#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "dmads/error.hpp"

namespace dmads {

/// Cubic polyharmonic spline with a linear polynomial tail:
///   p(x) = Σ_j w_j ‖x − x_j‖³ + c_0 + cᵀx,   with Σ w_j = 0 and Σ w_j x_j = 0.
/// When the saddle system is numerically singular the spline weights are
/// dropped and the tail is a least-squares linear fit (`interpolating()` is
/// then false).
class Interpolant {
public:
  /// Condition estimate above which the spline falls back to a linear fit.
  static constexpr double kMaxCondition = 1e12;

  Interpolant() = default;

  /// Solves the saddle system on exactly the given nodes; needs at least n+1
  /// distinct nodes in general position.
  static Interpolant solve(const std::vector<Eigen::VectorXd>& nodes, const std::vector<double>& values) {
    if (nodes.empty() || nodes.size() != values.size()) throw NotEnoughPoints("interpolant needs matching nodes and values");
    const auto n = nodes.front().size();
    const auto count = static_cast<Eigen::Index>(nodes.size());
    if (count < n + 1) throw NotEnoughPoints("interpolant needs at least n+1 nodes");

    Interpolant out;
    out.nodes_.resize(n, count);
    for (Eigen::Index j = 0; j < count; ++j) out.nodes_.col(j) = nodes[static_cast<std::size_t>(j)];
    Eigen::VectorXd f(count);
    for (Eigen::Index j = 0; j < count; ++j) f(j) = values[static_cast<std::size_t>(j)];

    const auto m = count + n + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < count; ++i) {
      for (Eigen::Index j = 0; j < count; ++j) a(i, j) = kernel((out.nodes_.col(i) - out.nodes_.col(j)).norm());
      a(i, count) = 1.0;
      a(count, i) = 1.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        a(i, count + 1 + k) = out.nodes_(k, i);
        a(count + 1 + k, i) = out.nodes_(k, i);
      }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs.head(count) = f;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (cond <= kMaxCondition) {
      const Eigen::VectorXd sol = svd.solve(rhs);
      out.weights_ = sol.head(count);
      out.tail_ = sol.tail(n + 1);
      out.interpolating_ = true;
      return out;
    }

    Eigen::MatrixXd p(count, n + 1);
    p.col(0).setOnes();
    p.rightCols(n) = out.nodes_.transpose();
    out.weights_ = Eigen::VectorXd::Zero(count);
    out.tail_ = p.colPivHouseholderQr().solve(f);
    out.interpolating_ = false;
    return out;
  }

  double operator()(const Eigen::VectorXd& x) const {
    const double v = tail_(0) + tail_.tail(tail_.size() - 1).dot(x);
    if (!interpolating_) return v;
    const Eigen::ArrayXd r = (nodes_.colwise() - x).colwise().norm().transpose().array();
    return v + (weights_.array() * r.cube()).sum();
  }

  bool interpolating() const { return interpolating_; }
  const Eigen::MatrixXd& nodes() const { return nodes_; }  // one node per column
  const Eigen::VectorXd& weights() const { return weights_; }
  /// [c_0, c_1 .. c_n]: constant then linear coefficients.
  const Eigen::VectorXd& tail() const { return tail_; }

  static double kernel(double r) { return r * r * r; }

private:
  Eigen::MatrixXd nodes_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd tail_;
  bool interpolating_ = false;
};

/// Fits the interpolant to cached objective values. Duplicate nodes (12-digit
/// rounding) keep the lower value. Needs at least n+2 distinct nodes.
inline Interpolant fit_interpolant(const std::vector<Eigen::VectorXd>& points, const std::vector<double>& values) {
  if (points.empty() || points.size() != values.size()) throw NotEnoughPoints("no nodes to interpolate");
  const auto n = static_cast<std::size_t>(points.front().size());
  std::map<std::vector<long long>, std::size_t> best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(values[i])) throw NotEnoughPoints("interpolation values must be finite");
    std::vector<long long> key(n);
    for (std::size_t k = 0; k < n; ++k) key[k] = std::llround(points[i](static_cast<Eigen::Index>(k)) * 1e12);
    auto [it, inserted] = best.emplace(std::move(key), i);
    if (!inserted && values[i] < values[it->second]) it->second = i;
  }
  std::vector<std::size_t> order;
  for (const auto& [key, idx] : best) order.push_back(idx);
  std::sort(order.begin(), order.end());
  if (order.size() < n + 2) throw NotEnoughPoints("interpolant needs at least n+2 distinct nodes");
  std::vector<Eigen::VectorXd> nodes;
  std::vector<double> vals;
  for (auto i : order) {
    nodes.push_back(points[i]);
    vals.push_back(values[i]);
  }
  return Interpolant::solve(nodes, vals);
}

}  // namespace dmads
