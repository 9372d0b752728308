#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "dmads/error.hpp"

namespace dmads {

enum class VariableKind { Real, Integer, Categorical };

inline const char* to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::Real: return "real";
    case VariableKind::Integer: return "integer";
    case VariableKind::Categorical: return "categorical";
  }
  return "?";
}

/// One variable of a search space. Build through the static factories, which
/// validate bounds, categories and neighbor sets.
struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::Real;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::string> categories;
  // label -> neighbor labels, listed in category order
  std::map<std::string, std::vector<std::string>> neighbors;

  static VariableSpec real(std::string name, double lower, double upper) {
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
      throw InvalidSpace("real variable '" + name + "' needs finite lower < upper");
    }
    VariableSpec v;
    v.name = std::move(name);
    v.kind = VariableKind::Real;
    v.lower = lower;
    v.upper = upper;
    return v;
  }

  static VariableSpec integer(std::string name, std::int64_t lower, std::int64_t upper) {
    if (lower > upper) {
      throw InvalidSpace("integer variable '" + name + "' needs lower <= upper");
    }
    VariableSpec v;
    v.name = std::move(name);
    v.kind = VariableKind::Integer;
    v.lower = static_cast<double>(lower);
    v.upper = static_cast<double>(upper);
    return v;
  }

  /// Neighbors default to "every other category" when `neighbors` is empty.
  static VariableSpec categorical(std::string name, std::vector<std::string> categories,
                                  std::map<std::string, std::vector<std::string>> neighbors = {}) {
    if (categories.empty()) {
      throw InvalidSpace("categorical variable '" + name + "' has no categories");
    }
    std::unordered_set<std::string> seen;
    for (const auto& c : categories) {
      if (!seen.insert(c).second) {
        throw InvalidSpace("categorical variable '" + name + "' repeats category '" + c + "'");
      }
    }
    VariableSpec v;
    v.name = std::move(name);
    v.kind = VariableKind::Categorical;
    v.categories = std::move(categories);
    for (const auto& [label, nbrs] : neighbors) {
      if (!seen.count(label)) {
        throw InvalidSpace("neighbors of '" + v.name + "' reference unknown label '" + label + "'");
      }
      for (const auto& n : nbrs) {
        if (!seen.count(n)) {
          throw InvalidSpace("neighbor label '" + n + "' of '" + v.name + "' is not a category");
        }
        if (n == label) {
          throw InvalidSpace("label '" + label + "' of '" + v.name + "' neighbors itself");
        }
      }
    }
    for (const auto& label : v.categories) {
      std::vector<std::string> ordered;
      auto it = neighbors.find(label);
      for (const auto& other : v.categories) {
        if (other == label) continue;
        const bool listed =
            it == neighbors.end() ||
            std::find(it->second.begin(), it->second.end(), other) != it->second.end();
        if (listed) ordered.push_back(other);
      }
      v.neighbors[label] = std::move(ordered);
    }
    return v;
  }

  bool is_discrete() const { return kind != VariableKind::Real; }

  std::optional<std::size_t> category_index(const std::string& label) const {
    auto it = std::find(categories.begin(), categories.end(), label);
    if (it == categories.end()) return std::nullopt;
    return static_cast<std::size_t>(it - categories.begin());
  }

  double range() const { return upper - lower; }
};

/// A tagged value: real, integer or category label.
using Value = std::variant<double, std::int64_t, std::string>;

/// One assignment of every variable, in space order.
struct Point {
  std::vector<Value> values;

  std::size_t size() const { return values.size(); }
  const Value& operator[](std::size_t i) const { return values[i]; }
  Value& operator[](std::size_t i) { return values[i]; }

  bool operator==(const Point&) const = default;
};

inline double as_real(const Value& v) { return std::get<double>(v); }
inline std::int64_t as_integer(const Value& v) { return std::get<std::int64_t>(v); }
inline const std::string& as_label(const Value& v) { return std::get<std::string>(v); }

/// Ordered variable list plus its partition into discrete (integer and
/// categorical) and real indices.
class SearchSpace {
public:
  SearchSpace() = default;

  explicit SearchSpace(std::vector<VariableSpec> variables) : variables_(std::move(variables)) {
    std::unordered_set<std::string> names;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      const auto& v = variables_[i];
      if (v.name.empty()) throw InvalidSpace("variable " + std::to_string(i) + " has no name");
      if (!names.insert(v.name).second) throw InvalidSpace("duplicate variable name '" + v.name + "'");
      if (v.kind == VariableKind::Real) {
        if (!(v.lower < v.upper)) throw InvalidSpace("real variable '" + v.name + "' needs lower < upper");
        real_.push_back(i);
      } else {
        if (v.kind == VariableKind::Integer &&
            (v.lower > v.upper || std::floor(v.lower) != v.lower || std::floor(v.upper) != v.upper)) {
          throw InvalidSpace("integer variable '" + v.name + "' needs integral lower <= upper");
        }
        if (v.kind == VariableKind::Categorical && v.categories.empty()) {
          throw InvalidSpace("categorical variable '" + v.name + "' has no categories");
        }
        if (v.kind == VariableKind::Integer) integer_.push_back(i);
        if (v.kind == VariableKind::Categorical) categorical_.push_back(i);
        discrete_.push_back(i);
      }
    }
  }

  const std::vector<VariableSpec>& variables() const { return variables_; }
  const VariableSpec& operator[](std::size_t i) const { return variables_[i]; }
  std::size_t size() const { return variables_.size(); }

  /// Indices of integer and categorical variables (x^N), in space order.
  const std::vector<std::size_t>& discrete_indices() const { return discrete_; }
  /// Indices of real variables (x^R), in space order.
  const std::vector<std::size_t>& real_indices() const { return real_; }
  const std::vector<std::size_t>& integer_indices() const { return integer_; }
  const std::vector<std::size_t>& categorical_indices() const { return categorical_; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i].name == name) return i;
    }
    return std::nullopt;
  }

  /// Throws StructuralError on arity or kind mismatch.
  void check_structure(const Point& p) const {
    if (p.size() != variables_.size()) {
      throw StructuralError("point has " + std::to_string(p.size()) + " values, space has " +
                            std::to_string(variables_.size()) + " variables");
    }
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      const auto& v = variables_[i];
      const bool ok = (v.kind == VariableKind::Real && std::holds_alternative<double>(p[i])) ||
                      (v.kind == VariableKind::Integer && std::holds_alternative<std::int64_t>(p[i])) ||
                      (v.kind == VariableKind::Categorical && std::holds_alternative<std::string>(p[i]));
      if (!ok) throw StructuralError("value of '" + v.name + "' does not match kind " + to_string(v.kind));
    }
  }

  /// Structure plus bounds and category membership.
  bool contains(const Point& p) const {
    try {
      check_structure(p);
    } catch (const StructuralError&) {
      return false;
    }
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      const auto& v = variables_[i];
      switch (v.kind) {
        case VariableKind::Real: {
          const double x = as_real(p[i]);
          if (!(x >= v.lower && x <= v.upper)) return false;
          break;
        }
        case VariableKind::Integer: {
          const auto x = static_cast<double>(as_integer(p[i]));
          if (x < v.lower || x > v.upper) return false;
          break;
        }
        case VariableKind::Categorical:
          if (!v.category_index(as_label(p[i]))) return false;
          break;
      }
    }
    return true;
  }

  double normalize(std::size_t i, double x) const {
    const auto& v = variables_[i];
    return (x - v.lower) / (v.upper - v.lower);
  }

  double denormalize(std::size_t i, double u) const {
    const auto& v = variables_[i];
    return v.lower + u * (v.upper - v.lower);
  }

  bool operator==(const SearchSpace& other) const {
    if (variables_.size() != other.variables_.size()) return false;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      const auto& a = variables_[i];
      const auto& b = other.variables_[i];
      if (a.name != b.name || a.kind != b.kind || a.categories != b.categories ||
          a.neighbors != b.neighbors) {
        return false;
      }
      if (a.kind != VariableKind::Categorical && (a.lower != b.lower || a.upper != b.upper)) return false;
    }
    return true;
  }

private:
  std::vector<VariableSpec> variables_;
  std::vector<std::size_t> discrete_;
  std::vector<std::size_t> real_;
  std::vector<std::size_t> integer_;
  std::vector<std::size_t> categorical_;
};

/// Identity of a point for caching. Reals are compared after normalization to
/// [0,1] and rounding to 12 decimal digits; integers and labels exactly.
using CanonicalKey = std::string;

inline CanonicalKey canonical_key(const Point& p, const SearchSpace& space) {
  CanonicalKey key;
  key.reserve(p.size() * 16);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& v = space[i];
    switch (v.kind) {
      case VariableKind::Real: {
        const double u = space.normalize(i, as_real(p[i]));
        key += 'r';
        key += std::to_string(std::llround(u * 1e12));
        break;
      }
      case VariableKind::Integer:
        key += 'i';
        key += std::to_string(as_integer(p[i]));
        break;
      case VariableKind::Categorical: {
        const auto idx = v.category_index(as_label(p[i]));
        key += 'c';
        key += idx ? std::to_string(*idx) : "?" + as_label(p[i]);
        break;
      }
    }
    key += '|';
  }
  return key;
}

/// Clamp reals and integers into their bounds. Categories pass through.
inline Point project_bounds(const Point& p, const SearchSpace& space) {
  space.check_structure(p);
  Point out = p;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& v = space[i];
    if (v.kind == VariableKind::Real) {
      out[i] = std::clamp(as_real(p[i]), v.lower, v.upper);
    } else if (v.kind == VariableKind::Integer) {
      out[i] = std::clamp(as_integer(p[i]), static_cast<std::int64_t>(v.lower),
                          static_cast<std::int64_t>(v.upper));
    }
  }
  return out;
}

/// x^N (integer and categorical values) and x^R (reals), each in space order.
struct SplitPoint {
  std::vector<Value> discrete;
  std::vector<double> real;
};

inline SplitPoint split(const Point& p, const SearchSpace& space) {
  space.check_structure(p);
  SplitPoint out;
  out.discrete.reserve(space.discrete_indices().size());
  out.real.reserve(space.real_indices().size());
  for (auto i : space.discrete_indices()) out.discrete.push_back(p[i]);
  for (auto i : space.real_indices()) out.real.push_back(as_real(p[i]));
  return out;
}

inline Point merge(const std::vector<Value>& discrete, const std::vector<double>& real,
                   const SearchSpace& space) {
  if (discrete.size() != space.discrete_indices().size() || real.size() != space.real_indices().size()) {
    throw StructuralError("merge: component sizes (" + std::to_string(discrete.size()) + ", " +
                          std::to_string(real.size()) + ") do not match the space partition");
  }
  Point p;
  p.values.resize(space.size());
  for (std::size_t k = 0; k < discrete.size(); ++k) p[space.discrete_indices()[k]] = discrete[k];
  for (std::size_t k = 0; k < real.size(); ++k) p[space.real_indices()[k]] = real[k];
  space.check_structure(p);
  return p;
}

inline Point merge(const SplitPoint& parts, const SearchSpace& space) {
  return merge(parts.discrete, parts.real, space);
}

/// True when both points agree on every integer and categorical variable.
inline bool same_discrete_part(const Point& a, const Point& b, const SearchSpace& space) {
  for (auto i : space.discrete_indices()) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

/// The VAE hyperparameter space: architecture, training and threshold
/// variables. `input_dim` is the input feature count n0; the latent
/// dimension ranges over [1, n0 - 1].
inline SearchSpace builtin_vae_space(std::int64_t input_dim = 32) {
  if (input_dim < 2) throw InvalidSpace("VAE input dimension must be at least 2");
  std::vector<VariableSpec> vars;
  vars.push_back(VariableSpec::integer("encoding_layers", 1, 50));
  vars.push_back(VariableSpec::integer("latent_dim", 1, input_dim - 1));
  vars.push_back(VariableSpec::integer("batch_size", 10, 512));
  vars.push_back(VariableSpec::categorical("activation", {"ReLU", "Sigmoid", "Tanh"}));
  vars.push_back(VariableSpec::real("dropout", 0.0, 1.0));
  vars.push_back(VariableSpec::categorical("optimizer", {"SGD", "Adam", "Adagrad", "RMSProp"}));
  for (int k = 1; k <= 4; ++k) {
    vars.push_back(VariableSpec::real("optimizer_hp" + std::to_string(k), 0.0, 1.0));
  }
  vars.push_back(VariableSpec::real("threshold_alpha", 0.5, 1.0));
  return SearchSpace(std::move(vars));
}

}  // namespace dmads
