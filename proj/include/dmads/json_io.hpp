#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmads/delaunay.hpp"
#include "dmads/driver.hpp"
#include "dmads/evaluation.hpp"
#include "dmads/problem_space.hpp"

namespace dmads {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw InvalidSpace("unknown field '" + it.key() + "' in " + where);
  }
}

inline double number_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_number()) throw InvalidSpace(where + " needs numeric '" + key + "'");
  return obj.at(key).get<double>();
}

inline std::int64_t integer_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_number_integer()) throw InvalidSpace(where + " needs integer '" + key + "'");
  return obj.at(key).get<std::int64_t>();
}

}  // namespace detail

/// Parses the search-space schema
///   {"variables":[{"name":…, "kind":"real"|"integer"|"categorical",
///                  "lower":…, "upper":…, "categories":[…], "neighbors":{…}}]}
/// Field order is irrelevant; unknown fields are rejected.
inline SearchSpace space_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidSpace("search space must be a JSON object");
  detail::reject_unknown(doc, {"variables"}, "search space");
  if (!doc.contains("variables") || !doc.at("variables").is_array()) throw InvalidSpace("search space needs a 'variables' array");
  std::vector<VariableSpec> vars;
  for (const auto& v : doc.at("variables")) {
    if (!v.is_object()) throw InvalidSpace("variable entries must be objects");
    if (!v.contains("name") || !v.at("name").is_string()) throw InvalidSpace("variable needs a string 'name'");
    const auto name = v.at("name").get<std::string>();
    const std::string where = "variable '" + name + "'";
    if (!v.contains("kind") || !v.at("kind").is_string()) throw InvalidSpace(where + " needs a string 'kind'");
    const auto kind = v.at("kind").get<std::string>();
    if (kind == "real") {
      detail::reject_unknown(v, {"name", "kind", "lower", "upper"}, where);
      vars.push_back(VariableSpec::real(name, detail::number_field(v, "lower", where), detail::number_field(v, "upper", where)));
    } else if (kind == "integer") {
      detail::reject_unknown(v, {"name", "kind", "lower", "upper"}, where);
      vars.push_back(VariableSpec::integer(name, detail::integer_field(v, "lower", where), detail::integer_field(v, "upper", where)));
    } else if (kind == "categorical") {
      detail::reject_unknown(v, {"name", "kind", "categories", "neighbors"}, where);
      if (!v.contains("categories") || !v.at("categories").is_array()) throw InvalidSpace(where + " needs a 'categories' array");
      std::vector<std::string> cats;
      for (const auto& c : v.at("categories")) {
        if (!c.is_string()) throw InvalidSpace(where + " categories must be strings");
        cats.push_back(c.get<std::string>());
      }
      std::map<std::string, std::vector<std::string>> nbrs;
      if (v.contains("neighbors")) {
        if (!v.at("neighbors").is_object()) throw InvalidSpace(where + " 'neighbors' must be an object");
        for (auto it = v.at("neighbors").begin(); it != v.at("neighbors").end(); ++it) {
          if (!it.value().is_array()) throw InvalidSpace(where + " neighbor lists must be arrays");
          auto& list = nbrs[it.key()];
          for (const auto& n : it.value()) {
            if (!n.is_string()) throw InvalidSpace(where + " neighbor labels must be strings");
            list.push_back(n.get<std::string>());
          }
        }
      }
      vars.push_back(VariableSpec::categorical(name, std::move(cats), std::move(nbrs)));
    } else {
      throw InvalidSpace(where + " has unknown kind '" + kind + "'");
    }
  }
  return SearchSpace(std::move(vars));
}

inline ordered_json space_to_json(const SearchSpace& space) {
  ordered_json vars = ordered_json::array();
  for (const auto& v : space.variables()) {
    ordered_json j;
    j["name"] = v.name;
    j["kind"] = to_string(v.kind);
    if (v.kind == VariableKind::Real) {
      j["lower"] = v.lower;
      j["upper"] = v.upper;
    } else if (v.kind == VariableKind::Integer) {
      j["lower"] = static_cast<std::int64_t>(v.lower);
      j["upper"] = static_cast<std::int64_t>(v.upper);
    } else {
      j["categories"] = v.categories;
      ordered_json n = ordered_json::object();
      for (const auto& c : v.categories) n[c] = v.neighbors.at(c);
      j["neighbors"] = n;
    }
    vars.push_back(std::move(j));
  }
  ordered_json doc;
  doc["variables"] = std::move(vars);
  return doc;
}

/// {"name": value, …} in space order; reals as numbers, integers as
/// integers, categories as label strings.
inline ordered_json point_to_json(const Point& p, const SearchSpace& space) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::visit([&](const auto& v) { j[space[i].name] = v; }, p[i]);
  }
  return j;
}

/// Inverse of point_to_json. Missing or unknown names are structural errors.
template <class Json>
Point point_from_json(const Json& j, const SearchSpace& space) {
  if (!j.is_object()) throw StructuralError("point must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!space.index_of(it.key())) throw StructuralError("unknown variable '" + it.key() + "' in point");
  }
  Point p;
  for (const auto& v : space.variables()) {
    if (!j.contains(v.name)) throw StructuralError("point is missing variable '" + v.name + "'");
    const auto& x = j.at(v.name);
    switch (v.kind) {
      case VariableKind::Real:
        if (!x.is_number()) throw StructuralError("'" + v.name + "' must be a number");
        p.values.emplace_back(x.template get<double>());
        break;
      case VariableKind::Integer:
        if (x.is_number_integer()) {
          p.values.emplace_back(x.template get<std::int64_t>());
        } else if (x.is_number_float() && std::floor(x.template get<double>()) == x.template get<double>()) {
          p.values.emplace_back(static_cast<std::int64_t>(x.template get<double>()));
        } else {
          throw StructuralError("'" + v.name + "' must be an integer");
        }
        break;
      case VariableKind::Categorical:
        if (!x.is_string()) throw StructuralError("'" + v.name + "' must be a label string");
        p.values.emplace_back(x.template get<std::string>());
        break;
    }
  }
  return p;
}

/// One history line: ordinal, iteration, step, point, status, objective or
/// reason, target y_k, poll size Δp.
inline ordered_json evaluation_to_json(const Evaluation& e, const SearchSpace& space) {
  ordered_json j;
  j["ordinal"] = e.ordinal;
  j["iteration"] = e.iteration;
  j["step"] = to_string(e.step);
  j["point"] = point_to_json(e.point, space);
  if (const auto* s = std::get_if<Success>(&e.outcome)) {
    j["status"] = "ok";
    j["objective"] = s->objective;
  } else {
    j["status"] = "fail";
    j["reason"] = std::get<Failure>(e.outcome).reason;
  }
  j["target"] = std::isfinite(e.target) ? ordered_json(e.target) : ordered_json(nullptr);
  j["poll_size"] = std::isfinite(e.poll_size) ? ordered_json(e.poll_size) : ordered_json(nullptr);
  return j;
}

inline void write_history(std::ostream& os, const std::vector<Evaluation>& history, const SearchSpace& space) {
  for (const auto& e : history) os << evaluation_to_json(e, space).dump() << '\n';
}

inline void write_timings(std::ostream& os, const std::vector<Timing>& timings) {
  for (const auto& t : timings) {
    ordered_json j;
    j["ordinal"] = t.ordinal;
    j["dispatched_s"] = t.dispatched_s;
    j["elapsed_s"] = t.elapsed_s;
    os << j.dump() << '\n';
  }
}

inline ordered_json iteration_to_json(const IterationRecord& r) {
  ordered_json j;
  j["iteration"] = r.iteration;
  j["target"] = r.target;
  j["next_target"] = r.next_target;
  j["target_steps"] = r.target_steps;
  j["poll_size"] = r.poll_size;
  j["next_poll_size"] = r.next_poll_size;
  j["search_success"] = r.search_success;
  j["poll_success"] = r.poll_success;
  j["extended_poll_success"] = r.extended_poll_success;
  j["search_note"] = r.search_note;
  j["evaluations_used"] = r.evaluations_used;
  j["incumbent"] = r.incumbent_value;
  return j;
}

inline void write_iterations(std::ostream& os, const std::vector<IterationRecord>& log) {
  for (const auto& r : log) os << iteration_to_json(r).dump() << '\n';
}

inline ordered_json summary_to_json(const RunResult& r, const SearchSpace& space) {
  ordered_json j;
  j["algorithm"] = to_string(r.algorithm);
  j["best_point"] = point_to_json(r.incumbent.point, space);
  j["best_value"] = r.incumbent.value_or_inf();
  j["best_ordinal"] = r.incumbent.ordinal;
  j["evaluations_used"] = r.evaluations_used;
  j["iterations"] = r.iterations.size();
  j["stop_reason"] = r.stop_reason;
  return j;
}

/// Debug dump: vertices, simplices, circumcenters and radii.
inline ordered_json triangulation_to_json(const Triangulation& t) {
  auto vec = [](const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  ordered_json j;
  j["dimension"] = t.dimension();
  ordered_json verts = ordered_json::array();
  for (const auto& v : t.vertices()) verts.push_back(vec(v));
  j["vertices"] = std::move(verts);
  ordered_json simp = ordered_json::array();
  for (const auto& s : t.simplices()) {
    ordered_json e;
    e["vertices"] = s.vertices;
    e["circumcenter"] = vec(s.sphere.center);
    e["circumradius"] = s.sphere.radius;
    e["volume"] = s.volume;
    simp.push_back(std::move(e));
  }
  j["simplices"] = std::move(simp);
  return j;
}

}  // namespace dmads
