#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmads/error.hpp"

namespace dmads {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Harmonic mean of precision and recall; 0 when both are 0.
inline double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

/// Precision, recall and F1 of one class. Zero denominators give 0.
inline ClassScores prf1(const ConfusionCounts& c) {
  ClassScores s;
  const auto pd = c.tp + c.fp;
  const auto rd = c.tp + c.fn;
  s.precision = pd ? static_cast<double>(c.tp) / static_cast<double>(pd) : 0.0;
  s.recall = rd ? static_cast<double>(c.tp) / static_cast<double>(rd) : 0.0;
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

/// Unweighted mean of the two per-class F1 scores.
inline double mean_f1(const ClassScores& normal, const ClassScores& anomalous) { return 0.5 * (normal.f1 + anomalous.f1); }

/// Per-class counts for `positive` from parallel label vectors.
template <class Label>
ConfusionCounts confusion_from_labels(const std::vector<Label>& truth, const std::vector<Label>& predicted,
                                      const Label& positive) {
  if (truth.size() != predicted.size()) throw ConfigError("label vectors differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == positive;
    const bool p = predicted[i] == positive;
    if (t && p) ++c.tp;
    else if (!t && p) ++c.fp;
    else if (t && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

/// Rounds half away from zero to `digits` decimals.
inline double round_to(double v, int digits) {
  const double s = std::pow(10.0, digits);
  return std::round(v * s) / s;
}

/// Best-so-far objective after each evaluation of a history JSON-lines
/// stream. Failures carry the previous best forward; entries before the
/// first success are NaN. Blank lines are skipped.
inline std::vector<double> convergence_table(std::istream& in) {
  std::vector<double> out;
  double best = std::numeric_limits<double>::quiet_NaN();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed history line: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("status") || !j.at("status").is_string()) {
      throw ParseError("history line lacks a status", lineno);
    }
    const auto status = j.at("status").get<std::string>();
    if (status == "ok") {
      if (!j.contains("objective") || !j.at("objective").is_number()) {
        throw ParseError("successful evaluation lacks a numeric objective", lineno);
      }
      const double f = j.at("objective").get<double>();
      if (std::isnan(best) || f < best) best = f;
    } else if (status != "fail") {
      throw ParseError("unknown status '" + status + "'", lineno);
    }
    out.push_back(best);
  }
  return out;
}

inline std::vector<double> convergence_table(const std::string& text) {
  std::istringstream in(text);
  return convergence_table(in);
}

struct Series {
  std::string label;
  std::vector<double> values;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// CSV with columns evaluation_index, then one best-so-far column per series.
/// Missing or NaN entries are left empty.
inline void write_convergence_csv(std::ostream& os, const std::vector<Series>& series) {
  os << "evaluation_index";
  for (const auto& s : series) os << ',' << s.label;
  os << '\n';
  std::size_t rows = 0;
  for (const auto& s : series) rows = std::max(rows, s.values.size());
  for (std::size_t i = 0; i < rows; ++i) {
    os << (i + 1);
    for (const auto& s : series) {
      os << ',';
      if (i < s.values.size() && !std::isnan(s.values[i])) os << detail::fmt("%.17g", s.values[i]);
    }
    os << '\n';
  }
}

/// Self-contained SVG line chart: evaluations on x, best objective on y, one
/// polyline per series and a legend. Output depends only on the input.
inline std::string render_svg(const std::vector<Series>& series, const std::string& title = "") {
  constexpr double W = 720, H = 440, left = 70, right = 170, top = 40, bottom = 50;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::size_t n = 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) lo -= 0.5, hi += 0.5;
  const double pw = W - left - right;
  const double ph = H - top - bottom;
  auto xs = [&](double i) { return left + (n > 1 ? (i - 1.0) / static_cast<double>(n - 1) : 0.5) * pw; };
  auto ys = [&](double v) { return top + (hi - v) / (hi - lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    o << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << detail::xml_escape(title) << "</text>\n";
  }
  o << "<g stroke=\"black\" stroke-width=\"1\">\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
  o << "</g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    o << "<text x=\"" << left - 6 << "\" y=\"" << detail::fmt("%.2f", ys(v) + 4) << "\" text-anchor=\"end\">"
      << detail::fmt("%.4g", v) << "</text>\n";
    const double i = 1.0 + static_cast<double>(n - 1) * t / 4.0;
    o << "<text x=\"" << detail::fmt("%.2f", xs(i)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
      << detail::fmt("%.0f", i) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">evaluations</text>\n";
  o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << top + ph / 2
    << ")\">best objective</text>\n";
  o << "</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = palette[k % (sizeof palette / sizeof *palette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < series[k].values.size(); ++i) {
      const double v = series[k].values[i];
      if (!std::isfinite(v)) continue;
      if (!first) o << ' ';
      first = false;
      o << detail::fmt("%.2f", xs(static_cast<double>(i + 1))) << ',' << detail::fmt("%.2f", ys(v));
    }
    o << "\"/>\n";
    const double ly = top + 14.0 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << detail::xml_escape(series[k].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace dmads
