#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "dmads/problem_space.hpp"

namespace dmads {

struct Success {
  double objective;
  bool operator==(const Success&) const = default;
};

struct Failure {
  std::string reason;
  bool operator==(const Failure&) const = default;
};

/// Result of one blackbox call. A failure carries no objective.
using Outcome = std::variant<Success, Failure>;

inline bool succeeded(const Outcome& o) { return std::holds_alternative<Success>(o); }

inline std::optional<double> objective_of(const Outcome& o) {
  if (const auto* s = std::get_if<Success>(&o)) return s->objective;
  return std::nullopt;
}

/// Which part of the algorithm produced a point.
enum class Step { Initial, Search, Poll, ExtendedPoll, Benchmark };

inline const char* to_string(Step s) {
  switch (s) {
    case Step::Initial: return "initial";
    case Step::Search: return "search";
    case Step::Poll: return "poll";
    case Step::ExtendedPoll: return "extended_poll";
    case Step::Benchmark: return "benchmark";
  }
  return "?";
}

inline std::optional<Step> step_from_string(const std::string& s) {
  for (auto st : {Step::Initial, Step::Search, Step::Poll, Step::ExtendedPoll, Step::Benchmark}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

/// One evaluated point, with the algorithm state at dispatch time.
struct Evaluation {
  Point point;
  Outcome outcome = Failure{"not evaluated"};
  Step step = Step::Initial;
  std::uint64_t ordinal = 0;
  std::uint64_t iteration = 0;
  double target = std::numeric_limits<double>::quiet_NaN();
  double poll_size = std::numeric_limits<double>::quiet_NaN();

  bool ok() const { return succeeded(outcome); }
  std::optional<double> objective() const { return objective_of(outcome); }
  /// Objective, or +inf for failures; handy for comparisons.
  double value_or_inf() const {
    return ok() ? std::get<Success>(outcome).objective : std::numeric_limits<double>::infinity();
  }
};

/// Evaluated points keyed by canonical key, in insertion order. Readers may run
/// concurrently; writers are exclusive.
class Cache {
public:
  std::optional<Evaluation> find(const CanonicalKey& key) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second];
  }

  bool contains(const CanonicalKey& key) const {
    std::shared_lock lock(mutex_);
    return index_.count(key) != 0;
  }

  /// Returns false (and keeps the existing entry) when the key is present.
  bool insert(const CanonicalKey& key, Evaluation e) {
    std::unique_lock lock(mutex_);
    if (index_.count(key)) return false;
    index_.emplace(key, entries_.size());
    entries_.push_back(std::move(e));
    return true;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  /// Snapshot of all entries in insertion order.
  std::vector<Evaluation> entries() const {
    std::shared_lock lock(mutex_);
    return {entries_.begin(), entries_.end()};
  }

private:
  mutable std::shared_mutex mutex_;
  std::deque<Evaluation> entries_;
  std::unordered_map<CanonicalKey, std::size_t> index_;
};

}  // namespace dmads
