#pragma once

#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <unordered_set>
#include <vector>

#include "dmads/evaluation.hpp"

namespace dmads {

/// An objective available only through evaluations. `slot` identifies the
/// parallel evaluation lane (0 when sequential); implementations that hold
/// per-lane resources (worker processes) key them by slot.
class Blackbox {
public:
  virtual ~Blackbox() = default;
  virtual Outcome evaluate(const Point& x, std::size_t slot) = 0;
};

/// In-process blackbox around a callable. Exceptions other than library
/// errors are turned into failures.
class FunctionBlackbox : public Blackbox {
public:
  using Fn = std::function<Outcome(const Point&)>;

  explicit FunctionBlackbox(Fn fn) : fn_(std::move(fn)) {}

  static FunctionBlackbox from_objective(std::function<double(const Point&)> f) {
    return FunctionBlackbox([f = std::move(f)](const Point& x) -> Outcome { return Success{f(x)}; });
  }

  Outcome evaluate(const Point& x, std::size_t) override {
    try {
      return fn_(x);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      return Failure{e.what()};
    }
  }

private:
  Fn fn_;
};

/// Wall-clock data for one blackbox call, kept apart from the history so that
/// histories stay byte-reproducible.
struct Timing {
  std::uint64_t ordinal = 0;
  double dispatched_s = 0.0;
  double elapsed_s = 0.0;
};

/// Budgeted, cached access to a blackbox. Every call goes through the cache
/// first; cache hits cost nothing. Ordinals follow dispatch order.
class Evaluator {
public:
  struct Result {
    Evaluation evaluation;
    bool cached = false;
  };

  Evaluator(const SearchSpace& space, Blackbox& blackbox, std::size_t budget, std::size_t parallelism = 1)
      : space_(space),
        blackbox_(blackbox),
        budget_(budget),
        parallelism_(std::max<std::size_t>(1, parallelism)),
        clock_start_(std::chrono::steady_clock::now()) {}

  void set_context(std::uint64_t iteration, double target, double poll_size) {
    iteration_ = iteration;
    target_ = target;
    poll_size_ = poll_size;
  }

  std::size_t budget() const { return budget_; }
  std::size_t used() const { return used_; }
  std::size_t remaining() const { return budget_ - used_; }
  bool exhausted() const { return used_ >= budget_; }
  std::size_t parallelism() const { return parallelism_; }

  const Cache& cache() const { return cache_; }
  const std::vector<Evaluation>& history() const { return history_; }
  const std::vector<Timing>& timings() const { return timings_; }
  const SearchSpace& space() const { return space_; }

  bool is_cached(const Point& x) const { return cache_.contains(canonical_key(x, space_)); }

  /// nullopt when the point is new and the budget is spent.
  std::optional<Result> evaluate(const Point& x, Step step) {
    auto out = evaluate_batch({x}, step);
    return out.front();
  }

  /// Evaluates up to `parallelism` points concurrently. Entries come back in
  /// input order; nullopt marks points skipped for lack of budget.
  std::vector<std::optional<Result>> evaluate_batch(const std::vector<Point>& points, Step step) {
    std::vector<std::optional<Result>> out(points.size());
    struct Pending {
      std::size_t input;
      CanonicalKey key;
      Evaluation eval;
    };
    std::vector<Pending> pending;
    std::unordered_set<CanonicalKey> batch_keys;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!space_.contains(points[i])) {
        throw StructuralError("attempt to evaluate a point outside the search space");
      }
      auto key = canonical_key(points[i], space_);
      if (auto hit = cache_.find(key)) {
        out[i] = Result{*hit, true};
        continue;
      }
      if (!batch_keys.insert(key).second) continue;  // resolved after dispatch
      if (used_ + pending.size() >= budget_) continue;
      Evaluation e;
      e.point = points[i];
      e.step = step;
      e.iteration = iteration_;
      e.target = target_;
      e.poll_size = poll_size_;
      pending.push_back({i, std::move(key), std::move(e)});
    }

    for (std::size_t start = 0; start < pending.size(); start += parallelism_) {
      const std::size_t end = std::min(pending.size(), start + parallelism_);
      for (std::size_t k = start; k < end; ++k) pending[k].eval.ordinal = ++used_;
      std::vector<double> dispatched(end - start);
      std::vector<double> elapsed(end - start);
      if (end - start == 1) {
        dispatched[0] = seconds_since_start();
        pending[start].eval.outcome = blackbox_.evaluate(pending[start].eval.point, 0);
        elapsed[0] = seconds_since_start() - dispatched[0];
      } else {
        std::vector<std::future<Outcome>> futures;
        for (std::size_t k = start; k < end; ++k) {
          dispatched[k - start] = seconds_since_start();
          futures.push_back(std::async(std::launch::async, [this, &pending, k, start] {
            return blackbox_.evaluate(pending[k].eval.point, k - start);
          }));
        }
        for (std::size_t k = start; k < end; ++k) {
          pending[k].eval.outcome = futures[k - start].get();
          elapsed[k - start] = seconds_since_start() - dispatched[k - start];
        }
      }
      for (std::size_t k = start; k < end; ++k) {
        cache_.insert(pending[k].key, pending[k].eval);
        history_.push_back(pending[k].eval);
        timings_.push_back({pending[k].eval.ordinal, dispatched[k - start], elapsed[k - start]});
        out[pending[k].input] = Result{pending[k].eval, false};
      }
    }

    // duplicates inside the batch resolve to the first occurrence
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (out[i]) continue;
      if (auto hit = cache_.find(canonical_key(points[i], space_))) out[i] = Result{*hit, true};
    }
    return out;
  }

private:
  double seconds_since_start() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start_).count();
  }

  const SearchSpace& space_;
  Blackbox& blackbox_;
  std::size_t budget_;
  std::size_t parallelism_;
  std::size_t used_ = 0;
  Cache cache_;
  std::vector<Evaluation> history_;
  std::vector<Timing> timings_;
  std::uint64_t iteration_ = 0;
  double target_ = std::numeric_limits<double>::quiet_NaN();
  double poll_size_ = std::numeric_limits<double>::quiet_NaN();
  std::chrono::steady_clock::time_point clock_start_;
};

}  // namespace dmads
