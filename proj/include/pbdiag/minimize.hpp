#pragma once

// IIS minimization over a feasibility oracle: QuickXplain, the deletion
// filter, additive/deletion, and conflict-core extraction followed by
// QuickXplain. Constraint sets are vectors of raw constraint indices kept in
// model order.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbdiag/csea.hpp"
#include "pbdiag/model.hpp"

namespace pbdiag {

using ConstraintSet = std::vector<std::size_t>;

// The minimizer's deadline passed while a feasibility query was running.
class OracleTimeout : public std::runtime_error {
 public:
  OracleTimeout() : std::runtime_error("feasibility oracle timed out") {}
};

// A minimizer was handed a feasible constraint set.
class FeasibleInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  bool memo = true;
  bool learning = true;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

// Answers "is this subset of the model's constraints satisfiable?" by a fresh
// search on the induced sub-model. Counts every query that misses the cache.
class FeasibilityOracle {
 public:
  explicit FeasibilityOracle(const Model& model, OracleOptions options = {})
      : model_(&model), options_(options) {}

  bool is_feasible(ConstraintSet subset) {
    normalize_set(subset);
    if (options_.memo) {
      if (auto it = cache_.find(subset); it != cache_.end()) return it->second;
    }
    ++calls_;
    const bool answer = solve(subset);
    if (options_.memo) cache_.emplace(std::move(subset), answer);
    return answer;
  }

  // Same answer as is_feasible() but neither counted nor cached. Used for
  // precondition checks that are not part of a method's own query sequence.
  bool check(ConstraintSet subset) {
    normalize_set(subset);
    return solve(subset);
  }

  std::size_t calls() const { return calls_; }
  const Model& model() const { return *model_; }
  const OracleOptions& options() const { return options_; }

 private:
  static void normalize_set(ConstraintSet& s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }

  bool solve(const ConstraintSet& subset) const {
    if (subset.empty()) return true;
    SearchOptions search;
    search.learning = options_.learning;
    if (options_.deadline) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= *options_.deadline) throw OracleTimeout();
      search.time_limit =
          std::chrono::duration_cast<std::chrono::milliseconds>(*options_.deadline - now) +
          std::chrono::milliseconds(1);
    }
    const Model sub = model_->restrict_to(subset);
    const SearchOutcome outcome = extract_conflict_set(sub, search);
    if (outcome.kind == OutcomeKind::Timeout) throw OracleTimeout();
    return outcome.sat();
  }

  const Model* model_;
  OracleOptions options_;
  std::size_t calls_ = 0;
  std::map<ConstraintSet, bool> cache_;
};

struct IISResult {
  std::string method;
  ConstraintSet indices;
  std::vector<std::string> names;
  std::size_t oracle_calls = 0;
  double time_ms = 0.0;
  bool verified = false;
  bool timed_out = false;  // indices are a partial, unverified result
  std::optional<SearchOutcome> search;  // csea+qx only: the core extraction run
};

namespace detail {

inline ConstraintSet set_union(const ConstraintSet& a, const ConstraintSet& b) {
  ConstraintSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline ConstraintSet without(const ConstraintSet& s, std::size_t item) {
  ConstraintSet out;
  out.reserve(s.size());
  for (std::size_t x : s) {
    if (x != item) out.push_back(x);
  }
  return out;
}

inline void fill_names(const Model& model, IISResult& r) {
  std::sort(r.indices.begin(), r.indices.end());
  r.names.clear();
  for (std::size_t i : r.indices) r.names.push_back(model.raw()[i].name);
}

// QuickXplain recursion: candidates kept in preference (model) order, background sorted.
inline ConstraintSet quickxplain_rec(FeasibilityOracle& oracle, const ConstraintSet& background,
                                     bool background_grew, const ConstraintSet& candidates) {
  if (background_grew && !oracle.is_feasible(background)) return {};
  if (candidates.size() == 1) return candidates;
  const auto half = static_cast<std::ptrdiff_t>(candidates.size() / 2);
  const ConstraintSet first(candidates.begin(), candidates.begin() + half);
  const ConstraintSet second(candidates.begin() + half, candidates.end());
  ConstraintSet first_sorted = first;
  std::sort(first_sorted.begin(), first_sorted.end());
  const ConstraintSet delta2 =
      quickxplain_rec(oracle, set_union(background, first_sorted), !first.empty(), second);
  ConstraintSet delta2_sorted = delta2;
  std::sort(delta2_sorted.begin(), delta2_sorted.end());
  const ConstraintSet delta1 =
      quickxplain_rec(oracle, set_union(background, delta2_sorted), !delta2.empty(), first);
  ConstraintSet out = delta1;
  out.insert(out.end(), delta2.begin(), delta2.end());
  return out;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

inline ConstraintSet sorted_unique(ConstraintSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace detail

// Minimal S within `candidates` such that background + S is infeasible.
// Requires background + candidates infeasible and background feasible.
inline IISResult quickxplain(FeasibilityOracle& oracle, const ConstraintSet& background,
                             const ConstraintSet& candidates) {
  const auto start = std::chrono::steady_clock::now();
  IISResult result;
  result.method = "qx";
  const ConstraintSet bg = detail::sorted_unique(background);
  const ConstraintSet cand = detail::sorted_unique(candidates);
  if (oracle.check(detail::set_union(bg, cand))) {
    throw FeasibleInputError("quickxplain: background and candidates are jointly feasible");
  }
  if (!bg.empty() && !oracle.check(bg)) {
    throw FeasibleInputError("quickxplain: background alone is infeasible");
  }
  const std::size_t calls_before = oracle.calls();
  try {
    if (!cand.empty()) result.indices = detail::quickxplain_rec(oracle, bg, false, cand);
  } catch (const OracleTimeout&) {
    result.timed_out = true;
    result.indices = cand;
  }
  result.oracle_calls = oracle.calls() - calls_before;
  detail::fill_names(oracle.model(), result);
  result.time_ms = detail::elapsed_ms(start);
  return result;
}

// Tentatively drops each constraint in order, keeping the drop whenever the
// rest stays infeasible. Exactly one oracle query per input constraint.
inline IISResult deletion_filter(FeasibilityOracle& oracle, const ConstraintSet& names) {
  const auto start = std::chrono::steady_clock::now();
  IISResult result;
  result.method = "deletion";
  ConstraintSet current = detail::sorted_unique(names);
  if (oracle.check(current)) throw FeasibleInputError("deletion_filter: input is feasible");
  const std::size_t calls_before = oracle.calls();
  const ConstraintSet order = current;
  try {
    for (std::size_t c : order) {
      ConstraintSet trial = detail::without(current, c);
      if (!oracle.is_feasible(trial)) current = std::move(trial);
    }
  } catch (const OracleTimeout&) {
    result.timed_out = true;
  }
  result.indices = std::move(current);
  result.oracle_calls = oracle.calls() - calls_before;
  detail::fill_names(oracle.model(), result);
  result.time_ms = detail::elapsed_ms(start);
  return result;
}

// Additive phase: grow a prefix of the candidates until it becomes infeasible;
// the constraint that tipped it belongs to the IIS. Repeat over the prefix
// before it, seeded with the kernel found so far, until the kernel itself is
// infeasible. A deletion pass over the kernel finishes the job.
inline IISResult additive_deletion(FeasibilityOracle& oracle, const ConstraintSet& names) {
  const auto start = std::chrono::steady_clock::now();
  IISResult result;
  result.method = "additive";
  ConstraintSet pool = detail::sorted_unique(names);
  if (oracle.check(pool)) throw FeasibleInputError("additive_deletion: input is feasible");
  const std::size_t calls_before = oracle.calls();

  ConstraintSet kernel;
  try {
    for (;;) {
      ConstraintSet test = kernel;
      std::optional<std::size_t> tipping;
      ConstraintSet prefix;
      for (std::size_t c : pool) {
        test.insert(std::upper_bound(test.begin(), test.end(), c), c);
        if (!oracle.is_feasible(test)) {
          tipping = c;
          break;
        }
        prefix.push_back(c);
      }
      if (!tipping) throw std::logic_error("additive_deletion: pool became feasible");
      kernel.insert(std::upper_bound(kernel.begin(), kernel.end(), *tipping), *tipping);
      if (!oracle.is_feasible(kernel)) break;
      pool = std::move(prefix);
    }
    const ConstraintSet order = kernel;
    for (std::size_t c : order) {
      ConstraintSet trial = detail::without(kernel, c);
      if (!oracle.is_feasible(trial)) kernel = std::move(trial);
    }
  } catch (const OracleTimeout&) {
    result.timed_out = true;
    kernel = detail::set_union(kernel, pool);
  }
  result.indices = std::move(kernel);
  result.oracle_calls = oracle.calls() - calls_before;
  detail::fill_names(oracle.model(), result);
  result.time_ms = detail::elapsed_ms(start);
  return result;
}

// Infeasible, and dropping any single member makes it feasible.
inline bool verify_iis(FeasibilityOracle& oracle, const ConstraintSet& names) {
  const ConstraintSet set = detail::sorted_unique(names);
  if (oracle.is_feasible(set)) return false;
  for (std::size_t c : set) {
    if (!oracle.is_feasible(detail::without(set, c))) return false;
  }
  return true;
}

inline ConstraintSet all_constraints(const Model& model) {
  ConstraintSet s(model.num_constraints());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

// Conflict-core extraction, then QuickXplain over the core with an empty
// background. Oracle calls are those of the QuickXplain phase; time covers both.
inline IISResult csea_then_quickxplain(FeasibilityOracle& oracle, const SearchOptions& search = {}) {
  const auto start = std::chrono::steady_clock::now();
  IISResult result;
  result.method = "csea+qx";
  SearchOptions opts = search;
  if (const auto& deadline = oracle.options().deadline) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        *deadline - std::chrono::steady_clock::now());
    if (!opts.time_limit || remaining < *opts.time_limit) {
      opts.time_limit = std::max(remaining, std::chrono::milliseconds(0));
    }
  }
  SearchOutcome outcome = extract_conflict_set(oracle.model(), opts);
  if (outcome.sat()) throw FeasibleInputError("model is feasible");
  result.indices = outcome.core.indices;
  if (outcome.kind == OutcomeKind::Timeout) {
    result.timed_out = true;
  } else {
    const std::size_t calls_before = oracle.calls();
    try {
      result.indices = detail::quickxplain_rec(oracle, {}, false, outcome.core.indices);
    } catch (const OracleTimeout&) {
      result.timed_out = true;
    }
    result.oracle_calls = oracle.calls() - calls_before;
  }
  result.search = std::move(outcome);
  detail::fill_names(oracle.model(), result);
  result.time_ms = detail::elapsed_ms(start);
  return result;
}

inline const std::vector<std::string>& minimizer_methods() {
  static const std::vector<std::string> methods{"qx", "deletion", "additive", "csea+qx"};
  return methods;
}

// Runs a minimizer by name over the whole model.
inline IISResult run_minimizer(FeasibilityOracle& oracle, const std::string& method,
                               const SearchOptions& search = {}) {
  const ConstraintSet all = all_constraints(oracle.model());
  if (method == "qx") return quickxplain(oracle, {}, all);
  if (method == "deletion") return deletion_filter(oracle, all);
  if (method == "additive") return additive_deletion(oracle, all);
  if (method == "csea+qx") return csea_then_quickxplain(oracle, search);
  throw std::invalid_argument("unknown method '" + method + "'");
}

inline nlohmann::ordered_json to_json(const IISResult& r, bool timing = true) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["iis"] = r.names;
  j["oracle_calls"] = r.oracle_calls;
  j["time_ms"] = timing ? r.time_ms : 0.0;
  j["verified"] = r.verified;
  j["timed_out"] = r.timed_out;
  return j;
}

}  // namespace pbdiag
