#pragma once

// Benchmark runner: every (instance, method) cell produces one RunStats row.
//
// CSV columns:
//   instance,method,cons,vars,avg_lit,red_cons,conflicts,decisions,
//   backtracks,learned,max_dl,oracle_calls,time_ms,outcome,verified
// red_cons is the conflict-core size for "csea" rows and the returned set
// size for minimizer rows. outcome is one of sat, unsat, iis, timeout.
// Per-method summaries follow the data rows as '#'-prefixed comment lines.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pbdiag/csea.hpp"
#include "pbdiag/minimize.hpp"
#include "pbdiag/model.hpp"

namespace pbdiag {

struct RunStats {
  std::string instance;
  std::string method;
  std::size_t cons = 0;
  std::size_t vars = 0;
  double avg_lit = 0.0;
  std::size_t red_cons = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t decisions = 0;
  std::uint64_t backtracks = 0;
  std::uint64_t learned = 0;
  int max_dl = 0;
  std::size_t oracle_calls = 0;
  double time_ms = 0.0;
  std::string outcome;
  bool verified = false;

  // 1 - red_cons / cons
  double reduction() const {
    return cons == 0 ? 0.0 : 1.0 - static_cast<double>(red_cons) / static_cast<double>(cons);
  }
};

struct BenchInstance {
  std::string id;
  Model model;
};

struct BenchLimits {
  std::optional<std::chrono::milliseconds> time_limit;  // per cell
  bool memo = true;
  bool learning = true;
  bool verify = true;
};

struct MethodSummary {
  std::string method;
  std::size_t runs = 0;
  double median_time_ms = 0.0;
  double median_oracle_calls = 0.0;
  double mean_reduction_pct = 0.0;
};

struct BenchReport {
  std::vector<RunStats> rows;
  std::vector<MethodSummary> summaries;
};

inline const std::vector<std::string>& benchmark_methods() {
  static const std::vector<std::string> methods{"csea", "csea+qx", "qx", "deletion", "additive"};
  return methods;
}

template <typename T>
double median(std::vector<T> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return static_cast<double>(values[n / 2]);
  return (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2])) / 2.0;
}

inline RunStats stats_snapshot(const std::string& instance, const Model& model,
                               const SearchOutcome& outcome) {
  RunStats r;
  r.instance = instance;
  r.method = "csea";
  r.cons = model.num_constraints();
  r.vars = model.num_variables();
  r.avg_lit = model.average_terms();
  r.red_cons = outcome.sat() ? 0 : outcome.core.size();
  r.conflicts = outcome.stats.conflicts;
  r.decisions = outcome.stats.decisions;
  r.backtracks = outcome.stats.backtracks;
  r.learned = outcome.stats.learned;
  r.max_dl = outcome.stats.max_decision_level;
  r.time_ms = outcome.time_ms;
  r.outcome = to_string(outcome.kind);
  return r;
}

inline RunStats run_cell(const BenchInstance& inst, const std::string& method, const BenchLimits& limits) {
  const Model& model = inst.model;
  OracleOptions oracle_options;
  oracle_options.memo = limits.memo;
  oracle_options.learning = limits.learning;
  if (limits.time_limit) oracle_options.deadline = std::chrono::steady_clock::now() + *limits.time_limit;
  SearchOptions search;
  search.learning = limits.learning;
  search.time_limit = limits.time_limit;

  if (method == "csea") {
    const SearchOutcome outcome = extract_conflict_set(model, search);
    RunStats r = stats_snapshot(inst.id, model, outcome);
    if (limits.verify && outcome.unsat()) {
      FeasibilityOracle checker(model);
      r.verified = !checker.check(outcome.core.indices);
    }
    return r;
  }

  RunStats r;
  r.instance = inst.id;
  r.method = method;
  r.cons = model.num_constraints();
  r.vars = model.num_variables();
  r.avg_lit = model.average_terms();
  FeasibilityOracle oracle(model, oracle_options);
  try {
    const IISResult result = run_minimizer(oracle, method, search);
    if (result.search) {
      const auto& s = result.search->stats;
      r.conflicts = s.conflicts;
      r.decisions = s.decisions;
      r.backtracks = s.backtracks;
      r.learned = s.learned;
      r.max_dl = s.max_decision_level;
    }
    r.red_cons = result.indices.size();
    r.oracle_calls = result.oracle_calls;
    r.time_ms = result.time_ms;
    r.outcome = result.timed_out ? "timeout" : "iis";
    if (limits.verify && !result.timed_out) {
      FeasibilityOracle checker(model);
      r.verified = verify_iis(checker, result.indices);
    }
  } catch (const FeasibleInputError&) {
    r.outcome = "sat";
  } catch (const OracleTimeout&) {
    r.outcome = "timeout";
  }
  return r;
}

inline std::vector<MethodSummary> summarize(const std::vector<RunStats>& rows,
                                            const std::vector<std::string>& methods) {
  std::vector<MethodSummary> out;
  for (const auto& m : methods) {
    MethodSummary s;
    s.method = m;
    std::vector<double> times;
    std::vector<std::size_t> calls;
    double reduction_sum = 0.0;
    std::size_t reduction_count = 0;
    for (const auto& r : rows) {
      if (r.method != m) continue;
      ++s.runs;
      times.push_back(r.time_ms);
      calls.push_back(r.oracle_calls);
      if (r.outcome == "unsat" || r.outcome == "iis") {
        reduction_sum += r.reduction();
        ++reduction_count;
      }
    }
    if (s.runs == 0) continue;
    s.median_time_ms = median(times);
    s.median_oracle_calls = median(calls);
    s.mean_reduction_pct = reduction_count ? 100.0 * reduction_sum / static_cast<double>(reduction_count) : 0.0;
    out.push_back(s);
  }
  return out;
}

inline BenchReport run_benchmark(const std::vector<BenchInstance>& instances,
                                 const std::vector<std::string>& methods, const BenchLimits& limits) {
  for (const auto& m : methods) {
    if (std::find(benchmark_methods().begin(), benchmark_methods().end(), m) == benchmark_methods().end()) {
      throw std::invalid_argument("unknown benchmark method '" + m + "'");
    }
  }
  BenchReport report;
  for (const auto& inst : instances) {
    for (const auto& m : methods) report.rows.push_back(run_cell(inst, m, limits));
  }
  report.summaries = summarize(report.rows, methods);
  return report;
}

inline constexpr const char* kCsvHeader =
    "instance,method,cons,vars,avg_lit,red_cons,conflicts,decisions,backtracks,learned,max_dl,"
    "oracle_calls,time_ms,outcome,verified";

inline std::string format_fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline void write_csv_row(std::ostream& os, const RunStats& r, bool timing = true) {
  os << r.instance << ',' << r.method << ',' << r.cons << ',' << r.vars << ','
     << format_fixed(r.avg_lit, 3) << ',' << r.red_cons << ',' << r.conflicts << ',' << r.decisions
     << ',' << r.backtracks << ',' << r.learned << ',' << r.max_dl << ',' << r.oracle_calls << ','
     << format_fixed(timing ? r.time_ms : 0.0, 3) << ',' << r.outcome << ','
     << (r.verified ? "true" : "false") << '\n';
}

inline void write_csv(std::ostream& os, const BenchReport& report, bool timing = true) {
  os << kCsvHeader << '\n';
  for (const auto& r : report.rows) write_csv_row(os, r, timing);
  for (const auto& s : report.summaries) {
    os << "# summary method=" << s.method << " runs=" << s.runs
       << " median_time_ms=" << format_fixed(timing ? s.median_time_ms : 0.0, 3)
       << " median_oracle_calls=" << format_fixed(s.median_oracle_calls, 1)
       << " mean_reduction_pct=" << format_fixed(s.mean_reduction_pct, 2) << '\n';
  }
}

}  // namespace pbdiag
