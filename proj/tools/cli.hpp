#pragma once

// pbdiag command-line front end. run_cli() is separate from main() so tests
// can drive it in-process.
//
// Exit codes: 0 ok / SAT / verified IIS, 1 UNSAT (check) or no result,
// 2 usage or parse error, 3 timeout.

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pbdiag/pbdiag.hpp"

namespace pbdiag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUnsat = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitTimeout = 3;

struct CommonFlags {
  std::string model_path;
  std::optional<long long> time_limit_ms;
  bool trace = false;
  std::string trace_out;
  bool no_learning = false;
  bool no_memo = false;
  bool no_timing = false;
  std::string out;
};

namespace detail {

// Writes to --out when given, otherwise to `fallback`.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw std::runtime_error("cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

struct TraceTarget {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = nullptr;
};

inline TraceTarget open_trace(const CommonFlags& f, std::ostream& err) {
  TraceTarget t;
  if (!f.trace_out.empty()) {
    t.file = std::make_unique<std::ofstream>(f.trace_out, std::ios::binary);
    if (!*t.file) throw std::runtime_error("cannot write '" + f.trace_out + "'");
    t.stream = t.file.get();
  } else if (f.trace) {
    t.stream = &err;
  }
  return t;
}

inline SearchOptions search_options(const CommonFlags& f, std::ostream* trace) {
  SearchOptions o;
  o.learning = !f.no_learning;
  o.trace = trace;
  if (f.time_limit_ms) o.time_limit = std::chrono::milliseconds(*f.time_limit_ms);
  return o;
}

inline nlohmann::ordered_json stats_json(const SearchStats& s) {
  nlohmann::ordered_json j;
  j["conflicts"] = s.conflicts;
  j["decisions"] = s.decisions;
  j["backtracks"] = s.backtracks;
  j["learned"] = s.learned;
  j["max_dl"] = s.max_decision_level;
  return j;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json core_to_json(const SearchOutcome& outcome, bool timing) {
  nlohmann::ordered_json j;
  j["outcome"] = to_string(outcome.kind);
  j["core"] = outcome.core.names;
  j["original_count"] = outcome.core.original_count;
  j["core_count"] = outcome.core.size();
  j["reduction_pct"] = outcome.sat() ? 0.0 : 100.0 * outcome.core.reduction();
  j["verified_infeasible"] = outcome.unsat();
  j["stats"] = detail::stats_json(outcome.stats);
  j["time_ms"] = timing ? outcome.time_ms : 0.0;
  return j;
}

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Infeasibility diagnosis for pseudo-Boolean models", "pbdiag"};
  app.require_subcommand(1);
  CommonFlags f;

  auto add_search_flags = [&](CLI::App* sub, bool model_arg) {
    if (model_arg) sub->add_option("model", f.model_path, "Model file (JSON or OPB)")->required();
    sub->add_option("--time-limit-ms", f.time_limit_ms, "Wall-clock limit in milliseconds")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--trace", f.trace, "Write the search trace to standard error");
    sub->add_option("--trace-out", f.trace_out, "Write the search trace to a file");
    sub->add_flag("--no-learning", f.no_learning, "Disable learned no-goods");
    sub->add_option("--out", f.out, "Output file (default: standard output)");
    sub->add_flag("--no-timing", f.no_timing, "Report all time fields as 0");
  };

  auto* check = app.add_subcommand("check", "Decide feasibility; prints SAT or UNSAT");
  add_search_flags(check, true);

  auto* core = app.add_subcommand("core", "Extract a conflict core");
  add_search_flags(core, true);

  std::string method = "csea+qx";
  auto* iis = app.add_subcommand("iis", "Compute an irreducible infeasible subset");
  add_search_flags(iis, true);
  iis->add_option("--method", method, "qx | deletion | additive | csea+qx")
      ->check(CLI::IsMember(minimizer_methods()));
  iis->add_flag("--no-memo", f.no_memo, "Disable the oracle cache");

  auto* dot = app.add_subcommand("export-dot", "Write the final conflict's implication graph");
  add_search_flags(dot, true);

  ScheduleParams params;
  std::string injection = "none";
  std::vector<std::string> day_offs;
  std::string params_path;
  auto* gen = app.add_subcommand("gen", "Generate a scheduling instance as a JSON model");
  gen->add_option("--params", params_path, "JSON file with one parameter object");
  gen->add_option("--agents", params.agents)->check(CLI::PositiveNumber);
  gen->add_option("--days", params.days)->check(CLI::PositiveNumber);
  gen->add_option("--shifts", params.shifts)->check(CLI::PositiveNumber);
  gen->add_option("--demand", params.demand)->check(CLI::NonNegativeNumber);
  gen->add_option("--max-shifts-per-day", params.max_shifts_per_day)->check(CLI::PositiveNumber);
  gen->add_option("--window-length", params.window_length)->check(CLI::NonNegativeNumber);
  gen->add_option("--window-cap", params.window_cap)->check(CLI::NonNegativeNumber);
  gen->add_option("--day-off", day_offs, "agent:day, 1-based (repeatable)");
  gen->add_option("--injection", injection)
      ->check(CLI::IsMember({"none", "demand_exceeds_capacity", "dayoff_vs_demand", "window_cap_vs_demand"}));
  gen->add_option("--seed", params.seed);
  gen->add_option("--out", f.out, "Output file (default: standard output)");
  std::size_t suite = 0;
  gen->add_option("--suite", suite, "Write a manifest of N standard benchmark instances instead")
      ->check(CLI::PositiveNumber);

  std::string manifest_path;
  std::string methods = "csea,csea+qx,qx,deletion,additive";
  auto* bench = app.add_subcommand("bench", "Run methods over a manifest of generated instances");
  bench->add_option("manifest", manifest_path, "JSON list of instance parameters")->required();
  bench->add_option("--methods", methods, "Comma-separated subset of csea,csea+qx,qx,deletion,additive");
  bench->add_option("--time-limit-ms", f.time_limit_ms, "Per-cell wall-clock limit")->check(CLI::PositiveNumber);
  bench->add_flag("--no-learning", f.no_learning);
  bench->add_flag("--no-memo", f.no_memo);
  bench->add_flag("--no-timing", f.no_timing);
  bench->add_option("--out", f.out, "CSV output file (default: standard output)");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "pbdiag: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const bool timing = !f.no_timing;
  try {
    if (*gen) {
      if (suite > 0) {
        detail::Output o(f.out, out);
        *o << save_manifest(standard_suite(suite, params.seed));
        return kExitOk;
      }
      if (!params_path.empty()) {
        const auto doc = nlohmann::json::parse(read_file(params_path));
        params = schedule_params_from_json(doc);
      } else {
        params.injection = parse_injection(injection);
        for (const auto& d : day_offs) {
          const auto colon = d.find(':');
          if (colon == std::string::npos) throw std::invalid_argument("--day-off expects agent:day");
          params.day_offs.push_back({std::stoi(d.substr(0, colon)), std::stoi(d.substr(colon + 1))});
        }
      }
      const Model model = generate_instance(params);
      detail::Output o(f.out, out);
      *o << save_json_model(model);
      return kExitOk;
    }

    if (*bench) {
      const auto manifest = load_manifest(read_file(manifest_path));
      std::vector<BenchInstance> instances;
      for (const auto& p : manifest) instances.push_back({p.id, generate_instance(p)});
      BenchLimits limits;
      limits.memo = !f.no_memo;
      limits.learning = !f.no_learning;
      if (f.time_limit_ms) limits.time_limit = std::chrono::milliseconds(*f.time_limit_ms);
      const BenchReport report = run_benchmark(instances, detail::split_list(methods), limits);
      detail::Output o(f.out, out);
      write_csv(*o, report, timing);
      return kExitOk;
    }

    const Model model = load_model_file(f.model_path);
    auto trace = detail::open_trace(f, err);
    const SearchOptions search = detail::search_options(f, trace.stream);

    if (*check) {
      const SearchOutcome outcome = extract_conflict_set(model, search);
      detail::Output o(f.out, out);
      switch (outcome.kind) {
        case OutcomeKind::Sat: *o << "SAT\n"; return kExitOk;
        case OutcomeKind::Unsat: *o << "UNSAT\n"; return kExitUnsat;
        case OutcomeKind::Timeout: *o << "TIMEOUT\n"; return kExitTimeout;
      }
    }

    if (*core) {
      const SearchOutcome outcome = extract_conflict_set(model, search);
      detail::Output o(f.out, out);
      *o << core_to_json(outcome, timing).dump(2) << '\n';
      if (outcome.kind == OutcomeKind::Timeout) return kExitTimeout;
      return outcome.unsat() ? kExitOk : kExitUnsat;
    }

    if (*iis) {
      OracleOptions oracle_options;
      oracle_options.memo = !f.no_memo;
      oracle_options.learning = !f.no_learning;
      if (f.time_limit_ms) {
        oracle_options.deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(*f.time_limit_ms);
      }
      FeasibilityOracle oracle(model, oracle_options);
      IISResult result;
      try {
        result = run_minimizer(oracle, method, search);
      } catch (const FeasibleInputError&) {
        err << "pbdiag: model is feasible; there is no IIS\n";
        return kExitUnsat;
      } catch (const OracleTimeout&) {
        err << "pbdiag: time limit reached\n";
        return kExitTimeout;
      }
      if (!result.timed_out) {
        FeasibilityOracle checker(model, {.memo = true, .learning = !f.no_learning, .deadline = {}});
        result.verified = verify_iis(checker, result.indices);
      }
      detail::Output o(f.out, out);
      *o << to_json(result, timing).dump(2) << '\n';
      if (result.timed_out) return kExitTimeout;
      return result.verified ? kExitOk : kExitUnsat;
    }

    if (*dot) {
      const SearchOutcome outcome = extract_conflict_set(model, search);
      if (outcome.kind == OutcomeKind::Timeout) {
        err << "pbdiag: time limit reached\n";
        return kExitTimeout;
      }
      if (!outcome.final_conflict) {
        err << "pbdiag: model is feasible; no conflict to export\n";
        return kExitUnsat;
      }
      detail::Output o(f.out, out);
      *o << to_dot(*outcome.final_conflict);
      return kExitOk;
    }
  } catch (const ParseError& e) {
    err << "pbdiag: parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ModelError& e) {
    err << "pbdiag: invalid model: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "pbdiag: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "pbdiag: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    err << "pbdiag: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace pbdiag::cli
