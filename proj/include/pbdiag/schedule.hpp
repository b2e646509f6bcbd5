#pragma once

// Seeded workforce-scheduling instances. One 0/1 variable per
// (agent, day, shift); constraint families:
//   cap_a<a>_d<d>      sum over shifts           <= max_shifts_per_day
//   demand_d<d>_s<s>   sum over agents           >= demand
//   window_a<a>_d<d>   workload over window_length consecutive days <= window_cap
//   dayoff_a<a>_d<d>   sum over that day's shifts = 0
// All indices in names are 1-based.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pbdiag/model.hpp"

namespace pbdiag {

enum class Injection { None, DemandExceedsCapacity, DayoffVsDemand, WindowCapVsDemand };

inline const char* to_string(Injection i) {
  switch (i) {
    case Injection::None: return "none";
    case Injection::DemandExceedsCapacity: return "demand_exceeds_capacity";
    case Injection::DayoffVsDemand: return "dayoff_vs_demand";
    case Injection::WindowCapVsDemand: return "window_cap_vs_demand";
  }
  return "?";
}

inline Injection parse_injection(const std::string& s) {
  if (s == "none") return Injection::None;
  if (s == "demand_exceeds_capacity") return Injection::DemandExceedsCapacity;
  if (s == "dayoff_vs_demand") return Injection::DayoffVsDemand;
  if (s == "window_cap_vs_demand") return Injection::WindowCapVsDemand;
  throw std::invalid_argument("unknown injection '" + s + "'");
}

struct DayOff {
  int agent = 1;  // 1-based
  int day = 1;    // 1-based
  friend bool operator==(const DayOff&, const DayOff&) = default;
};

struct ScheduleParams {
  std::string id;
  int agents = 1;
  int days = 1;
  int shifts = 1;
  int demand = 0;
  int max_shifts_per_day = 1;
  int window_length = 0;  // 0 disables the sliding-window rule
  int window_cap = 0;
  std::vector<DayOff> day_offs;
  Injection injection = Injection::None;
  std::uint64_t seed = 0;

  friend bool operator==(const ScheduleParams&, const ScheduleParams&) = default;
};

class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string schedule_var_name(int a, int d, int s) {
  return "x_a" + std::to_string(a + 1) + "_d" + std::to_string(d + 1) + "_s" + std::to_string(s + 1);
}

inline Model generate_instance(const ScheduleParams& p) {
  if (p.agents < 1 || p.days < 1 || p.shifts < 1) {
    throw ScheduleError("agents, days and shifts must be positive");
  }
  if (p.demand < 0) throw ScheduleError("demand must be non-negative");
  if (p.max_shifts_per_day < 1) throw ScheduleError("max_shifts_per_day must be positive");
  if (p.window_length < 0 || p.window_length > p.days || p.window_cap < 0) {
    throw ScheduleError("window_length must lie in [0, days] and window_cap be non-negative");
  }
  for (const auto& off : p.day_offs) {
    if (off.agent < 1 || off.agent > p.agents || off.day < 1 || off.day > p.days) {
      throw ScheduleError("day-off request (" + std::to_string(off.agent) + ", " +
                          std::to_string(off.day) + ") out of range");
    }
  }

  // demand[d][s]
  std::vector<std::vector<int>> demand(p.days, std::vector<int>(p.shifts, p.demand));
  std::vector<DayOff> day_offs = p.day_offs;
  std::mt19937_64 rng(p.seed);
  auto pick = [&rng](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };

  switch (p.injection) {
    case Injection::None:
      break;
    case Injection::DemandExceedsCapacity: {
      const int d = pick(p.days), s = pick(p.shifts);
      demand[d][s] = p.agents + 1;
      break;
    }
    case Injection::DayoffVsDemand: {
      DayOff off;
      if (!day_offs.empty()) {
        off = day_offs[static_cast<std::size_t>(pick(static_cast<int>(day_offs.size())))];
      } else {
        off = {pick(p.agents) + 1, pick(p.days) + 1};
        day_offs.push_back(off);
      }
      demand[off.day - 1][pick(p.shifts)] = p.agents;
      break;
    }
    case Injection::WindowCapVsDemand: {
      if (p.window_length == 0 || p.window_cap >= p.window_length) {
        throw ScheduleError("window_cap_vs_demand needs an active window with window_cap < window_length");
      }
      const int start = pick(p.days - p.window_length + 1);
      const int s = pick(p.shifts);
      for (int d = start; d < start + p.window_length; ++d) demand[d][s] = p.agents;
      break;
    }
  }

  Model model;
  auto var = [&](int a, int d, int s) {
    return static_cast<VarId>((a * p.days + d) * p.shifts + s);
  };
  for (int a = 0; a < p.agents; ++a)
    for (int d = 0; d < p.days; ++d)
      for (int s = 0; s < p.shifts; ++s) model.add_variable(schedule_var_name(a, d, s));

  const std::string A = "_a", D = "_d";
  for (int a = 0; a < p.agents; ++a) {
    for (int d = 0; d < p.days; ++d) {
      RawConstraint rc{"cap" + A + std::to_string(a + 1) + D + std::to_string(d + 1), {}, Sense::LE,
                       p.max_shifts_per_day};
      for (int s = 0; s < p.shifts; ++s) rc.terms.push_back({1, var(a, d, s)});
      model.add_constraint(std::move(rc));
    }
  }
  for (int d = 0; d < p.days; ++d) {
    for (int s = 0; s < p.shifts; ++s) {
      RawConstraint rc{"demand" + D + std::to_string(d + 1) + "_s" + std::to_string(s + 1), {},
                       Sense::GE, demand[d][s]};
      for (int a = 0; a < p.agents; ++a) rc.terms.push_back({1, var(a, d, s)});
      model.add_constraint(std::move(rc));
    }
  }
  if (p.window_length > 0) {
    for (int a = 0; a < p.agents; ++a) {
      for (int start = 0; start + p.window_length <= p.days; ++start) {
        RawConstraint rc{"window" + A + std::to_string(a + 1) + D + std::to_string(start + 1), {},
                         Sense::LE, p.window_cap};
        for (int d = start; d < start + p.window_length; ++d)
          for (int s = 0; s < p.shifts; ++s) rc.terms.push_back({1, var(a, d, s)});
        model.add_constraint(std::move(rc));
      }
    }
  }
  std::vector<bool> seen(static_cast<std::size_t>(p.agents * p.days), false);
  for (const auto& off : day_offs) {
    const auto key = static_cast<std::size_t>((off.agent - 1) * p.days + (off.day - 1));
    if (seen[key]) continue;
    seen[key] = true;
    RawConstraint rc{"dayoff" + A + std::to_string(off.agent) + D + std::to_string(off.day), {},
                     Sense::EQ, 0};
    for (int s = 0; s < p.shifts; ++s) rc.terms.push_back({1, var(off.agent - 1, off.day - 1, s)});
    model.add_constraint(std::move(rc));
  }
  return model;
}

inline nlohmann::ordered_json to_json(const ScheduleParams& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["agents"] = p.agents;
  j["days"] = p.days;
  j["shifts"] = p.shifts;
  j["demand"] = p.demand;
  j["max_shifts_per_day"] = p.max_shifts_per_day;
  j["window_length"] = p.window_length;
  j["window_cap"] = p.window_cap;
  j["day_offs"] = nlohmann::ordered_json::array();
  for (const auto& off : p.day_offs) j["day_offs"].push_back({off.agent, off.day});
  j["injection"] = to_string(p.injection);
  j["seed"] = p.seed;
  return j;
}

inline ScheduleParams schedule_params_from_json(const nlohmann::json& j) {
  ScheduleParams p;
  p.id = j.value("id", std::string{});
  p.agents = j.at("agents").get<int>();
  p.days = j.at("days").get<int>();
  p.shifts = j.at("shifts").get<int>();
  p.demand = j.at("demand").get<int>();
  p.max_shifts_per_day = j.value("max_shifts_per_day", 1);
  p.window_length = j.value("window_length", 0);
  p.window_cap = j.value("window_cap", 0);
  if (j.contains("day_offs")) {
    for (const auto& off : j.at("day_offs")) p.day_offs.push_back({off.at(0).get<int>(), off.at(1).get<int>()});
  }
  p.injection = parse_injection(j.value("injection", std::string("none")));
  p.seed = j.value("seed", std::uint64_t{0});
  return p;
}

// Manifest: JSON list of parameter objects.
inline std::vector<ScheduleParams> load_manifest(std::string_view text) {
  const auto doc = nlohmann::json::parse(text);
  if (!doc.is_array()) throw std::invalid_argument("manifest must be a JSON list");
  std::vector<ScheduleParams> out;
  for (const auto& j : doc) out.push_back(schedule_params_from_json(j));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].id.empty()) out[i].id = "inst" + std::to_string(i + 1);
  }
  return out;
}

inline std::string save_manifest(const std::vector<ScheduleParams>& params) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& p : params) doc.push_back(to_json(p));
  return doc.dump(2) + "\n";
}

// Benchmark suite: 12 agents x 10 days x 2 shifts, demand 2, at most 4 workdays
// in any 5, two day-offs per agent (at most 3 agents off on one day). 234
// constraints each. Injections rotate through the three families.
//
// Keep the day-offs spread out: with synchronized rest days every agent works
// the same greedy block and feasible sub-models become very hard for a
// chronological search.
inline std::vector<ScheduleParams> standard_suite(std::size_t count, std::uint64_t seed = 1) {
  static constexpr Injection kRotation[] = {Injection::DayoffVsDemand, Injection::WindowCapVsDemand,
                                            Injection::DemandExceedsCapacity};
  std::vector<ScheduleParams> out;
  for (std::size_t i = 0; i < count; ++i) {
    ScheduleParams p;
    p.id = "sched" + std::to_string(i + 1);
    p.agents = 12;
    p.days = 10;
    p.shifts = 2;
    p.demand = 2;
    p.window_length = 5;
    p.window_cap = 4;
    p.injection = kRotation[i % 3];
    p.seed = seed * 1000003u + i;
    std::mt19937_64 rng(p.seed);
    std::vector<int> off_count(static_cast<std::size_t>(p.days), 0);
    for (int a = 1; a <= p.agents; ++a) {
      int previous = 0;
      for (int k = 0; k < 2; ++k) {
        int day;
        do {
          day = std::uniform_int_distribution<int>(1, p.days)(rng);
        } while (day == previous || off_count[static_cast<std::size_t>(day - 1)] >= 3);
        ++off_count[static_cast<std::size_t>(day - 1)];
        p.day_offs.push_back({a, day});
        previous = day;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace pbdiag
