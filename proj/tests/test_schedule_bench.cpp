#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "pbdiag/bench.hpp"
#include "pbdiag/io.hpp"
#include "pbdiag/schedule.hpp"
#include "support/oracles.hpp"

using namespace pbdiag;
namespace pt = pbdiag::testing;

namespace {

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("day-off against full demand gives a two-constraint IIS", "[schedule]") {
  ScheduleParams p;
  p.agents = 2;
  p.days = 1;
  p.shifts = 1;
  p.demand = 2;
  p.day_offs = {{1, 1}};
  p.injection = Injection::DayoffVsDemand;
  const Model m = generate_instance(p);
  CHECK(m.num_variables() == 2);
  CHECK_FALSE(pt::brute_force_feasible(m));
  for (const auto& method : minimizer_methods()) {
    FeasibilityOracle oracle(m);
    const IISResult r = run_minimizer(oracle, method);
    CHECK(r.names == std::vector<std::string>{"demand_d1_s1", "dayoff_a1_d1"});
  }
}

TEST_CASE("variable count and feasibility without injection", "[schedule]") {
  ScheduleParams p;
  p.agents = 3;
  p.days = 4;
  p.shifts = 2;
  p.demand = 1;
  const Model m = generate_instance(p);
  CHECK(m.num_variables() == 3u * 4u * 2u);
  // caps + demands, nothing else
  CHECK(m.num_constraints() == 3u * 4u + 4u * 2u);
  CHECK(extract_conflict_set(m).sat());
  p.window_length = 3;
  p.window_cap = 2;
  const Model w = generate_instance(p);
  CHECK(w.num_constraints() == 3u * 4u + 4u * 2u + 3u * 2u);
  CHECK(w.find_constraint("window_a2_d2").has_value());
}

TEST_CASE("generator is deterministic", "[schedule]") {
  for (const auto& p : standard_suite(6, 7)) {
    CHECK(save_json_model(generate_instance(p)) == save_json_model(generate_instance(p)));
  }
  CHECK(save_manifest(standard_suite(4, 3)) == save_manifest(standard_suite(4, 3)));
}

TEST_CASE("injected instances are infeasible", "[schedule][property]") {
  std::mt19937_64 rng(8);
  const Injection kinds[] = {Injection::DemandExceedsCapacity, Injection::DayoffVsDemand,
                             Injection::WindowCapVsDemand};
  for (int trial = 0; trial < 60; ++trial) {
    ScheduleParams p;
    p.agents = 1 + static_cast<int>(rng() % 3);
    p.days = 2 + static_cast<int>(rng() % 3);
    p.shifts = 1 + static_cast<int>(rng() % 2);
    p.demand = static_cast<int>(rng() % 2);
    p.window_length = 2;
    p.window_cap = 1;
    p.injection = kinds[trial % 3];
    p.seed = rng();
    if (rng() % 2) p.day_offs.push_back({1, 1 + static_cast<int>(rng() % p.days)});
    const Model m = generate_instance(p);
    REQUIRE(extract_conflict_set(m).unsat());
    if (m.num_variables() <= 20) REQUIRE_FALSE(pt::brute_force_feasible(m));
  }
}

TEST_CASE("generator rejects impossible parameters", "[schedule][errors]") {
  ScheduleParams p;
  p.agents = 0;
  CHECK_THROWS_AS(generate_instance(p), ScheduleError);
  p.agents = 2;
  p.injection = Injection::WindowCapVsDemand;
  CHECK_THROWS_AS(generate_instance(p), ScheduleError);
  p.injection = Injection::None;
  p.day_offs = {{3, 1}};
  CHECK_THROWS_AS(generate_instance(p), ScheduleError);
  CHECK_THROWS_AS(parse_injection("sometimes"), std::invalid_argument);
}

TEST_CASE("manifest round trip", "[schedule]") {
  const auto suite = standard_suite(3);
  const auto back = load_manifest(save_manifest(suite));
  CHECK(back == suite);
  const auto defaults = load_manifest(R"([{"agents": 1, "days": 1, "shifts": 1, "demand": 1}])");
  REQUIRE(defaults.size() == 1);
  CHECK(defaults[0].id == "inst1");
  CHECK(defaults[0].max_shifts_per_day == 1);
}

TEST_CASE("empty instance list gives a header-only CSV", "[bench]") {
  std::ostringstream os;
  write_csv(os, run_benchmark({}, benchmark_methods(), {}));
  CHECK(os.str() == std::string(kCsvHeader) + "\n");
}

TEST_CASE("feasible instance gives sat rows with no reduction", "[bench]") {
  ScheduleParams p;
  p.agents = 2;
  p.days = 2;
  p.shifts = 1;
  p.demand = 1;
  const BenchReport report = run_benchmark({{"feasible", generate_instance(p)}}, benchmark_methods(), {});
  REQUIRE(report.rows.size() == benchmark_methods().size());
  for (const auto& r : report.rows) {
    CHECK(r.outcome == "sat");
    CHECK(r.red_cons == 0);
  }
}

TEST_CASE("unknown method is rejected", "[bench][errors]") {
  CHECK_THROWS_AS(run_benchmark({}, {"magic"}, {}), std::invalid_argument);
}

TEST_CASE("standard suite rows verify and the reduction column is consistent", "[bench][slow]") {
  std::vector<BenchInstance> instances;
  for (const auto& p : standard_suite(30)) instances.push_back({p.id, generate_instance(p)});
  BenchLimits limits;
  limits.time_limit = std::chrono::milliseconds(30000);
  const BenchReport report = run_benchmark(instances, {"csea", "csea+qx"}, limits);
  REQUIRE(report.rows.size() == 60);
  for (const auto& r : report.rows) {
    REQUIRE(r.cons >= 200);
    REQUIRE((r.outcome == "unsat" || r.outcome == "iis"));
    REQUIRE(r.verified);
  }
  std::ostringstream os;
  write_csv(os, report, false);
  const auto lines = csv_lines(os.str());
  REQUIRE(lines.size() == 61);
  CHECK(lines[0] == kCsvHeader);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    REQUIRE(cells.size() == 15);
    const double cons = std::stod(cells[2]), red = std::stod(cells[5]);
    CHECK(std::abs((1.0 - red / cons) - report.rows[i - 1].reduction()) < 1e-12);
    CHECK(cells[12] == "0.000");
  }
}
