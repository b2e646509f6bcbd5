#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "pbdiag/propagation.hpp"
#include "support/oracles.hpp"

using namespace pbdiag;

namespace {

Model vars_model(std::size_t n) {
  Model m;
  for (std::size_t i = 0; i < n; ++i) m.add_variable("x" + std::to_string(i + 1));
  return m;
}

// Recomputes slack of `nc` using only the first `prefix` trail entries.
Coeff slack_on_prefix(const NormConstraint& nc, std::span<const TrailEntry> trail, std::size_t prefix) {
  Coeff available = 0;
  for (const auto& wl : nc.lits) {
    bool falsified = false;
    for (std::size_t i = 0; i < prefix; ++i) {
      if (trail[i].var == wl.lit.var()) falsified = trail[i].value != wl.lit.satisfying_value();
    }
    if (!falsified) available += wl.coeff;
  }
  return available - nc.degree;
}

// Drives a state with random decisions until conflict or completion, checking
// the reason-validity invariant after every propagation.
void check_reasons(const SolverState& state) {
  const auto trail = state.trail();
  for (std::size_t i = 0; i < trail.size(); ++i) {
    if (trail[i].is_decision()) continue;
    const NormConstraint& reason = state.constraint(trail[i].reason);
    const Coeff s = slack_on_prefix(reason, trail, i);
    bool found = false;
    for (const auto& wl : reason.lits) {
      if (wl.lit.var() == trail[i].var) {
        found = true;
        REQUIRE(wl.lit.satisfying_value() == trail[i].value);
        REQUIRE(wl.coeff > s);
      }
    }
    REQUIRE(found);
  }
}

}  // namespace

TEST_CASE("slack examples", "[prop][slack]") {
  Model m = vars_model(3);
  m.add_constraint({"A", {{2, 0}, {3, 1}}, Sense::LE, 4});        // 2~x1 + 3~x2 >= 1
  m.add_constraint({"B", {{1, 0}, {1, 1}, {1, 2}}, Sense::GE, 3});  // x1 + x2 + x3 >= 3
  SolverState state(m);
  CHECK(slack(m.normalized()[0], state) == 4);
  state.assign(0, 0, kDecisionReason);
  CHECK(slack(m.normalized()[1], state) == -1);
}

TEST_CASE("negative slack iff no extension satisfies the constraint", "[prop][slack]") {
  std::mt19937_64 rng(5);
  const pbdiag::testing::RandomModelSpec spec{8, 1, 6, 5};
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    Model m = vars_model(n);
    m.add_constraint(pbdiag::testing::random_raw_constraint(rng, n, spec, "c"));
    SolverState state(m);
    std::vector<int> partial(n, -1);
    for (VarId v = 0; v < n; ++v) {
      if (rng() % 2) {
        partial[v] = static_cast<int>(rng() % 2);
        state.assign(v, static_cast<std::uint8_t>(partial[v]), kDecisionReason);
      }
    }
    for (const auto& nc : m.normalized()) {
      bool extendable = false;
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n) && !extendable; ++bits) {
        bool agrees = true;
        for (VarId v = 0; v < n; ++v) {
          if (partial[v] >= 0 && static_cast<int>((bits >> v) & 1u) != partial[v]) agrees = false;
        }
        if (agrees) extendable = evaluate(nc, pbdiag::testing::from_bits(bits, n));
      }
      REQUIRE((slack(nc, state) < 0) == !extendable);
    }
  }
}

TEST_CASE("propagate implies literals whose coefficient exceeds slack", "[prop]") {
  Model m = vars_model(2);
  m.add_constraint({"A", {{3, 0}, {1, 1}}, Sense::GE, 3});
  SolverState state(m);
  CHECK_FALSE(propagate(state).has_value());
  REQUIRE(state.trail().size() == 1);
  CHECK(state.trail()[0] == TrailEntry{0, 1, 0, 0});
  CHECK_FALSE(state.assigned(1));
}

TEST_CASE("propagate reports a root conflict", "[prop]") {
  Model m = vars_model(2);
  m.add_constraint({"A", {{1, 0}, {1, 1}}, Sense::GE, 3});
  SolverState state(m);
  const auto conflict = propagate(state);
  REQUIRE(conflict.has_value());
  CHECK(conflict->constraint == 0);
  CHECK(slack(m.normalized()[0], state) < 0);
}

TEST_CASE("tautologies never propagate or conflict", "[prop]") {
  Model m = vars_model(2);
  m.add_constraint({"T", {{1, 0}, {-1, 1}}, Sense::GE, -1});
  SolverState state(m);
  CHECK_FALSE(propagate(state).has_value());
  CHECK(state.trail().empty());
}

TEST_CASE("propagation fixpoint, reasons, soundness and idempotence on random models", "[prop]") {
  std::mt19937_64 rng(8);
  const pbdiag::testing::RandomModelSpec spec{8, 10, 4, 4};
  int fixpoints = 0, conflicts = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Model m = pbdiag::testing::random_model(rng, spec);
    const std::size_t n = m.num_variables();
    SolverState state(m);
    for (;;) {
      const auto result = propagate(state);
      check_reasons(state);
      if (result) {
        ++conflicts;
        CHECK(slack(state.constraint(result->constraint), state) < 0);
        break;
      }
      ++fixpoints;
      // Post-hoc scan: nothing violated, nothing left to imply.
      for (const auto& nc : m.normalized()) {
        const Coeff s = slack(nc, state);
        REQUIRE(s >= 0);
        if (nc.tautological()) continue;
        for (const auto& wl : nc.lits) REQUIRE((state.assigned(wl.lit.var()) || wl.coeff <= s));
      }
      // Soundness: every model solution agreeing with the decisions agrees with the implications.
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
        bool solution = true;
        for (const auto& rc : m.raw()) solution = solution && pbdiag::testing::raw_satisfied(rc, bits);
        if (!solution) continue;
        bool agrees_with_decisions = true;
        for (const auto& e : state.trail()) {
          if (e.is_decision() && ((bits >> e.var) & 1u) != e.value) agrees_with_decisions = false;
        }
        if (!agrees_with_decisions) continue;
        for (const auto& e : state.trail()) REQUIRE(((bits >> e.var) & 1u) == e.value);
      }
      // Idempotence.
      const std::vector<TrailEntry> before(state.trail().begin(), state.trail().end());
      REQUIRE_FALSE(propagate(state).has_value());
      REQUIRE(std::equal(before.begin(), before.end(), state.trail().begin(), state.trail().end()));
      if (state.all_assigned()) break;
      VarId v = 0;
      while (state.assigned(v)) ++v;
      decide(state, v, static_cast<std::uint8_t>(rng() % 2));
    }
  }
  CHECK(fixpoints > 0);
  CHECK(conflicts > 0);
}

TEST_CASE("decide pushes a decision at a new level", "[prop][decide]") {
  Model m = vars_model(3);
  SolverState state(m);
  decide(state, 0, 1);
  REQUIRE(state.trail().size() == 1);
  CHECK(state.trail()[0] == TrailEntry{0, 1, 1, kDecisionReason});
  decide(state, 1, 0);
  CHECK(state.trail()[1].level == 2);
  CHECK(state.decision_level() == 2);
  CHECK(state.stats().decisions == 2);
  CHECK_THROWS_AS(decide(state, 1, 1), ContractViolation);
}

TEST_CASE("backtrack pops levels and restores earlier state", "[prop][backtrack]") {
  Model m = vars_model(4);
  m.add_constraint({"root", {{1, 3}}, Sense::GE, 1});       // x4 forced at level 0
  m.add_constraint({"imp", {{1, 0}, {1, 1}}, Sense::LE, 1});  // x1 -> ~x2
  SolverState state(m);
  REQUIRE_FALSE(propagate(state).has_value());
  const std::vector<TrailEntry> root(state.trail().begin(), state.trail().end());
  REQUIRE(root.size() == 1);

  decide(state, 0, 1);
  REQUIRE_FALSE(propagate(state).has_value());
  decide(state, 2, 1);
  REQUIRE(state.trail().size() == 4);

  SECTION("to level 1 keeps only level-0 entries") {
    backtrack(state, 1);
    CHECK(std::equal(root.begin(), root.end(), state.trail().begin(), state.trail().end()));
    CHECK(state.decision_level() == 0);
    CHECK_FALSE(state.assigned(0));
    CHECK_FALSE(state.assigned(1));
    CHECK(state.stats().backtracks == 1);
  }
  SECTION("to level 0 returns to the empty root state") {
    backtrack(state, 0);
    CHECK(state.trail().empty());
    CHECK(state.decision_level() == 0);
  }
  SECTION("out of range is a contract violation") {
    CHECK_THROWS_AS(backtrack(state, 3), ContractViolation);
    CHECK_THROWS_AS(backtrack(state, -1), ContractViolation);
  }
}

TEST_CASE("backtrack then flip replays the sibling branch deterministically", "[prop][backtrack]") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const Model m = pbdiag::testing::random_model(rng, {8, 10, 4, 4});
    SolverState a(m), b(m);
    if (propagate(a) || propagate(b)) continue;
    if (a.all_assigned()) continue;
    VarId v = 0;
    while (a.assigned(v)) ++v;
    decide(a, v, 1);
    const auto first = propagate(a);
    (void)first;
    backtrack(a, 1);
    decide(a, v, 0);
    const auto ra = propagate(a);
    decide(b, v, 0);
    const auto rb = propagate(b);
    REQUIRE(ra.has_value() == rb.has_value());
    REQUIRE(std::equal(a.trail().begin(), a.trail().end(), b.trail().begin(), b.trail().end()));
  }
}

TEST_CASE("trace stream records decisions, implications and backtracks", "[prop][trace]") {
  Model m = vars_model(2);
  m.add_constraint({"A", {{1, 0}, {1, 1}}, Sense::LE, 1});
  std::ostringstream trace;
  SolverState state(m, &trace);
  decide(state, 0, 1);
  REQUIRE_FALSE(propagate(state).has_value());
  backtrack(state, 1);
  CHECK(trace.str() ==
        "decide var=x1 value=1 level=1\n"
        "imply var=x2 value=0 level=1 reason=0\n"
        "backtrack level=1\n");
}

namespace {

// Reference propagation: full scan of every constraint per round.
std::optional<NormId> full_scan_propagate(const Model& m, std::vector<TrailEntry>& trail,
                                          std::vector<int>& value, int level) {
  auto falsified = [&](Literal l) { return value[l.var()] >= 0 && value[l.var()] != l.satisfying_value(); };
  for (;;) {
    bool changed = false;
    for (const auto& nc : m.normalized()) {
      if (nc.degree <= 0) continue;
      Coeff s = -nc.degree;
      for (const auto& wl : nc.lits) {
        if (!falsified(wl.lit)) s += wl.coeff;
      }
      if (s < 0) return nc.id;
      for (const auto& wl : nc.lits) {
        if (value[wl.lit.var()] >= 0 || wl.coeff <= s) continue;
        value[wl.lit.var()] = wl.lit.satisfying_value();
        trail.push_back({wl.lit.var(), static_cast<std::uint8_t>(wl.lit.satisfying_value()), level, nc.id});
        changed = true;
      }
    }
    if (!changed) return std::nullopt;
  }
}

}  // namespace

TEST_CASE("propagation matches a full-scan reference", "[prop][oracle]") {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 300; ++trial) {
    const Model m = pbdiag::testing::random_model(rng, {10, 14, 5, 4});
    SolverState state(m);
    std::vector<TrailEntry> ref_trail;
    std::vector<int> ref_value(m.num_variables(), -1);
    int level = 0;
    for (;;) {
      const auto got = propagate(state);
      const auto want = full_scan_propagate(m, ref_trail, ref_value, level);
      REQUIRE(got.has_value() == want.has_value());
      if (got) REQUIRE(got->constraint == *want);
      REQUIRE(std::equal(ref_trail.begin(), ref_trail.end(), state.trail().begin(), state.trail().end()));
      if (got || state.all_assigned()) break;
      // Random decision, sometimes followed by a backtrack to a random level.
      VarId v = 0;
      while (state.assigned(v)) ++v;
      const auto value = static_cast<std::uint8_t>(rng() % 2);
      decide(state, v, value);
      ref_value[v] = value;
      ref_trail.push_back({v, value, ++level, kDecisionReason});
      if (rng() % 4 == 0) {
        const int to = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(level));
        backtrack(state, to);
        while (!ref_trail.empty() && ref_trail.back().level >= to) {
          ref_value[ref_trail.back().var] = -1;
          ref_trail.pop_back();
        }
        level = to - 1;
      }
    }
  }
}
