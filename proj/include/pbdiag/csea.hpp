#pragma once

// Conflict set extraction by CDCL-style search.
//
// The search alternates propagation and decisions. Each conflict is analyzed
// by walking reason edges backwards from the violated constraint; every
// constraint reached joins the conflict core and the deepest decision seen is
// flipped. A decision whose two values have both failed hands control to the
// decision one level up. When no decision is left to flip, the accumulated
// core is returned as an explanation of infeasibility.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pbdiag/model.hpp"
#include "pbdiag/propagation.hpp"

namespace pbdiag {

struct SearchOptions {
  bool learning = true;
  std::optional<std::chrono::milliseconds> time_limit;
  std::ostream* trace = nullptr;
};

enum class OutcomeKind { Sat, Unsat, Timeout };

inline const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Sat: return "sat";
    case OutcomeKind::Unsat: return "unsat";
    case OutcomeKind::Timeout: return "timeout";
  }
  return "?";
}

struct ConflictCore {
  std::vector<std::size_t> indices;  // raw constraint indices, ascending
  std::vector<std::string> names;    // same order as indices
  std::size_t original_count = 0;

  std::size_t size() const { return indices.size(); }
  // 1 - |core| / |model|; 0 for an empty model.
  double reduction() const {
    if (original_count == 0) return 0.0;
    return 1.0 - static_cast<double>(indices.size()) / static_cast<double>(original_count);
  }
};

// Snapshot of the implication graph behind one conflict.
struct ImplicationGraph {
  struct Node {
    VarId var;
    std::string name;
    int value;
    int level;
    bool decision;
  };
  struct Edge {
    VarId from;
    VarId to;
    std::string label;
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::string conflict_label;
  std::vector<VarId> conflict_vars;
};

struct SearchOutcome {
  OutcomeKind kind = OutcomeKind::Sat;
  Assignment assignment;  // Sat only
  ConflictCore core;      // Unsat: infeasible; Timeout: partial, not guaranteed infeasible
  SearchStats stats;
  std::vector<NormConstraint> learned;
  std::optional<ImplicationGraph> final_conflict;
  double time_ms = 0.0;

  bool sat() const { return kind == OutcomeKind::Sat; }
  bool unsat() const { return kind == OutcomeKind::Unsat; }
};

struct ConflictAnalysis {
  std::optional<VarId> latest_decision;
  std::vector<NormId> visited;  // in traversal order
};

inline std::string constraint_label(const SolverState& state, NormId id) {
  const NormConstraint& nc = state.constraint(id);
  if (nc.learned()) return "learned#" + std::to_string(id);
  return state.model().origin_name(nc);
}

// Decision no-good over the decisions reachable from `visited`: at least one
// of those decisions must take the other value. Returns an empty tautology
// (degree 0) when no decision is involved.
inline NormConstraint derive_learned_constraint(const SolverState& state,
                                                std::span<const NormId> visited) {
  std::vector<VarId> decisions;
  for (NormId id : visited) {
    for (const auto& wl : state.constraint(id).lits) {
      const VarId v = wl.lit.var();
      if (state.assigned(v) && state.reason(v) == kDecisionReason) decisions.push_back(v);
    }
  }
  std::sort(decisions.begin(), decisions.end());
  decisions.erase(std::unique(decisions.begin(), decisions.end()), decisions.end());

  NormConstraint learned;
  if (decisions.empty()) return learned;
  learned.degree = 1;
  for (VarId v : decisions) {
    // Literal falsified by the current value is the one that must become true.
    learned.lits.push_back({1, Literal(v, state.value(v) == 0)});
  }
  return learned;
}

inline ImplicationGraph build_implication_graph(const SolverState& state, NormId violated,
                                                std::span<const NormId> visited) {
  ImplicationGraph g;
  std::vector<std::size_t> position(state.model().num_variables(), SIZE_MAX);
  const auto trail = state.trail();
  for (std::size_t i = 0; i < trail.size(); ++i) position[trail[i].var] = i;

  std::vector<bool> seen(state.model().num_variables(), false);
  auto add_node = [&](VarId v) {
    if (seen[v]) return;
    seen[v] = true;
    g.nodes.push_back({v, state.var_name(v), state.value(v), state.level(v),
                       state.reason(v) == kDecisionReason});
  };
  for (NormId id : visited) {
    for (const auto& wl : state.constraint(id).lits) {
      if (state.assigned(wl.lit.var())) add_node(wl.lit.var());
    }
  }
  // add_node may grow g.nodes while we walk it.
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].decision) continue;
    const VarId v = g.nodes[i].var;
    const NormId r = state.reason(v);
    for (const auto& wl : state.constraint(r).lits) {
      const VarId u = wl.lit.var();
      if (u == v || !state.falsified(wl.lit) || position[u] > position[v]) continue;
      add_node(u);
      g.edges.push_back({u, v, constraint_label(state, r)});
    }
  }
  g.conflict_label = constraint_label(state, violated);
  for (const auto& wl : state.constraint(violated).lits) {
    if (state.falsified(wl.lit)) g.conflict_vars.push_back(wl.lit.var());
  }
  std::sort(g.nodes.begin(), g.nodes.end(),
            [&](const auto& a, const auto& b) { return position[a.var] < position[b.var]; });
  return g;
}

inline std::string to_dot(const ImplicationGraph& g) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  };
  std::ostringstream os;
  os << "digraph implication_graph {\n  rankdir=LR;\n";
  for (const auto& n : g.nodes) {
    os << "  " << quote(n.name) << " [label=" << quote(n.name + "=" + std::to_string(n.value) + " @" +
                                                        std::to_string(n.level))
       << (n.decision ? ", shape=box" : ", shape=ellipse") << "];\n";
  }
  for (const auto& e : g.edges) {
    const auto& from = std::find_if(g.nodes.begin(), g.nodes.end(),
                                    [&](const auto& n) { return n.var == e.from; })->name;
    const auto& to = std::find_if(g.nodes.begin(), g.nodes.end(),
                                  [&](const auto& n) { return n.var == e.to; })->name;
    os << "  " << quote(from) << " -> " << quote(to) << " [label=" << quote(e.label) << "];\n";
  }
  os << "  conflict [label=" << quote("conflict: " + g.conflict_label)
     << ", shape=octagon, color=red];\n";
  for (VarId v : g.conflict_vars) {
    const auto& name = std::find_if(g.nodes.begin(), g.nodes.end(),
                                    [&](const auto& n) { return n.var == v; })->name;
    os << "  " << quote(name) << " -> conflict [label=" << quote(g.conflict_label) << "];\n";
  }
  os << "}\n";
  return os.str();
}

// Walks reason edges back from the violated constraint, adds the origins of
// every constraint reached to the core and (if enabled) learns a no-good.
inline ConflictAnalysis analyze_conflict(SolverState& state, NormId violated, bool learning = true) {
  if (violated >= state.num_constraints() || slack(state.constraint(violated), state) >= 0) {
    throw ContractViolation("analyze_conflict: constraint " + std::to_string(violated) +
                            " is not violated");
  }
  ConflictAnalysis result;
  std::vector<bool> visited(state.num_constraints(), false);
  std::vector<NormId> stack{violated};
  int latest_level = -1;
  while (!stack.empty()) {
    const NormId id = stack.back();
    stack.pop_back();
    if (visited[id]) continue;
    visited[id] = true;
    result.visited.push_back(id);
    for (const auto& wl : state.constraint(id).lits) {
      const VarId v = wl.lit.var();
      if (!state.assigned(v)) continue;
      if (state.reason(v) != kDecisionReason) {
        stack.push_back(state.reason(v));
      } else if (state.level(v) > latest_level) {
        latest_level = state.level(v);
        result.latest_decision = v;
      } else if (state.level(v) == latest_level && result.latest_decision != v) {
        throw std::logic_error("analyze_conflict: two decisions share level " +
                               std::to_string(latest_level));
      }
    }
  }

  for (NormId id : result.visited) {
    const NormConstraint& nc = state.constraint(id);
    if (!nc.learned()) state.add_to_core(nc.origin);
  }
  ++state.stats().conflicts;

  std::optional<NormId> learned_id;
  if (learning) {
    NormConstraint learned = derive_learned_constraint(state, result.visited);
    if (!learned.tautological()) learned_id = state.add_learned(std::move(learned));
  }

  if (auto* out = state.trace()) {
    std::vector<NormId> sorted = result.visited;
    std::sort(sorted.begin(), sorted.end());
    *out << "conflict n=" << state.stats().conflicts << " constraint=" << violated
         << " level=" << state.decision_level() << " latest="
         << (result.latest_decision ? state.var_name(*result.latest_decision) : "none")
         << " visited=";
    for (std::size_t i = 0; i < sorted.size(); ++i) *out << (i ? "," : "") << sorted[i];
    *out << " core=";
    bool first = true;
    for (std::size_t i : state.core_indices()) {
      *out << (first ? "" : ",") << state.model().raw()[i].name;
      first = false;
    }
    *out << '\n';
    if (learned_id) {
      *out << "learn id=" << *learned_id << " lits=";
      const auto& lits = state.constraint(*learned_id).lits;
      for (std::size_t i = 0; i < lits.size(); ++i) {
        *out << (i ? "," : "") << (lits[i].lit.positive() ? "" : "~")
             << state.var_name(lits[i].lit.var());
      }
      *out << " degree=1\n";
    }
  }
  return result;
}

namespace detail {

inline ConflictCore make_core(const SolverState& state) {
  ConflictCore core;
  core.original_count = state.model().num_constraints();
  core.indices = state.core_indices();
  for (std::size_t i : core.indices) core.names.push_back(state.model().raw()[i].name);
  return core;
}

// Most recent decision on the trail strictly below `level`.
inline std::optional<VarId> previous_decision(const SolverState& state, int level) {
  const auto trail = state.trail();
  for (auto it = trail.rbegin(); it != trail.rend(); ++it) {
    if (it->is_decision() && it->level < level) return it->var;
  }
  return std::nullopt;
}

}  // namespace detail

inline SearchOutcome extract_conflict_set(const Model& model, const SearchOptions& options = {}) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto deadline = options.time_limit ? std::optional(start + *options.time_limit) : std::nullopt;
  SolverState state(model, options.trace);

  auto finish = [&](OutcomeKind kind, std::optional<NormId> violated = std::nullopt,
                    std::span<const NormId> visited = {}) {
    SearchOutcome out;
    out.kind = kind;
    if (kind == OutcomeKind::Sat) {
      out.assignment = state.assignment();
      for (const auto& rc : model.raw()) {
        if (!evaluate(rc, out.assignment)) {
          throw std::logic_error("extract_conflict_set: model assignment violates '" + rc.name + "'");
        }
      }
    } else {
      out.core = detail::make_core(state);
    }
    if (violated) out.final_conflict = build_implication_graph(state, *violated, visited);
    out.stats = state.stats();
    out.learned.assign(state.learned().begin(), state.learned().end());
    out.time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    if (auto* trace = options.trace) {
      *trace << "result " << to_string(kind) << " core=" << out.core.size() << '\n';
    }
    return out;
  };

  for (;;) {
    if (deadline && Clock::now() >= *deadline) return finish(OutcomeKind::Timeout);

    if (auto conflict = propagate(state)) {
      const ConflictAnalysis analysis = analyze_conflict(state, conflict->constraint, options.learning);
      auto var = analysis.latest_decision;
      for (;;) {
        if (!var) return finish(OutcomeKind::Unsat, conflict->constraint, analysis.visited);
        const std::uint8_t current = static_cast<std::uint8_t>(state.value(*var));
        const std::uint8_t mask = state.tried(*var) | static_cast<std::uint8_t>(1u << current);
        if (mask == 0b11) {
          state.set_tried(*var, 0);
          var = detail::previous_decision(state, state.level(*var));
          if (!var) return finish(OutcomeKind::Unsat, conflict->constraint, analysis.visited);
          continue;
        }
        backtrack(state, state.level(*var));
        state.set_tried(*var, mask);
        decide(state, *var, static_cast<std::uint8_t>(1 - current));
        break;
      }
    } else if (state.all_assigned()) {
      return finish(OutcomeKind::Sat);
    } else {
      VarId next = 0;
      while (state.assigned(next)) ++next;
      decide(state, next, 1);
    }
  }
}

}  // namespace pbdiag
