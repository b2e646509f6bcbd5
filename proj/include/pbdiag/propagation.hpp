#pragma once

// Assignment trail with decision levels and implication reasons, plus
// slack-based propagation over normalized constraints.
//
// slack(c) = sum of coefficients of literals not falsified - degree.
// slack < 0 means no extension of the current assignment satisfies c; an
// unassigned literal whose coefficient exceeds the slack must be true.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pbdiag/model.hpp"

namespace pbdiag {

inline constexpr NormId kDecisionReason = std::numeric_limits<NormId>::max();
inline constexpr std::int8_t kUnassigned = -1;

struct TrailEntry {
  VarId var = 0;
  std::uint8_t value = 0;
  int level = 0;
  NormId reason = kDecisionReason;

  bool is_decision() const { return reason == kDecisionReason; }
  friend bool operator==(const TrailEntry&, const TrailEntry&) = default;
};

struct SearchStats {
  std::uint64_t conflicts = 0;
  std::uint64_t decisions = 0;
  std::uint64_t backtracks = 0;
  std::uint64_t learned = 0;
  std::uint64_t implications = 0;
  int max_decision_level = 0;

  friend bool operator==(const SearchStats&, const SearchStats&) = default;
};

struct Conflict {
  NormId constraint = 0;
};

// Result of propagate(): empty on fixpoint, otherwise the violated constraint.
using PropagationResult = std::optional<Conflict>;

class SolverState {
 public:
  explicit SolverState(const Model& model, std::ostream* trace = nullptr)
      : model_(&model),
        values_(model.num_variables(), kUnassigned),
        levels_(model.num_variables(), -1),
        reasons_(model.num_variables(), kDecisionReason),
        tried_(model.num_variables(), 0),
        in_core_(model.num_constraints(), false),
        occurrences_(model.num_variables()),
        dirty_(model.normalized().size(), 1),
        trace_(trace) {
    for (const auto& nc : model.normalized()) {
      for (const auto& wl : nc.lits) occurrences_[wl.lit.var()].push_back(nc.id);
    }
  }

  const Model& model() const { return *model_; }

  // --- constraints: original normalized ids first, learned ones after ---
  std::size_t num_constraints() const { return model_->normalized().size() + learned_.size(); }
  const NormConstraint& constraint(NormId id) const {
    const auto base = model_->normalized().size();
    return id < base ? model_->normalized()[id] : learned_.at(id - base);
  }
  std::span<const NormConstraint> learned() const { return learned_; }
  NormId add_learned(NormConstraint nc) {
    nc.id = static_cast<NormId>(num_constraints());
    nc.origin = kNoOrigin;
    for (const auto& wl : nc.lits) occurrences_[wl.lit.var()].push_back(nc.id);
    learned_.push_back(std::move(nc));
    dirty_.push_back(1);
    ++stats_.learned;
    return learned_.back().id;
  }

  // --- assignment ---
  std::int8_t value(VarId v) const { return values_[v]; }
  bool assigned(VarId v) const { return values_[v] != kUnassigned; }
  int level(VarId v) const { return levels_[v]; }
  NormId reason(VarId v) const { return reasons_[v]; }
  bool falsified(Literal l) const {
    return values_[l.var()] != kUnassigned && values_[l.var()] != l.satisfying_value();
  }
  bool all_assigned() const { return trail_.size() == values_.size(); }
  std::span<const TrailEntry> trail() const { return trail_; }
  int decision_level() const { return decision_level_; }

  // Total assignment; only meaningful when all_assigned().
  Assignment assignment() const {
    Assignment a(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) a[i] = values_[i] == 1 ? 1 : 0;
    return a;
  }

  // --- tried-decision ledger: bit 0 = value 0 tried, bit 1 = value 1 tried ---
  std::uint8_t tried(VarId v) const { return tried_[v]; }
  void set_tried(VarId v, std::uint8_t mask) { tried_[v] = mask; }

  // --- conflict core over raw constraint indices ---
  bool in_core(std::size_t raw_index) const { return in_core_[raw_index]; }
  void add_to_core(std::size_t raw_index) {
    if (!in_core_[raw_index]) {
      in_core_[raw_index] = true;
      ++core_size_;
    }
  }
  std::size_t core_size() const { return core_size_; }
  std::vector<std::size_t> core_indices() const {
    std::vector<std::size_t> out;
    out.reserve(core_size_);
    for (std::size_t i = 0; i < in_core_.size(); ++i) {
      if (in_core_[i]) out.push_back(i);
    }
    return out;
  }

  SearchStats& stats() { return stats_; }
  const SearchStats& stats() const { return stats_; }

  std::ostream* trace() const { return trace_; }
  const std::string& var_name(VarId v) const { return model_->variables()[v].name; }

  // Low-level trail push; prefer decide() and propagate().
  void assign(VarId v, std::uint8_t value, NormId reason) {
    values_[v] = static_cast<std::int8_t>(value);
    levels_[v] = decision_level_;
    reasons_[v] = reason;
    trail_.push_back({v, value, decision_level_, reason});
    for (NormId id : occurrences_[v]) dirty_[id] = 1;
  }

  // A constraint is dirty when one of its variables was assigned since it
  // was last examined. Clean constraints cannot have changed slack, so
  // skipping them gives the same result as re-examining every constraint.
  bool dirty(NormId id) const { return dirty_[id] != 0; }
  void mark_clean(NormId id) { dirty_[id] = 0; }
  void mark_dirty(NormId id) { dirty_[id] = 1; }

  // Pops entries with level >= from_level (all entries when from_level <= 0).
  // Ledger entries of popped decisions strictly deeper than from_level are
  // cleared; the decision at from_level keeps its ledger so it can be flipped.
  void pop_levels(int from_level) {
    while (!trail_.empty() && (from_level <= 0 || trail_.back().level >= from_level)) {
      const TrailEntry& e = trail_.back();
      if (e.is_decision() && e.level > from_level) tried_[e.var] = 0;
      values_[e.var] = kUnassigned;
      levels_[e.var] = -1;
      reasons_[e.var] = kDecisionReason;
      trail_.pop_back();
    }
    decision_level_ = from_level <= 0 ? 0 : from_level - 1;
    std::fill(dirty_.begin(), dirty_.end(), 1);
  }

  void begin_level() {
    ++decision_level_;
    if (decision_level_ > stats_.max_decision_level) stats_.max_decision_level = decision_level_;
  }

 private:
  const Model* model_;
  std::vector<TrailEntry> trail_;
  std::vector<std::int8_t> values_;
  std::vector<int> levels_;
  std::vector<NormId> reasons_;
  std::vector<std::uint8_t> tried_;
  std::vector<bool> in_core_;
  std::size_t core_size_ = 0;
  std::vector<NormConstraint> learned_;
  std::vector<std::vector<NormId>> occurrences_;
  std::vector<std::uint8_t> dirty_;
  int decision_level_ = 0;
  SearchStats stats_;
  std::ostream* trace_;
};

inline Coeff slack(const NormConstraint& nc, const SolverState& state) {
  Coeff available = 0;
  for (const auto& wl : nc.lits) {
    if (!state.falsified(wl.lit)) available += wl.coeff;
  }
  return available - nc.degree;
}

// Unit propagation to fixpoint. Each round visits every active constraint
// (original then learned, by id) and implies, in listed order, each
// unassigned literal whose coefficient exceeds the constraint's slack.
inline PropagationResult propagate(SolverState& state) {
  for (;;) {
    bool changed = false;
    for (NormId id = 0; id < state.num_constraints(); ++id) {
      if (!state.dirty(id)) continue;
      state.mark_clean(id);
      const NormConstraint& nc = state.constraint(id);
      if (nc.tautological()) continue;
      const Coeff s = slack(nc, state);
      if (s < 0) {
        state.mark_dirty(id);
        return Conflict{id};
      }
      for (const auto& wl : nc.lits) {
        if (state.assigned(wl.lit.var()) || wl.coeff <= s) continue;
        const auto value = static_cast<std::uint8_t>(wl.lit.satisfying_value());
        state.assign(wl.lit.var(), value, id);
        ++state.stats().implications;
        changed = true;
        if (auto* out = state.trace()) {
          *out << "imply var=" << state.var_name(wl.lit.var()) << " value=" << int(value)
               << " level=" << state.decision_level() << " reason=" << id << '\n';
        }
      }
    }
    if (!changed) return std::nullopt;
  }
}

inline void decide(SolverState& state, VarId var, std::uint8_t value) {
  if (var >= state.model().num_variables()) {
    throw ContractViolation("decide: variable id " + std::to_string(var) + " out of range");
  }
  if (state.assigned(var)) {
    throw ContractViolation("decide: variable '" + state.var_name(var) + "' is already assigned");
  }
  state.begin_level();
  state.assign(var, value, kDecisionReason);
  ++state.stats().decisions;
  if (auto* out = state.trace()) {
    *out << "decide var=" << state.var_name(var) << " value=" << int(value)
         << " level=" << state.decision_level() << '\n';
  }
}

// Removes every trail entry at decision level >= level and resumes at
// level - 1, so the decision that opened `level` can be re-decided.
// backtrack(state, 0) returns to the empty root state.
inline void backtrack(SolverState& state, int level) {
  if (level < 0 || level > state.decision_level()) {
    throw ContractViolation("backtrack: level " + std::to_string(level) + " outside [0, " +
                            std::to_string(state.decision_level()) + "]");
  }
  state.pop_levels(level);
  ++state.stats().backtracks;
  if (auto* out = state.trace()) *out << "backtrack level=" << level << '\n';
}

}  // namespace pbdiag
