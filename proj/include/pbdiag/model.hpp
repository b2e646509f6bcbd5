#pragma once

// Pseudo-Boolean model types: named 0/1 variables, named linear constraints
// in user form, and their normalized "sum of positive weighted literals >=
// degree" form used by propagation.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pbdiag {

using VarId = std::uint32_t;
using NormId = std::uint32_t;
using Coeff = std::int64_t;

inline constexpr std::size_t kNoOrigin = std::numeric_limits<std::size_t>::max();

// Invalid model content (duplicate names, overflow, unknown variables...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Sense { LE, GE, EQ };

inline const char* to_string(Sense s) {
  switch (s) {
    case Sense::LE: return "<=";
    case Sense::GE: return ">=";
    case Sense::EQ: return "=";
  }
  return "?";
}

struct Variable {
  VarId id = 0;
  std::string name;

  friend bool operator==(const Variable&, const Variable&) = default;
};

struct Term {
  Coeff coeff = 0;
  VarId var = 0;

  friend bool operator==(const Term&, const Term&) = default;
};

struct RawConstraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::GE;
  Coeff rhs = 0;

  friend bool operator==(const RawConstraint&, const RawConstraint&) = default;
};

// Literal over a variable. Encoded as 2*var + (negative ? 1 : 0).
class Literal {
 public:
  constexpr Literal() = default;
  constexpr Literal(VarId var, bool positive)
      : code_(2 * var + (positive ? 0u : 1u)) {}

  constexpr VarId var() const { return code_ >> 1; }
  constexpr bool positive() const { return (code_ & 1u) == 0; }
  // The 0/1 value of var() that satisfies this literal.
  constexpr int satisfying_value() const { return positive() ? 1 : 0; }
  constexpr Literal operator~() const { return from_code(code_ ^ 1u); }
  constexpr std::uint32_t code() const { return code_; }

  static constexpr Literal from_code(std::uint32_t code) {
    Literal l;
    l.code_ = code;
    return l;
  }

  friend constexpr bool operator==(Literal, Literal) = default;
  friend constexpr auto operator<=>(Literal, Literal) = default;

 private:
  std::uint32_t code_ = 0;
};

struct WeightedLiteral {
  Coeff coeff = 0;  // strictly positive
  Literal lit;

  friend bool operator==(const WeightedLiteral&, const WeightedLiteral&) = default;
};

// sum(coeff_i * [lit_i true]) >= degree
struct NormConstraint {
  NormId id = 0;
  std::size_t origin = kNoOrigin;  // index of the raw constraint, kNoOrigin for learned
  std::vector<WeightedLiteral> lits;
  Coeff degree = 0;

  bool tautological() const { return degree <= 0; }
  bool learned() const { return origin == kNoOrigin; }

  friend bool operator==(const NormConstraint&, const NormConstraint&) = default;
};

// Rewrites a raw constraint into 1 (LE/GE) or 2 (EQ) normalized constraints
// with ids next_id, next_id+1. Origin is left as kNoOrigin; Model fills it in.
// Assumes the RawConstraint invariants (checked by Model::add_constraint).
inline std::vector<NormConstraint> normalize(const RawConstraint& raw, NormId next_id) {
  auto make_ge = [](std::span<const Term> terms, Coeff rhs, bool flip, NormId id) {
    NormConstraint nc;
    nc.id = id;
    nc.degree = flip ? -rhs : rhs;
    nc.lits.reserve(terms.size());
    for (const Term& t : terms) {
      const Coeff a = flip ? -t.coeff : t.coeff;
      if (a > 0) {
        nc.lits.push_back({a, Literal(t.var, true)});
      } else {
        // a*x == |a|*(1-x) - |a|
        nc.lits.push_back({-a, Literal(t.var, false)});
        nc.degree += -a;
      }
    }
    return nc;
  };

  std::vector<NormConstraint> out;
  switch (raw.sense) {
    case Sense::GE:
      out.push_back(make_ge(raw.terms, raw.rhs, false, next_id));
      break;
    case Sense::LE:
      out.push_back(make_ge(raw.terms, raw.rhs, true, next_id));
      break;
    case Sense::EQ:
      out.push_back(make_ge(raw.terms, raw.rhs, false, next_id));
      out.push_back(make_ge(raw.terms, raw.rhs, true, next_id + 1));
      break;
  }
  return out;
}

// Total assignment: one 0/1 value per variable id.
using Assignment = std::vector<std::uint8_t>;

inline bool evaluate(const NormConstraint& nc, std::span<const std::uint8_t> assignment) {
  Coeff lhs = 0;
  for (const auto& wl : nc.lits) {
    if (wl.lit.var() >= assignment.size()) {
      throw ContractViolation("evaluate: variable " + std::to_string(wl.lit.var()) +
                              " is unassigned");
    }
    if (assignment[wl.lit.var()] == wl.lit.satisfying_value()) lhs += wl.coeff;
  }
  return lhs >= nc.degree;
}

// Direct evaluation of the user-form inequality.
inline bool evaluate(const RawConstraint& rc, std::span<const std::uint8_t> assignment) {
  Coeff lhs = 0;
  for (const Term& t : rc.terms) {
    if (t.var >= assignment.size()) {
      throw ContractViolation("evaluate: variable " + std::to_string(t.var) + " is unassigned");
    }
    if (assignment[t.var] != 0) lhs += t.coeff;
  }
  switch (rc.sense) {
    case Sense::LE: return lhs <= rc.rhs;
    case Sense::GE: return lhs >= rc.rhs;
    case Sense::EQ: return lhs == rc.rhs;
  }
  return false;
}

// A set of named pseudo-Boolean constraints over named binary variables.
// Built incrementally, then shared read-only.
class Model {
 public:
  VarId add_variable(const std::string& name) {
    if (name.empty()) throw ModelError("variable name must be non-empty");
    if (var_index_.contains(name)) throw ModelError("duplicate variable name '" + name + "'");
    const auto id = static_cast<VarId>(variables_.size());
    variables_.push_back({id, name});
    var_index_.emplace(name, id);
    return id;
  }

  // Returns the id of an existing variable or adds it.
  VarId intern_variable(const std::string& name) {
    if (auto it = var_index_.find(name); it != var_index_.end()) return it->second;
    return add_variable(name);
  }

  std::size_t add_constraint(RawConstraint raw) {
    validate(raw);
    const std::size_t index = raw_.size();
    auto norms = normalize(raw, static_cast<NormId>(normalized_.size()));
    std::vector<NormId> ids;
    for (auto& nc : norms) {
      nc.origin = index;
      ids.push_back(nc.id);
      normalized_.push_back(std::move(nc));
    }
    raw_index_.emplace(raw.name, index);
    origin_index_.push_back(std::move(ids));
    raw_.push_back(std::move(raw));
    return index;
  }

  std::span<const Variable> variables() const { return variables_; }
  std::span<const RawConstraint> raw() const { return raw_; }
  std::span<const NormConstraint> normalized() const { return normalized_; }
  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return raw_.size(); }

  // Norm ids derived from raw constraint `index`.
  std::span<const NormId> norm_ids_of(std::size_t index) const { return origin_index_.at(index); }

  const std::string& origin_name(const NormConstraint& nc) const { return raw_.at(nc.origin).name; }

  std::optional<VarId> find_variable(const std::string& name) const {
    if (auto it = var_index_.find(name); it != var_index_.end()) return it->second;
    return std::nullopt;
  }
  std::optional<std::size_t> find_constraint(const std::string& name) const {
    if (auto it = raw_index_.find(name); it != raw_index_.end()) return it->second;
    return std::nullopt;
  }
  std::size_t constraint_index(const std::string& name) const {
    if (auto idx = find_constraint(name)) return *idx;
    throw ModelError("unknown constraint '" + name + "'");
  }

  // Mean number of terms per raw constraint (0 for an empty model).
  double average_terms() const {
    if (raw_.empty()) return 0.0;
    std::size_t total = 0;
    for (const auto& rc : raw_) total += rc.terms.size();
    return static_cast<double>(total) / static_cast<double>(raw_.size());
  }

  // Sub-model with the given raw constraints (kept in ascending index order)
  // over only the variables they mention.
  Model restrict_to(std::span<const std::size_t> indices) const {
    std::vector<std::size_t> sorted(indices.begin(), indices.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<bool> used(variables_.size(), false);
    for (std::size_t i : sorted) {
      for (const Term& t : raw_.at(i).terms) used[t.var] = true;
    }
    Model sub;
    std::vector<VarId> remap(variables_.size(), 0);
    for (const auto& v : variables_) {
      if (used[v.id]) remap[v.id] = sub.add_variable(v.name);
    }
    for (std::size_t i : sorted) {
      RawConstraint rc = raw_[i];
      for (Term& t : rc.terms) t.var = remap[t.var];
      sub.add_constraint(std::move(rc));
    }
    return sub;
  }

  friend bool operator==(const Model& a, const Model& b) {
    return a.variables_ == b.variables_ && a.raw_ == b.raw_;
  }

 private:
  void validate(const RawConstraint& raw) const {
    if (raw.name.empty()) throw ModelError("constraint name must be non-empty");
    if (raw_index_.contains(raw.name)) {
      throw ModelError("duplicate constraint name '" + raw.name + "'");
    }
    constexpr Coeff kMin = std::numeric_limits<Coeff>::min();
    std::vector<bool> seen(variables_.size(), false);
    Coeff magnitude = 0;
    auto add_magnitude = [&](Coeff v) {
      if (v == kMin || __builtin_add_overflow(magnitude, v < 0 ? -v : v, &magnitude)) {
        throw ModelError("constraint '" + raw.name + "' exceeds the 64-bit magnitude limit");
      }
    };
    for (const Term& t : raw.terms) {
      if (t.var >= variables_.size()) {
        throw ModelError("constraint '" + raw.name + "' uses unknown variable id " +
                         std::to_string(t.var));
      }
      if (t.coeff == 0) {
        throw ModelError("constraint '" + raw.name + "' has a zero coefficient on '" +
                         variables_[t.var].name + "'");
      }
      if (seen[t.var]) {
        throw ModelError("constraint '" + raw.name + "' repeats variable '" +
                         variables_[t.var].name + "'");
      }
      seen[t.var] = true;
      add_magnitude(t.coeff);
    }
    add_magnitude(raw.rhs);
  }

  std::vector<Variable> variables_;
  std::vector<RawConstraint> raw_;
  std::vector<NormConstraint> normalized_;
  std::vector<std::vector<NormId>> origin_index_;
  std::unordered_map<std::string, VarId> var_index_;
  std::unordered_map<std::string, std::size_t> raw_index_;
};

}  // namespace pbdiag
