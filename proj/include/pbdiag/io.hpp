#pragma once

// Model serialization: a JSON document format (load and save) and a subset of
// the OPB pseudo-Boolean competition format (load only).

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pbdiag/model.hpp"

namespace pbdiag {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column_at(std::string_view text,
                                                          std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline Coeff json_integer(const nlohmann::json& j, const std::string& what) {
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<Coeff>::max())) {
      throw ModelError(what + " does not fit in a signed 64-bit integer");
    }
    return static_cast<Coeff>(v);
  }
  if (j.is_number_integer()) return j.get<Coeff>();
  throw ModelError(what + " must be an integer");
}

inline Sense parse_sense(std::string_view s) {
  if (s == "<=") return Sense::LE;
  if (s == ">=") return Sense::GE;
  if (s == "=") return Sense::EQ;
  throw ModelError("unknown sense '" + std::string(s) + "'");
}

}  // namespace detail

inline Model load_json_model(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = detail::line_column_at(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(line, column, e.what());
  }
  if (!doc.is_object()) throw ModelError("model document must be a JSON object");

  Model model;
  try {
    for (const auto& name : doc.at("variables")) model.add_variable(name.get<std::string>());
    for (const auto& jc : doc.at("constraints")) {
      RawConstraint rc;
      rc.name = jc.at("name").get<std::string>();
      for (const auto& jt : jc.at("terms")) {
        if (!jt.is_array() || jt.size() != 2) {
          throw ModelError("constraint '" + rc.name + "': each term must be [coefficient, variable]");
        }
        const auto var_name = jt[1].get<std::string>();
        const auto var = model.find_variable(var_name);
        if (!var) {
          throw ModelError("constraint '" + rc.name + "' uses unknown variable '" + var_name + "'");
        }
        rc.terms.push_back({detail::json_integer(jt[0], "coefficient in '" + rc.name + "'"), *var});
      }
      rc.sense = detail::parse_sense(jc.at("sense").get<std::string>());
      rc.rhs = detail::json_integer(jc.at("rhs"), "rhs of '" + rc.name + "'");
      model.add_constraint(std::move(rc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model: ") + e.what());
  }
  return model;
}

inline nlohmann::ordered_json model_to_json(const Model& model) {
  nlohmann::ordered_json doc;
  doc["variables"] = nlohmann::ordered_json::array();
  for (const auto& v : model.variables()) doc["variables"].push_back(v.name);
  doc["constraints"] = nlohmann::ordered_json::array();
  for (const auto& rc : model.raw()) {
    nlohmann::ordered_json jc;
    jc["name"] = rc.name;
    jc["terms"] = nlohmann::ordered_json::array();
    for (const Term& t : rc.terms) {
      jc["terms"].push_back({t.coeff, model.variables()[t.var].name});
    }
    jc["sense"] = to_string(rc.sense);
    jc["rhs"] = rc.rhs;
    doc["constraints"].push_back(std::move(jc));
  }
  return doc;
}

inline std::string save_json_model(const Model& model) {
  return model_to_json(model).dump(2) + "\n";
}

// OPB subset: "+2 x1 -3 x2 >= 1 ;" one constraint per line, '*' comments,
// optional "* #variable= N #constraint= M" header. Constraints are named
// C1..Cn in file order.
inline Model load_opb_model(std::string_view text) {
  Model model;
  std::optional<std::size_t> declared_vars, declared_cons;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto parse_int = [](std::string_view tok, Coeff& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return false;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && ptr == end;
  };

  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (line[first] == '*') {
      auto header_value = [&](std::string_view key) -> std::optional<std::size_t> {
        const auto k = line.find(key);
        if (k == std::string_view::npos) return std::nullopt;
        std::size_t p = k + key.size();
        while (p < line.size() && line[p] == ' ') ++p;
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(line.data() + p, line.data() + line.size(), v);
        if (ec != std::errc()) throw ParseError(line_no, p + 1, "bad header value for " + std::string(key));
        (void)ptr;
        return v;
      };
      if (auto v = header_value("#variable=")) {
        declared_vars = v;
        for (std::size_t i = 1; i <= *v; ++i) model.intern_variable("x" + std::to_string(i));
      }
      if (auto c = header_value("#constraint=")) declared_cons = c;
      continue;
    }

    // Tokenize with column tracking.
    struct Token {
      std::string_view text;
      std::size_t column;
    };
    std::vector<Token> tokens;
    for (std::size_t i = 0; i < line.size();) {
      if (line[i] == ' ' || line[i] == '\t') {
        ++i;
        continue;
      }
      if (line[i] == ';') {
        tokens.push_back({line.substr(i, 1), i + 1});
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ';') ++j;
      tokens.push_back({line.substr(i, j - i), i + 1});
      i = j;
    }
    if (tokens.front().text.starts_with("min:") || tokens.front().text.starts_with("max:")) {
      throw ParseError(line_no, tokens.front().column, "objective functions are not supported");
    }
    if (tokens.back().text != ";") {
      throw ParseError(line_no, line.size() + 1, "expected ';' at end of constraint");
    }

    RawConstraint rc;
    rc.name = "C" + std::to_string(model.num_constraints() + 1);
    std::size_t t = 0;
    bool have_sense = false;
    while (t + 1 < tokens.size()) {
      const Token& tok = tokens[t];
      if (tok.text == ">=" || tok.text == "<=" || tok.text == "=") {
        rc.sense = detail::parse_sense(tok.text);
        have_sense = true;
        if (t + 2 != tokens.size() - 1) {
          throw ParseError(line_no, tok.column, "expected a single integer after the relation");
        }
        if (!parse_int(tokens[t + 1].text, rc.rhs)) {
          throw ParseError(line_no, tokens[t + 1].column, "invalid right-hand side '" +
                                                              std::string(tokens[t + 1].text) + "'");
        }
        break;
      }
      Coeff c = 0;
      if (!parse_int(tok.text, c)) {
        throw ParseError(line_no, tok.column, "invalid coefficient '" + std::string(tok.text) + "'");
      }
      if (t + 1 >= tokens.size() - 1) throw ParseError(line_no, tok.column, "coefficient without variable");
      const Token& var_tok = tokens[t + 1];
      if (var_tok.text.starts_with("~")) {
        throw ParseError(line_no, var_tok.column, "negated literals are not supported");
      }
      if (var_tok.text.size() < 2 || var_tok.text[0] != 'x' ||
          !std::all_of(var_tok.text.begin() + 1, var_tok.text.end(),
                       [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
        throw ParseError(line_no, var_tok.column, "invalid variable '" + std::string(var_tok.text) + "'");
      }
      const std::string var_name(var_tok.text);
      VarId var = 0;
      if (declared_vars) {
        const auto found = model.find_variable(var_name);
        if (!found) {
          throw ParseError(line_no, var_tok.column,
                           "variable '" + var_name + "' exceeds the declared #variable count");
        }
        var = *found;
      } else {
        var = model.intern_variable(var_name);
      }
      rc.terms.push_back({c, var});
      t += 2;
    }
    if (!have_sense) throw ParseError(line_no, tokens.back().column, "missing relation (>=, <= or =)");
    try {
      model.add_constraint(std::move(rc));
    } catch (const ModelError& e) {
      throw ParseError(line_no, first + 1, e.what());
    }
  }
  if (declared_cons && *declared_cons != model.num_constraints()) {
    throw ParseError(line_no, 1, "header declares " + std::to_string(*declared_cons) +
                                     " constraints but file contains " +
                                     std::to_string(model.num_constraints()));
  }
  return model;
}

// JSON when the first non-blank character is '{', OPB otherwise.
inline Model load_model(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return load_json_model(text);
  return load_opb_model(text);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Model load_model_file(const std::string& path) { return load_model(read_file(path)); }

}  // namespace pbdiag
