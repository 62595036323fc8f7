#pragma once

// Linear real arithmetic formulas: atoms, exact evaluation, and an
// s-expression text format such as (and (>= (+ x y) 0) (or (< x 0) (>= y 0))).

#include "nnv/formula.hpp"
#include "nnv/rational.hpp"
#include "nnv/simplex.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace nnv {

enum class Cmp { Le, Lt, Eq };

/// sum coeffs[v] * x_v + bias  cmp  0
struct LinAtom {
  LinExpr coeffs;
  Rational bias;
  Cmp cmp = Cmp::Le;

  friend bool operator==(const LinAtom& a, const LinAtom& b) {
    return a.cmp == b.cmp && a.bias == b.bias && a.coeffs == b.coeffs;
  }
  friend bool operator<(const LinAtom& a, const LinAtom& b) {
    if (a.cmp != b.cmp) return a.cmp < b.cmp;
    if (a.bias != b.bias) return a.bias < b.bias;
    return a.coeffs < b.coeffs;
  }
};

using LraFormula = Formula<LinAtom>;

inline LinExpr clean(LinExpr e) {
  for (auto it = e.begin(); it != e.end();) it = it->second == 0 ? e.erase(it) : std::next(it);
  return e;
}

inline LinExpr negated(const LinExpr& e) {
  LinExpr n;
  for (const auto& [v, c] : e) n[v] = -c;
  return n;
}

// e <= rhs and friends; the result is always in the Le/Lt/Eq form.
inline LinAtom atom_le(const LinExpr& e, const Rational& rhs) { return {clean(e), -rhs, Cmp::Le}; }
inline LinAtom atom_lt(const LinExpr& e, const Rational& rhs) { return {clean(e), -rhs, Cmp::Lt}; }
inline LinAtom atom_eq(const LinExpr& e, const Rational& rhs) { return {clean(e), -rhs, Cmp::Eq}; }
inline LinAtom atom_ge(const LinExpr& e, const Rational& rhs) { return {clean(negated(e)), rhs, Cmp::Le}; }
inline LinAtom atom_gt(const LinExpr& e, const Rational& rhs) { return {clean(negated(e)), rhs, Cmp::Lt}; }

inline LraFormula le(const LinExpr& e, const Rational& rhs) { return LraFormula::atom(atom_le(e, rhs)); }
inline LraFormula lt(const LinExpr& e, const Rational& rhs) { return LraFormula::atom(atom_lt(e, rhs)); }
inline LraFormula eq(const LinExpr& e, const Rational& rhs) { return LraFormula::atom(atom_eq(e, rhs)); }
inline LraFormula ge(const LinExpr& e, const Rational& rhs) { return LraFormula::atom(atom_ge(e, rhs)); }
inline LraFormula gt(const LinExpr& e, const Rational& rhs) { return LraFormula::atom(atom_gt(e, rhs)); }

inline bool eval_atom(const LinAtom& a, const RationalVec& x) {
  Rational v = eval_expr(a.coeffs, x) + a.bias;
  switch (a.cmp) {
    case Cmp::Le:
      return v <= 0;
    case Cmp::Lt:
      return v < 0;
    case Cmp::Eq:
      return v == 0;
  }
  return false;
}

inline bool eval_lra(const LraFormula& f, const RationalVec& x) {
  using K = LraFormula::Kind;
  switch (f.kind()) {
    case K::True:
      return true;
    case K::False:
      return false;
    case K::Atom:
      return eval_atom(f.atom(), x);
    case K::Not:
      return !eval_lra(f.child(), x);
    case K::And:
      return eval_lra(f.lhs(), x) && eval_lra(f.rhs(), x);
    case K::Or:
      return eval_lra(f.lhs(), x) || eval_lra(f.rhs(), x);
  }
  return false;
}

inline VarId max_var(const LraFormula& f) {
  std::vector<LinAtom> atoms;
  collect_atoms(f, atoms);
  VarId m = 0;
  for (const auto& a : atoms)
    if (!a.coeffs.empty()) m = std::max(m, a.coeffs.rbegin()->first + 1);
  return m;
}

/// Names for formula variables.
class VarPool {
 public:
  VarId get(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    VarId v = names_.size();
    names_.push_back(name);
    ids_.emplace(name, v);
    return v;
  }
  VarId fresh(const std::string& name) {
    if (ids_.count(name)) throw std::invalid_argument("variable '" + name + "' already exists");
    return get(name);
  }
  [[nodiscard]] std::optional<VarId> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  [[nodiscard]] std::string name(VarId v) const { return v < names_.size() ? names_[v] : "x" + std::to_string(v); }
  [[nodiscard]] std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, VarId> ids_;
};

inline std::string atom_to_string(const LinAtom& a, const VarPool* pool = nullptr) {
  std::ostringstream os;
  const char* op = a.cmp == Cmp::Le ? "<=" : a.cmp == Cmp::Lt ? "<" : "=";
  os << '(' << op << " (+";
  for (const auto& [v, c] : a.coeffs) os << " (* " << to_string(c) << ' ' << (pool ? pool->name(v) : "x" + std::to_string(v)) << ')';
  os << ' ' << to_string(a.bias) << ") 0)";
  return os.str();
}

inline std::string to_string(const LraFormula& f, const VarPool* pool = nullptr) {
  std::ostringstream os;
  print_formula(os, f, [&](std::ostream& o, const LinAtom& a) { o << atom_to_string(a, pool); });
  return os.str();
}

// ---------------------------------------------------------------------------
// s-expression reader

namespace detail {

struct SExpr {
  std::string atom;  // non-empty for leaves
  std::vector<SExpr> items;
  std::size_t pos = 0;
  [[nodiscard]] bool is_leaf() const { return !atom.empty(); }
};

inline SExpr read_sexpr(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  if (i >= s.size()) throw ParseError("unexpected end of formula");
  SExpr e;
  e.pos = i;
  if (s[i] == '(') {
    ++i;
    for (;;) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i >= s.size()) throw ParseError("unbalanced parenthesis at offset " + std::to_string(e.pos));
      if (s[i] == ')') {
        ++i;
        break;
      }
      e.items.push_back(read_sexpr(s, i));
    }
    return e;
  }
  if (s[i] == ')') throw ParseError("unexpected ')' at offset " + std::to_string(i));
  std::size_t start = i;
  while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '(' && s[i] != ')') ++i;
  e.atom = s.substr(start, i - start);
  return e;
}

inline bool looks_numeric(const std::string& t) {
  return !t.empty() && (std::isdigit(static_cast<unsigned char>(t[0])) ||
                        ((t[0] == '-' || t[0] == '+' || t[0] == '.') && t.size() > 1));
}

// linear term: coefficient map plus constant
inline std::pair<LinExpr, Rational> read_term(const SExpr& e, VarPool& pool) {
  if (e.is_leaf()) {
    if (looks_numeric(e.atom)) return {{}, parse_rational(e.atom)};
    return {{{pool.get(e.atom), Rational(1)}}, Rational(0)};
  }
  if (e.items.empty() || !e.items[0].is_leaf()) throw ParseError("bad term at offset " + std::to_string(e.pos));
  const std::string& op = e.items[0].atom;
  if (op == "+" || op == "-") {
    LinExpr acc;
    Rational k = 0;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      auto [ex, c] = read_term(e.items[i], pool);
      Rational sign = (op == "-" && (i > 1 || e.items.size() == 2)) ? -1 : 1;
      add_scaled(acc, ex, sign);
      k += sign * c;
    }
    return {acc, k};
  }
  if (op == "*") {
    if (e.items.size() != 3) throw ParseError("'*' takes two arguments at offset " + std::to_string(e.pos));
    auto [a, ca] = read_term(e.items[1], pool);
    auto [b, cb] = read_term(e.items[2], pool);
    if (!a.empty() && !b.empty()) throw ParseError("non-linear product at offset " + std::to_string(e.pos));
    if (a.empty()) std::swap(a, b), std::swap(ca, cb);
    LinExpr r;
    add_scaled(r, a, cb);
    return {r, ca * cb};
  }
  if (op == "/" && e.items.size() == 3 && e.items[1].is_leaf() && e.items[2].is_leaf())
    return {{}, parse_rational(e.items[1].atom + "/" + e.items[2].atom)};
  throw ParseError("unknown term operator '" + op + "' at offset " + std::to_string(e.pos));
}

inline LraFormula read_formula(const SExpr& e, VarPool& pool) {
  if (e.is_leaf()) {
    if (e.atom == "true") return LraFormula::top();
    if (e.atom == "false") return LraFormula::bottom();
    throw ParseError("expected a formula at offset " + std::to_string(e.pos));
  }
  if (e.items.empty() || !e.items[0].is_leaf()) throw ParseError("bad formula at offset " + std::to_string(e.pos));
  const std::string& op = e.items[0].atom;
  std::vector<LraFormula> args;
  if (op == "and" || op == "or") {
    for (std::size_t i = 1; i < e.items.size(); ++i) args.push_back(read_formula(e.items[i], pool));
    return op == "and" ? LraFormula::all(args) : LraFormula::any(args);
  }
  if (op == "not") {
    if (e.items.size() != 2) throw ParseError("'not' takes one argument at offset " + std::to_string(e.pos));
    return !read_formula(e.items[1], pool);
  }
  if (op == "<=" || op == "<" || op == "=" || op == ">=" || op == ">") {
    if (e.items.size() != 3) throw ParseError("comparison takes two arguments at offset " + std::to_string(e.pos));
    auto [a, ca] = read_term(e.items[1], pool);
    auto [b, cb] = read_term(e.items[2], pool);
    LinExpr d = a;
    add_scaled(d, b, -1);
    Rational rhs = cb - ca;
    if (op == "<=") return le(d, rhs);
    if (op == "<") return lt(d, rhs);
    if (op == "=") return eq(d, rhs);
    if (op == ">=") return ge(d, rhs);
    return gt(d, rhs);
  }
  throw ParseError("unknown formula operator '" + op + "' at offset " + std::to_string(e.pos));
}

}  // namespace detail

inline LraFormula parse_lra(const std::string& text, VarPool& pool) {
  std::size_t i = 0;
  auto e = detail::read_sexpr(text, i);
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i != text.size()) throw ParseError("trailing input at offset " + std::to_string(i));
  return detail::read_formula(e, pool);
}

}  // namespace nnv
