#pragma once

// Propositional logic: evaluation, CNF, Tseitin, BCP and DPLL.

#include "nnv/formula.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace nnv {

using Var = int;  // propositional variables are numbered from 1
using PropFormula = Formula<Var>;
using Interpretation = std::map<Var, bool>;

inline PropFormula pvar(Var v) { return PropFormula::atom(v); }

inline void free_vars(const PropFormula& f, std::set<Var>& out) {
  std::vector<Var> atoms;
  collect_atoms(f, atoms);
  out.insert(atoms.begin(), atoms.end());
}

inline std::set<Var> free_vars(const PropFormula& f) {
  std::set<Var> s;
  free_vars(f, s);
  return s;
}

/// Substitutes the assigned variables and simplifies with the constant rules
/// until nothing changes. A fully assigned formula comes back as a constant.
inline PropFormula eval_formula(const PropFormula& f, const Interpretation& I) {
  using K = PropFormula::Kind;
  switch (f.kind()) {
    case K::True:
    case K::False:
      return f;
    case K::Atom: {
      auto it = I.find(f.atom());
      return it == I.end() ? f : PropFormula::constant(it->second);
    }
    case K::Not: {
      auto c = eval_formula(f.child(), I);
      if (c.is_const()) return PropFormula::constant(c.is_false());
      return PropFormula::negate(c);
    }
    case K::And: {
      auto a = eval_formula(f.lhs(), I);
      if (a.is_false()) return a;
      auto b = eval_formula(f.rhs(), I);
      if (b.is_false()) return b;
      if (a.is_true()) return b;
      if (b.is_true()) return a;
      return PropFormula::conj(a, b);
    }
    case K::Or: {
      auto a = eval_formula(f.lhs(), I);
      if (a.is_true()) return a;
      auto b = eval_formula(f.rhs(), I);
      if (b.is_true()) return b;
      if (a.is_false()) return b;
      if (b.is_false()) return a;
      return PropFormula::disj(a, b);
    }
  }
  throw std::logic_error("unreachable");
}

inline std::string to_string(const PropFormula& f) {
  std::ostringstream os;
  print_formula(os, f, [](std::ostream& o, Var v) { o << 'v' << v; });
  return os.str();
}

// ---------------------------------------------------------------------------
// CNF

using Lit = int;  // +v or -v
using Clause = std::vector<Lit>;

inline Var lit_var(Lit l) { return l < 0 ? -l : l; }

struct Cnf {
  int num_vars = 0;
  std::vector<Clause> clauses;

  void add(Clause c) {
    for (Lit l : c) num_vars = std::max(num_vars, lit_var(l));
    clauses.push_back(std::move(c));
  }
  friend bool operator==(const Cnf&, const Cnf&) = default;
};

inline PropFormula cnf_to_formula(const Cnf& cnf) {
  std::vector<PropFormula> cs;
  for (const auto& c : cnf.clauses) {
    std::vector<PropFormula> ls;
    for (Lit l : c) ls.push_back(l > 0 ? pvar(l) : !pvar(-l));
    cs.push_back(PropFormula::any(ls));
  }
  return PropFormula::all(cs);
}

/// true, false, or nullopt when the partial interpretation leaves it open.
inline std::optional<bool> cnf_value(const Cnf& cnf, const Interpretation& I) {
  bool open = false;
  for (const auto& c : cnf.clauses) {
    bool sat = false;
    bool undecided = false;
    for (Lit l : c) {
      auto it = I.find(lit_var(l));
      if (it == I.end()) {
        undecided = true;
      } else if (it->second == (l > 0)) {
        sat = true;
        break;
      }
    }
    if (sat) continue;
    if (!undecided) return false;
    open = true;
  }
  if (open) return std::nullopt;
  return true;
}

/// Assigns `l` true and simplifies: satisfied clauses vanish, the opposite
/// literal is removed. Returns false if an empty clause appears.
inline bool assign_literal(std::vector<Clause>& clauses, Lit l) {
  std::vector<Clause> out;
  out.reserve(clauses.size());
  bool ok = true;
  for (auto& c : clauses) {
    if (std::find(c.begin(), c.end(), l) != c.end()) continue;
    Clause d;
    d.reserve(c.size());
    for (Lit x : c)
      if (x != -l) d.push_back(x);
    if (d.empty()) ok = false;
    out.push_back(std::move(d));
  }
  clauses = std::move(out);
  return ok;
}

struct BcpResult {
  Cnf residual;  // no clauses left means true
  Interpretation forced;
  bool conflict = false;
};

/// Boolean constant propagation to a fixpoint.
inline BcpResult bcp(const Cnf& cnf) {
  BcpResult r;
  r.residual = cnf;
  auto& cs = r.residual.clauses;
  for (const auto& c : cs)
    if (c.empty()) {
      r.conflict = true;
      return r;
    }
  for (;;) {
    auto unit = std::find_if(cs.begin(), cs.end(), [](const Clause& c) { return c.size() == 1; });
    if (unit == cs.end()) break;
    Lit l = unit->front();
    r.forced[lit_var(l)] = l > 0;
    if (!assign_literal(cs, l)) {
      r.conflict = true;
      break;
    }
  }
  return r;
}

enum class Polarity { TrueFirst, FalseFirst };

namespace detail {
inline std::optional<Interpretation> dpll_rec(const Cnf& cnf, Polarity pol, std::size_t& decisions) {
  BcpResult b = bcp(cnf);
  if (b.conflict) return std::nullopt;
  if (b.residual.clauses.empty()) return b.forced;
  Var p = lit_var(b.residual.clauses.front().front());
  for (const auto& c : b.residual.clauses)
    for (Lit l : c) p = std::min(p, lit_var(l));
  bool first = pol == Polarity::TrueFirst;
  for (bool value : {first, !first}) {
    ++decisions;
    Cnf branch = b.residual;
    branch.clauses.push_back({value ? p : -p});
    if (auto m = dpll_rec(branch, pol, decisions)) {
      m->insert(b.forced.begin(), b.forced.end());
      return m;
    }
  }
  return std::nullopt;
}
}  // namespace detail

struct DpllStats {
  std::size_t decisions = 0;
};

/// DPLL with a fixed branching order (lowest variable id first). The model
/// may be partial: variables that no longer matter are left unassigned.
inline std::optional<Interpretation> dpll(const Cnf& cnf, Polarity pol = Polarity::TrueFirst,
                                          DpllStats* stats = nullptr) {
  std::size_t decisions = 0;
  auto r = detail::dpll_rec(cnf, pol, decisions);
  if (stats) stats->decisions = decisions;
  return r;
}

/// Fills unassigned variables 1..n with false.
inline Interpretation extend_model(const Interpretation& I, int num_vars) {
  Interpretation out = I;
  for (Var v = 1; v <= num_vars; ++v) out.emplace(v, false);
  return out;
}

// ---------------------------------------------------------------------------
// Tseitin

struct TseitinResult {
  Cnf cnf;
  Var first_fresh = 1;
  std::vector<std::pair<Var, PropFormula>> definitions;  // t_i and the subformula it names
};

namespace detail {
inline Lit tseitin_name(const PropFormula& f, TseitinResult& r, Var& next) {
  using K = PropFormula::Kind;
  switch (f.kind()) {
    case K::Atom:
      return f.atom();
    case K::Not:
      return -f.child().atom();  // NNF: negation only on variables
    case K::And:
    case K::Or: {
      Lit a = tseitin_name(f.lhs(), r, next);
      Lit b = tseitin_name(f.rhs(), r, next);
      Var t = next++;
      if (f.kind() == K::And) {
        r.cnf.add({-t, a});
        r.cnf.add({-t, b});
        r.cnf.add({-a, -b, t});
      } else {
        r.cnf.add({-t, a, b});
        r.cnf.add({-a, t});
        r.cnf.add({-b, t});
      }
      r.definitions.emplace_back(t, f);
      return t;
    }
    default:
      throw std::logic_error("constant inside simplified formula");
  }
}
}  // namespace detail

/// Equisatisfiable CNF of linear size. Subformulas are named t_1, t_2, ... in
/// post-order, numbered after the largest variable of the input; the last
/// clause asserts the root.
inline TseitinResult tseitin(const PropFormula& phi) {
  PropFormula f = eval_formula(to_nnf(phi), {});
  TseitinResult r;
  int max_var = 0;
  for (Var v : free_vars(phi)) max_var = std::max(max_var, v);
  r.cnf.num_vars = max_var;
  Var next = max_var + 1;
  r.first_fresh = next;
  if (f.is_true()) return r;
  if (f.is_false()) {
    Var t = next++;
    r.cnf.add({t});
    r.cnf.add({-t});
    return r;
  }
  Lit root = detail::tseitin_name(f, r, next);
  r.cnf.add({root});
  return r;
}

// ---------------------------------------------------------------------------
// DIMACS

inline std::string to_dimacs(const Cnf& cnf) {
  std::ostringstream os;
  os << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
  for (const auto& c : cnf.clauses) {
    for (Lit l : c) os << l << ' ';
    os << "0\n";
  }
  return os.str();
}

inline Cnf parse_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Cnf cnf;
  bool header = false;
  Clause cur;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first == "c") continue;
    if (first == "p") {
      std::string fmt;
      std::size_t nclauses = 0;
      if (!(ls >> fmt >> cnf.num_vars >> nclauses) || fmt != "cnf") throw std::runtime_error("bad DIMACS header");
      header = true;
      continue;
    }
    if (!header) throw std::runtime_error("DIMACS clause before header");
    std::istringstream all(line);
    Lit l = 0;
    while (all >> l) {
      if (l == 0) {
        cnf.clauses.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(l);
      }
    }
  }
  if (!cur.empty()) cnf.clauses.push_back(cur);
  return cnf;
}

}  // namespace nnv
