#pragma once

// Lazy DPLL(T) over linear real arithmetic.

#include "nnv/lra.hpp"
#include "nnv/sat.hpp"
#include "nnv/simplex.hpp"

#include <map>
#include <set>
#include <vector>

namespace nnv {

/// Bijection between propositional variables (1-based) and atoms.
class AtomMap {
 public:
  Var var_of(const LinAtom& a) {
    auto it = index_.find(a);
    if (it != index_.end()) return it->second;
    atoms_.push_back(a);
    Var v = static_cast<Var>(atoms_.size());
    index_.emplace(a, v);
    return v;
  }
  [[nodiscard]] const LinAtom& atom_of(Var v) const { return atoms_.at(static_cast<std::size_t>(v - 1)); }
  [[nodiscard]] std::size_t size() const { return atoms_.size(); }
  [[nodiscard]] bool is_atom_var(Var v) const { return v >= 1 && static_cast<std::size_t>(v) <= atoms_.size(); }

 private:
  std::vector<LinAtom> atoms_;
  std::map<LinAtom, Var> index_;
};

inline std::pair<PropFormula, AtomMap> boolean_abstraction(const LraFormula& phi) {
  AtomMap m;
  // pre-order left-to-right numbering so the first atom read gets p_1
  std::vector<LinAtom> atoms;
  collect_atoms(phi, atoms);
  for (const auto& a : atoms) m.var_of(a);
  PropFormula fb = map_atoms(phi, [&](const LinAtom& a) { return pvar(m.var_of(a)); });
  return {fb, m};
}

/// The refinement (phi^B)^T.
inline LraFormula concretize(const PropFormula& fb, const AtomMap& m) {
  return map_atoms(fb, [&](Var v) { return LraFormula::atom(m.atom_of(v)); });
}

/// Negation pushed into atoms: not(e <= 0) is e > 0, not(e < 0) is e >= 0,
/// not(e = 0) is e < 0 or e > 0.
inline LraFormula negate_atom(const LinAtom& a) {
  LinAtom n{negated(a.coeffs), -a.bias, Cmp::Le};
  switch (a.cmp) {
    case Cmp::Le:
      n.cmp = Cmp::Lt;
      return LraFormula::atom(n);
    case Cmp::Lt:
      return LraFormula::atom(n);
    case Cmp::Eq: {
      LinAtom below = a;
      below.cmp = Cmp::Lt;
      n.cmp = Cmp::Lt;
      return LraFormula::atom(below) || LraFormula::atom(n);
    }
  }
  throw std::logic_error("unreachable");
}

/// NNF without negated atoms.
inline LraFormula positive_nnf(const LraFormula& f) { return to_nnf<LinAtom>(f, negate_atom); }

inline LinConstraint atom_constraint(const LinAtom& a) {
  return {a.coeffs, a.cmp == Cmp::Eq ? Rel::Eq : Rel::Le, -a.bias};
}

struct DplltOptions {
  Rational delta = Rational(1, 1000000);
  Polarity polarity = Polarity::FalseFirst;
  std::size_t max_theory_checks = 0;  // 0 = unlimited
};

struct DplltResult {
  bool sat = false;
  RationalVec model;         // one value per formula variable when sat
  bool delta_relaxed = false;  // a strict atom was rewritten with delta
  std::size_t theory_checks = 0;
  std::vector<std::vector<Var>> checked;  // true-atom sets sent to the theory solver
};

/// Strict atoms e < 0 become e + delta <= 0.
inline LraFormula delta_rewrite(const LraFormula& f, const Rational& delta, bool& rewritten) {
  return map_atoms(f, [&](const LinAtom& a) {
    if (a.cmp != Cmp::Lt) return LraFormula::atom(a);
    rewritten = true;
    return LraFormula::atom(LinAtom{a.coeffs, a.bias + delta, Cmp::Le});
  });
}

/// Solves phi by alternating DPLL on the Boolean abstraction with Simplex on
/// the atoms the Boolean model sets true. A theory conflict adds the negation
/// of that model as a blocking clause.
inline DplltResult dpllt_solve(const LraFormula& phi, std::size_t num_vars, const DplltOptions& opt = {}) {
  DplltResult res;
  num_vars = std::max<std::size_t>(num_vars, max_var(phi));
  LraFormula pre = delta_rewrite(positive_nnf(phi), opt.delta, res.delta_relaxed);
  auto [fb, atoms] = boolean_abstraction(pre);
  TseitinResult ts = tseitin(fb);
  Cnf cnf = ts.cnf;

  for (;;) {
    auto model = dpll(cnf, opt.polarity);
    if (!model) return res;
    std::vector<Var> chosen;
    for (const auto& [v, b] : *model)
      if (b && atoms.is_atom_var(v)) chosen.push_back(v);
    ++res.theory_checks;
    res.checked.push_back(chosen);

    std::vector<LinConstraint> cs;
    cs.reserve(chosen.size());
    for (Var v : chosen) cs.push_back(atom_constraint(atoms.atom_of(v)));
    Tableau t = to_simplex_form(cs, num_vars);
    if (simplex_solve(t) == SimplexStatus::Sat) {
      res.sat = true;
      res.model.assign(t.values().begin(), t.values().begin() + static_cast<std::ptrdiff_t>(num_vars));
      return res;
    }
    if (chosen.empty()) throw std::logic_error("empty conjunction reported unsat");
    Clause block;
    for (Var v : chosen) block.push_back(-v);
    cnf.add(block);
    if (opt.max_theory_checks && res.theory_checks >= opt.max_theory_checks)
      throw std::runtime_error("theory check limit reached");
  }
}

}  // namespace nnv
