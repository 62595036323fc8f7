#pragma once

// Verification through constraint solving: DPLL(T) on the verification
// condition, or Reluplex on its conjunctive pieces.

#include "nnv/dpllt.hpp"
#include "nnv/encoder.hpp"
#include "nnv/reluplex.hpp"
#include "nnv/verifier.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace nnv {

struct SolverOptions {
  Rational delta = Rational(1, 1000000);
  std::size_t tau = 5;
  EncodeOptions encode;
  bool warm_start = false;       // reluplex: seed node bounds from interval analysis
  std::size_t max_disjuncts = 4096;
};

/// Disjunctive normal form of a formula whose negations sit on atoms only.
inline std::vector<std::vector<LinAtom>> to_dnf(const LraFormula& f, std::size_t limit = 0) {
  using K = LraFormula::Kind;
  switch (f.kind()) {
    case K::True: return {{}};
    case K::False: return {};
    case K::Atom: return {{f.atom()}};
    case K::Not: throw std::invalid_argument("to_dnf needs a formula without negations");
    case K::Or: {
      auto a = to_dnf(f.lhs(), limit);
      auto b = to_dnf(f.rhs(), limit);
      a.insert(a.end(), b.begin(), b.end());
      if (limit && a.size() > limit) throw std::runtime_error("disjunctive normal form too large");
      return a;
    }
    case K::And: {
      auto a = to_dnf(f.lhs(), limit);
      auto b = to_dnf(f.rhs(), limit);
      std::vector<std::vector<LinAtom>> out;
      for (const auto& x : a)
        for (const auto& y : b) {
          auto c = x;
          c.insert(c.end(), y.begin(), y.end());
          out.push_back(std::move(c));
          if (limit && out.size() > limit) throw std::runtime_error("disjunctive normal form too large");
        }
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

namespace detail {

inline Verdict model_verdict(const Property& p, const RationalVec& model, Verdict v) {
  auto inputs = input_assignment(p, model);
  CexCheck c = check_counterexample(p, inputs);
  if (c.valid) {
    v.outcome = Outcome::Refuted;
    v.counterexample = inputs;
  } else {
    v.outcome = Outcome::Unknown;
    v.reason = "solver model is not a counterexample (" + c.reason + ")";
  }
  return v;
}

/// Among models that make the same atoms true, one maximizing the smallest
/// slack of the strict atoms (capped at 1). Returns the input when the LP
/// finds no positive margin.
inline RationalVec widen_margin(const LraFormula& phi, std::size_t n, const RationalVec& model) {
  std::vector<LinAtom> atoms;
  collect_atoms(positive_nnf(phi), atoms);
  const VarId t = n;
  std::vector<LinConstraint> cs{{{{t, Rational(1)}}, Rel::Ge, 0}, {{{t, Rational(1)}}, Rel::Le, 1}};
  for (const auto& a : atoms) {
    if (!eval_atom(a, model)) continue;
    LinConstraint c = atom_constraint(a);
    if (a.cmp == Cmp::Lt) c.coeffs[t] = 1;
    cs.push_back(std::move(c));
  }
  Tableau tab = to_simplex_form(cs, n + 1);
  LpResult r = maximize(tab, {{t, Rational(1)}});
  if (r.status != LpStatus::Optimal || !(r.value > 0)) return model;
  RationalVec out(n);
  for (VarId v = 0; v < n; ++v) out[v] = tab.value(v);
  return out;
}

}  // namespace detail

/// Proven iff the verification condition is unsat; a sat model is replayed
/// on the networks and reported only if it is a real counterexample.
inline Verdict verify_smt(const Property& p, const SolverOptions& opt = {}) {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  v.method = Method::Smt;
  Vc vc = build_vc(p, opt.encode);
  v.pre_inexact = vc.pre_inexact;
  v.sigmoid_approx = vc.sigmoid;
  DplltOptions dopt;
  dopt.delta = opt.delta;
  DplltResult r = dpllt_solve(vc.phi, vc.num_vars(), dopt);
  v.delta_relaxed = r.delta_relaxed;
  if (r.sat) {
    v = detail::model_verdict(p, detail::widen_margin(vc.phi, vc.num_vars(), r.model), v);
  } else {
    v.outcome = Outcome::Proven;
  }
  v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return v;
}

/// The property as Reluplex problems, one per disjunct of the negated
/// postcondition. Variables 0..num_scalars-1 are the property scalars.
struct ReluplexEncoding {
  std::vector<LinConstraint> base;  // precondition, networks, ties
  std::vector<ReluPair> pairs;
  std::vector<std::vector<LinConstraint>> disjuncts;
  std::size_t num_vars = 0;
  bool delta_relaxed = false;
  bool pre_inexact = false;
};

inline ReluplexEncoding encode_reluplex(const Property& p, const SolverOptions& opt = {}) {
  ReluplexEncoding e;
  // false when the atom is constantly false
  auto add_atom = [&](std::vector<LinConstraint>& out, LinAtom a) {
    if (a.cmp == Cmp::Lt) {
      a.bias += opt.delta;
      a.cmp = Cmp::Le;
      e.delta_relaxed = true;
    }
    a.coeffs = clean(a.coeffs);
    if (a.coeffs.empty()) return a.cmp == Cmp::Eq ? a.bias == 0 : a.bias <= 0;
    out.push_back(atom_constraint(a));
    return true;
  };
  for (const auto& item : p.pre)
    if (std::holds_alternative<Synonyms>(item)) throw EncodeError("reluplex does not support synonym sets");
  bool pre_ok = true;
  for (const auto& a : linear_pre_atoms(p, &e.pre_inexact)) pre_ok = add_atom(e.base, a) && pre_ok;

  std::size_t next = p.num_scalars();
  for (const auto& a : p.assign) {
    const Graph& g = *a.net;
    std::vector<VarId> var(g.size());
    for (NodeId v = 0; v < g.size(); ++v) var[v] = next++;
    auto ins = g.inputs();
    for (std::size_t k = 0; k < ins.size(); ++k) {
      if (const auto* c = std::get_if<RationalVec>(&a.in))
        e.base.push_back({{{var[ins[k]], Rational(1)}}, Rel::Eq, (*c)[k]});
      else
        e.base.push_back({{{var[ins[k]], Rational(1)}, {p.var(std::get<std::string>(a.in)).offset + k, Rational(-1)}},
                          Rel::Eq, Rational(0)});
    }
    for (NodeId v = 0; v < g.size(); ++v) {
      const Node& nd = g.node(v);
      if (const auto* af = std::get_if<fn::Affine>(&nd.fn)) {
        LinExpr ex{{var[v], Rational(1)}};
        for (std::size_t j = 0; j < nd.inputs.size(); ++j) add_scaled(ex, {{var[nd.inputs[j]], Rational(1)}}, -af->coeffs[j]);
        ex = clean(ex);
        e.base.push_back({ex, Rel::Eq, af->bias});
      } else if (std::holds_alternative<fn::Relu>(nd.fn)) {
        e.pairs.push_back({var[v], var[nd.inputs[0]]});
      } else if (!std::holds_alternative<fn::Input>(nd.fn)) {
        throw EncodeError("reluplex supports affine and relu nodes only, found " + op_name(nd.fn));
      }
    }
    const VecVar& r = p.var(a.out);
    for (std::size_t k = 0; k < g.outputs().size(); ++k)
      e.base.push_back({{{r.offset + k, Rational(1)}, {var[g.outputs()[k]], Rational(-1)}}, Rel::Eq, Rational(0)});

    if (opt.warm_start && std::holds_alternative<std::string>(a.in)) {
      // interval bounds on every node; only sound when the input box is exact
      try {
        auto ia = detail::abstract_pre(p, p.var(std::get<std::string>(a.in)));
        if (ia.empty) continue;
        Box in = ia.box;
        Box all = iv_analyze_all(g, in);
        for (NodeId v = 0; v < g.size(); ++v) {
          e.base.push_back({{{var[v], Rational(1)}}, Rel::Ge, all[v].lo});
          e.base.push_back({{{var[v], Rational(1)}}, Rel::Le, all[v].hi});
        }
      } catch (const VerifyError&) {
        // precondition is not box-shaped; run cold
      }
    }
  }
  e.num_vars = next;
  LraFormula neg = positive_nnf(!post_to_lra(p, p.post));
  if (!pre_ok) return e;  // no disjuncts: the precondition is unsatisfiable
  for (const auto& conj : to_dnf(neg, opt.max_disjuncts)) {
    std::vector<LinConstraint> cs;
    bool ok = true;
    for (const auto& a : conj) ok = add_atom(cs, a) && ok;
    if (ok) e.disjuncts.push_back(std::move(cs));
  }
  return e;
}

inline Verdict verify_reluplex(const Property& p, const SolverOptions& opt = {}, ReluplexStats* stats = nullptr) {
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  v.method = Method::Reluplex;
  ReluplexEncoding e = encode_reluplex(p, opt);
  v.delta_relaxed = e.delta_relaxed;
  v.pre_inexact = e.pre_inexact;
  v.outcome = Outcome::Proven;
  ReluplexOptions ro;
  ro.tau = opt.tau;
  for (const auto& d : e.disjuncts) {
    std::vector<LinConstraint> cs = e.base;
    cs.insert(cs.end(), d.begin(), d.end());
    ReluplexResult r = reluplex_solve(to_reluplex_form(cs, e.num_vars, e.pairs), ro);
    if (stats) {
      stats->simplex_calls += r.stats.simplex_calls;
      stats->repairs += r.stats.repairs;
      stats->pivots += r.stats.pivots;
      stats->splits += r.stats.splits;
      stats->fixed += r.stats.fixed;
      stats->max_depth = std::max(stats->max_depth, r.stats.max_depth);
    }
    if (r.sat) {
      v = detail::model_verdict(p, r.model, v);
      break;
    }
  }
  v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return v;
}

/// Dispatches on the method.
inline Verdict run_verification(const Property& p, Method m, const SolverOptions& opt = {}) {
  switch (m) {
    case Method::Smt: return verify_smt(p, opt);
    case Method::Reluplex: return verify_reluplex(p, opt);
    default: return verify(p, m);
  }
}

}  // namespace nnv
