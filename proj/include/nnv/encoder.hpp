#pragma once

// Encoding networks and properties into linear real arithmetic.

#include "nnv/dpllt.hpp"
#include "nnv/graph.hpp"
#include "nnv/lra.hpp"
#include "nnv/property.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace nnv {

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Formula variables of one network call.
struct NodeVars {
  std::vector<VarId> out;              // per node
  std::vector<std::vector<VarId>> in;  // per node, per input slot
};

inline NodeVars allocate_node_vars(const Graph& g, VarPool& pool, const std::string& ns) {
  NodeVars nv;
  nv.out.resize(g.size());
  nv.in.resize(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    nv.out[v] = pool.fresh(ns + "out" + std::to_string(v));
    if (g.is_input(v)) continue;
    for (std::size_t j = 0; j < g.node(v).inputs.size(); ++j)
      nv.in[v].push_back(pool.fresh(ns + "in" + std::to_string(v) + "_" + std::to_string(j + 1)));
  }
  return nv;
}

inline LinExpr var_expr(VarId v, const Rational& c = 1) { return {{v, c}}; }

inline LinExpr diff(VarId a, VarId b) {
  LinExpr e{{a, Rational(1)}};
  add_scaled(e, {{b, Rational(1)}}, -1);
  return e;
}

struct SigmoidCuts {
  RationalVec cuts{-4, -2, -1, 0, 1, 2, 4};
  Rational lb = 0;
  Rational ub = 1;
};

enum class ReluStyle {
  Cases,    // (in >= 0 and out = in) or (in <= 0 and out = 0)
  Guarded,  // (in >= 0 => out = in) and (in <= 0 => out = 0)
};

/// Monotone band encoding: for each piece, a closed input range and the
/// closed output band it maps into; the pieces are joined by disjunction.
/// Breakpoint values come from a rational enclosure of sigmoid.
inline LraFormula encode_sigmoid(VarId in, VarId out, const SigmoidCuts& sc = {}) {
  const auto& c = sc.cuts;
  if (c.empty()) throw EncodeError("sigmoid encoding needs at least one cut point");
  for (std::size_t i = 1; i < c.size(); ++i)
    if (!(c[i - 1] < c[i])) throw EncodeError("sigmoid cut points must be strictly ascending");
  std::vector<SigmoidEnclosure> f;
  for (const auto& x : c) f.push_back(sigmoid_enclosure(x));
  auto band = [&](const Rational& lo, const Rational& hi) { return ge(var_expr(out), lo) && le(var_expr(out), hi); };
  std::vector<LraFormula> pieces;
  pieces.push_back(le(var_expr(in), c.front()) && band(sc.lb, f.front().hi));
  for (std::size_t i = 1; i < c.size(); ++i)
    pieces.push_back((ge(var_expr(in), c[i - 1]) && le(var_expr(in), c[i])) && band(f[i - 1].lo, f[i].hi));
  pieces.push_back(ge(var_expr(in), c.back()) && band(f.back().lo, sc.ub));
  return LraFormula::any(pieces);
}

struct EncodeOptions {
  SigmoidCuts sigmoid;
  ReluStyle relu = ReluStyle::Cases;
};

inline LraFormula encode_node(const NodeFn& f, VarId out, const std::vector<VarId>& in, const EncodeOptions& opt = {}) {
  if (const auto* a = std::get_if<fn::Affine>(&f)) {
    if (a->coeffs.size() != in.size()) throw EncodeError("affine arity mismatch");
    LinExpr e{{out, Rational(1)}};
    for (std::size_t j = 0; j < in.size(); ++j) add_scaled(e, {{in[j], Rational(1)}}, -a->coeffs[j]);
    return eq(e, a->bias);
  }
  if (std::holds_alternative<fn::Relu>(f)) {
    VarId x = in.at(0);
    if (opt.relu == ReluStyle::Guarded) {
      // a => b written as not(a) or b
      return (!ge(var_expr(x), 0) || eq(diff(out, x), 0)) && (!le(var_expr(x), 0) || eq(var_expr(out), 0));
    }
    return (ge(var_expr(x), 0) && eq(diff(out, x), 0)) || (le(var_expr(x), 0) && eq(var_expr(out), 0));
  }
  if (std::holds_alternative<fn::Max>(f) || std::holds_alternative<fn::Min>(f)) {
    bool is_max = std::holds_alternative<fn::Max>(f);
    std::vector<LraFormula> cases;
    for (std::size_t k = 0; k < in.size(); ++k) {
      std::vector<LraFormula> c{eq(diff(out, in[k]), 0)};
      for (std::size_t j = 0; j < in.size(); ++j)
        if (j != k) c.push_back(is_max ? ge(diff(in[k], in[j]), 0) : le(diff(in[k], in[j]), 0));
      cases.push_back(LraFormula::all(c));
    }
    return LraFormula::any(cases);
  }
  if (std::holds_alternative<fn::Sigmoid>(f)) return encode_sigmoid(in.at(0), out, opt.sigmoid);
  if (std::holds_alternative<fn::Square>(f)) throw EncodeError("square nodes cannot be encoded in linear arithmetic");
  throw EncodeError("input nodes have no encoding");
}

/// phi_G: node formulas followed by edge equalities in edge order.
inline LraFormula encode_graph(const Graph& g, const NodeVars& nv, const EncodeOptions& opt = {}) {
  std::vector<LraFormula> parts;
  for (NodeId v = 0; v < g.size(); ++v)
    if (!g.is_input(v)) parts.push_back(encode_node(g.node(v).fn, nv.out[v], nv.in[v], opt));
  for (NodeId v = 0; v < g.size(); ++v) {
    const auto& ins = g.node(v).inputs;
    for (std::size_t j = 0; j < ins.size(); ++j) parts.push_back(eq(diff(nv.in[v][j], nv.out[ins[j]]), 0));
  }
  return LraFormula::all(parts);
}

// ---------------------------------------------------------------------------
// Verification conditions

/// The postcondition as an LRA formula over property scalars.
/// class(r) = y is the conjunction of r_y > r_j for j != y.
inline LraFormula post_to_lra(const Property& p, const PostFormula& q) {
  auto class_is = [&](const VecVar& r, std::size_t y) {
    std::vector<LraFormula> c;
    for (std::size_t j = 0; j < r.dim; ++j)
      if (j != y - 1) c.push_back(gt(diff(r.offset + y - 1, r.offset + j), 0));
    return LraFormula::all(c);
  };
  return map_atoms(q, [&](const PostAtom& a) -> LraFormula {
    if (const auto* la = std::get_if<LinAtom>(&a)) return LraFormula::atom(*la);
    if (const auto* ce = std::get_if<ClassEquals>(&a)) return class_is(p.var(ce->of), ce->label);
    const auto& sc = std::get<SameClass>(a);
    const VecVar& r1 = p.var(sc.a);
    const VecVar& r2 = p.var(sc.b);
    std::vector<LraFormula> alts;
    for (std::size_t y = 1; y <= r1.dim; ++y) alts.push_back(class_is(r1, y) && class_is(r2, y));
    return LraFormula::any(alts);
  });
}

struct Vc {
  LraFormula phi;          // P and networks and not Q
  VarPool pool;            // property scalars come first
  std::vector<NodeVars> calls;
  bool pre_inexact = false;  // an L2 ball was boxed
  bool sigmoid = false;      // a sigmoid was overapproximated
  [[nodiscard]] std::size_t num_vars() const { return pool.size(); }
};

/// P and (phi_1 and ... and phi_k) and not Q. The property holds iff this is unsat.
inline Vc build_vc(const Property& p, const EncodeOptions& opt = {}) {
  Vc vc;
  for (std::size_t s = 0; s < p.num_scalars(); ++s) vc.pool.fresh(p.scalar_name(s));
  std::vector<LraFormula> parts{pre_formula(p, &vc.pre_inexact)};
  for (std::size_t i = 0; i < p.assign.size(); ++i) {
    const auto& a = p.assign[i];
    const Graph& g = *a.net;
    for (const auto& nd : g.nodes())
      if (std::holds_alternative<fn::Sigmoid>(nd.fn)) vc.sigmoid = true;
    NodeVars nv = allocate_node_vars(g, vc.pool, "n" + std::to_string(i + 1) + ".");
    parts.push_back(encode_graph(g, nv, opt));
    auto ins = g.inputs();
    for (std::size_t k = 0; k < ins.size(); ++k) {
      if (const auto* c = std::get_if<RationalVec>(&a.in))
        parts.push_back(eq(var_expr(nv.out[ins[k]]), (*c)[k]));
      else
        parts.push_back(eq(diff(nv.out[ins[k]], p.var(std::get<std::string>(a.in)).offset + k), 0));
    }
    const VecVar& r = p.var(a.out);
    for (std::size_t k = 0; k < g.outputs().size(); ++k)
      parts.push_back(eq(diff(r.offset + k, nv.out[g.outputs()[k]]), 0));
    vc.calls.push_back(std::move(nv));
  }
  parts.push_back(positive_nnf(!post_to_lra(p, p.post)));
  vc.phi = LraFormula::all(parts);
  return vc;
}

}  // namespace nnv
