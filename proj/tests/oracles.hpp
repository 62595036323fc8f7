#pragma once

// Independent oracles and random instance generators shared by the tests.

#include "nnv/nnv.hpp"

#include <random>
#include <vector>

namespace oracle {

using namespace nnv;

// ---------------------------------------------------------------------------
// Random values

inline Rational rand_rational(std::mt19937_64& rng, int num = 8, int den = 4) {
  std::uniform_int_distribution<int> n(-num, num);
  std::uniform_int_distribution<int> d(1, den);
  return ratio(n(rng), d(rng));
}

inline int rand_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Uniform grid sample in [lo, hi] with 2^10 steps, exact.
inline Rational rand_in(std::mt19937_64& rng, const RInterval& iv) {
  int k = rand_int(rng, 0, 1024);
  return iv.lo + (iv.hi - iv.lo) * ratio(k, 1024);
}

inline RationalVec rand_point(std::mt19937_64& rng, const Box& b) {
  RationalVec x;
  for (const auto& iv : b) x.push_back(rand_in(rng, iv));
  return x;
}

inline Box rand_box(std::mt19937_64& rng, std::size_t n) {
  Box b;
  for (std::size_t i = 0; i < n; ++i) {
    Rational lo = rand_rational(rng, 6, 4);
    b.emplace_back(lo, lo + ratio(rand_int(rng, 0, 8), 4));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Propositional logic

inline bool eval_bool(const PropFormula& f, std::uint32_t mask) {
  using K = PropFormula::Kind;
  switch (f.kind()) {
    case K::True: return true;
    case K::False: return false;
    case K::Atom: return (mask >> (f.atom() - 1)) & 1U;
    case K::Not: return !eval_bool(f.child(), mask);
    case K::And: return eval_bool(f.lhs(), mask) && eval_bool(f.rhs(), mask);
    case K::Or: return eval_bool(f.lhs(), mask) || eval_bool(f.rhs(), mask);
  }
  return false;
}

/// Satisfiability by enumerating all 2^n assignments of variables 1..n.
inline bool truth_table_sat(const PropFormula& f, int n) {
  for (std::uint32_t m = 0; m < (1U << n); ++m)
    if (eval_bool(f, m)) return true;
  return false;
}

inline bool equivalent(const PropFormula& a, const PropFormula& b, int n) {
  for (std::uint32_t m = 0; m < (1U << n); ++m)
    if (eval_bool(a, m) != eval_bool(b, m)) return false;
  return true;
}

inline PropFormula rand_prop(std::mt19937_64& rng, int vars, int depth) {
  int pick = rand_int(rng, 0, depth <= 0 ? 1 : 9);
  if (depth <= 0 || pick <= 1) {
    if (rand_int(rng, 0, 30) == 0) return rand_int(rng, 0, 1) ? PropFormula::top() : PropFormula::bottom();
    PropFormula v = pvar(rand_int(rng, 1, vars));
    return pick == 0 ? !v : v;
  }
  if (pick <= 3) return !rand_prop(rng, vars, depth - 1);
  if (pick <= 6) return rand_prop(rng, vars, depth - 1) && rand_prop(rng, vars, depth - 1);
  return rand_prop(rng, vars, depth - 1) || rand_prop(rng, vars, depth - 1);
}

// ---------------------------------------------------------------------------
// Linear arithmetic: Fourier-Motzkin elimination with strictness

/// sum a_i x_i <= b, or < b when strict.
struct Ineq {
  RationalVec a;
  Rational b;
  bool strict = false;
};

inline std::vector<Ineq> to_ineqs(const std::vector<LinAtom>& atoms, std::size_t n) {
  std::vector<Ineq> out;
  for (const auto& at : atoms) {
    RationalVec a(n);
    for (const auto& [v, c] : at.coeffs) a.at(v) = c;
    // a x + bias cmp 0
    if (at.cmp == Cmp::Eq) {
      RationalVec na(n);
      for (std::size_t i = 0; i < n; ++i) na[i] = -a[i];
      out.push_back({a, -at.bias, false});
      out.push_back({na, at.bias, false});
    } else {
      out.push_back({a, -at.bias, at.cmp == Cmp::Lt});
    }
  }
  return out;
}

inline std::vector<Ineq> to_ineqs(const std::vector<LinConstraint>& cs, std::size_t n) {
  std::vector<LinAtom> atoms;
  for (const auto& c : cs) {
    switch (c.rel) {
      case Rel::Le: atoms.push_back(atom_le(c.coeffs, c.rhs)); break;
      case Rel::Ge: atoms.push_back(atom_ge(c.coeffs, c.rhs)); break;
      case Rel::Eq: atoms.push_back(atom_eq(c.coeffs, c.rhs)); break;
    }
  }
  return to_ineqs(atoms, n);
}

inline bool fm_feasible(std::vector<Ineq> sys, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<Ineq> pos, neg, rest;
    for (auto& q : sys) {
      if (q.a[k] > 0)
        pos.push_back(q);
      else if (q.a[k] < 0)
        neg.push_back(q);
      else
        rest.push_back(q);
    }
    for (const auto& p : pos)
      for (const auto& q : neg) {
        Rational sp = 1 / p.a[k];
        Rational sq = -1 / q.a[k];
        Ineq r{RationalVec(n), p.b * sp + q.b * sq, p.strict || q.strict};
        for (std::size_t i = 0; i < n; ++i) r.a[i] = p.a[i] * sp + q.a[i] * sq;
        r.a[k] = 0;
        rest.push_back(std::move(r));
      }
    sys = std::move(rest);
  }
  for (const auto& q : sys)
    if (q.strict ? !(0 < q.b) : !(0 <= q.b)) return false;
  return true;
}

/// Feasibility of an LRA formula by DNF expansion and Fourier-Motzkin.
inline bool lra_sat(const LraFormula& f, std::size_t n) {
  for (const auto& conj : to_dnf(positive_nnf(f)))
    if (fm_feasible(to_ineqs(conj, n), n)) return true;
  return false;
}

inline LinExpr rand_expr(std::mt19937_64& rng, std::size_t n) {
  LinExpr e;
  while (e.empty())
    for (std::size_t i = 0; i < n; ++i)
      if (rand_int(rng, 0, 2) != 0) {
        Rational c = ratio(rand_int(rng, -4, 4), rand_int(rng, 1, 2));
        if (c != 0) e[i] = c;
      }
  return e;
}

inline LinConstraint rand_constraint(std::mt19937_64& rng, std::size_t n) {
  Rel rel = static_cast<Rel>(rand_int(rng, 0, 5) == 0 ? 2 : rand_int(rng, 0, 1));
  return {rand_expr(rng, n), rel, rand_rational(rng, 10, 3)};
}

// ---------------------------------------------------------------------------
// Networks

/// Fully connected ReLU network with small rational weights; the last layer is affine.
inline Graph rand_relu_net(std::mt19937_64& rng, std::size_t inputs, std::size_t hidden_layers, std::size_t width,
                           std::size_t outputs) {
  Graph g;
  std::vector<NodeId> prev;
  for (std::size_t i = 0; i < inputs; ++i) prev.push_back(g.add_input());
  for (std::size_t l = 0; l <= hidden_layers; ++l) {
    bool last = l == hidden_layers;
    std::size_t n = last ? outputs : width;
    std::vector<NodeId> cur;
    for (std::size_t k = 0; k < n; ++k) {
      RationalVec w;
      for (std::size_t j = 0; j < prev.size(); ++j) w.push_back(rand_rational(rng, 4, 2));
      NodeId a = g.add_affine(w, rand_rational(rng, 2, 2), prev);
      cur.push_back(last ? a : g.add_node(fn::Relu{}, {a}));
    }
    prev = cur;
  }
  g.set_outputs(prev);
  return g;
}

/// Random DAG mixing every node kind, with skip connections.
inline Graph rand_mixed_net(std::mt19937_64& rng, std::size_t inputs, std::size_t nodes, bool sigmoid = true,
                            bool square = true) {
  Graph g;
  std::vector<NodeId> pool;
  for (std::size_t i = 0; i < inputs; ++i) pool.push_back(g.add_input());
  for (std::size_t k = 0; k < nodes; ++k) {
    int kind = rand_int(rng, 0, 7);
    auto any = [&] { return pool[static_cast<std::size_t>(rand_int(rng, 0, static_cast<int>(pool.size()) - 1))]; };
    NodeId v;
    if (kind <= 2 || pool.size() < 2) {
      std::size_t ar = static_cast<std::size_t>(rand_int(rng, 1, std::min<int>(3, static_cast<int>(pool.size()))));
      std::vector<NodeId> in;
      RationalVec w;
      for (std::size_t j = 0; j < ar; ++j) {
        in.push_back(any());
        w.push_back(rand_rational(rng, 4, 2));
      }
      v = g.add_affine(w, rand_rational(rng, 2, 2), in);
    } else if (kind <= 4) {
      v = g.add_node(fn::Relu{}, {any()});
    } else if (kind == 5 && sigmoid) {
      v = g.add_node(fn::Sigmoid{}, {any()});
    } else if (kind == 5 && square) {
      v = g.add_node(fn::Square{}, {any()});
    } else if (kind == 6) {
      v = g.add_node(rand_int(rng, 0, 1) ? NodeFn{fn::Max{}} : NodeFn{fn::Min{}}, {any(), any()});
    } else {
      v = square ? g.add_node(fn::Square{}, {any()}) : g.add_node(fn::Relu{}, {any()});
    }
    pool.push_back(v);
  }
  // outputs: every node without successors, so nothing is dead
  auto succ = g.successors();
  std::vector<NodeId> outs;
  for (NodeId v = inputs; v < g.size(); ++v)
    if (succ[v].empty()) outs.push_back(v);
  // inputs nobody reads feed a final affine output
  std::vector<NodeId> unread;
  for (NodeId v = 0; v < inputs; ++v)
    if (succ[v].empty()) unread.push_back(v);
  if (!unread.empty() || outs.empty()) {
    std::vector<NodeId> in = unread;
    if (in.empty()) in.push_back(0);
    outs.push_back(g.add_affine(RationalVec(in.size(), Rational(1)), 0, in));
  }
  g.set_outputs(outs);
  return g;
}

/// Double-valued evaluation, for networks with sigmoid.
inline std::vector<double> evaluate_double(const Graph& g, const std::vector<double>& x) {
  std::vector<double> val(g.size());
  auto ins = g.inputs();
  for (std::size_t i = 0; i < ins.size(); ++i) val[ins[i]] = x[i];
  for (NodeId v : topo_order(g)) {
    const Node& nd = g.node(v);
    if (g.is_input(v)) continue;
    std::vector<double> a;
    for (NodeId u : nd.inputs) a.push_back(val[u]);
    if (const auto* af = std::get_if<fn::Affine>(&nd.fn)) {
      double s = to_double(af->bias);
      for (std::size_t j = 0; j < a.size(); ++j) s += to_double(af->coeffs[j]) * a[j];
      val[v] = s;
    } else if (std::holds_alternative<fn::Relu>(nd.fn)) {
      val[v] = std::max(0.0, a[0]);
    } else if (std::holds_alternative<fn::Sigmoid>(nd.fn)) {
      val[v] = sigmoid(a[0]);
    } else if (std::holds_alternative<fn::Square>(nd.fn)) {
      val[v] = a[0] * a[0];
    } else if (std::holds_alternative<fn::Max>(nd.fn)) {
      val[v] = *std::max_element(a.begin(), a.end());
    } else {
      val[v] = *std::min_element(a.begin(), a.end());
    }
  }
  std::vector<double> out;
  for (NodeId o : g.outputs()) out.push_back(val[o]);
  return out;
}

inline bool has_sigmoid(const Graph& g) {
  for (const auto& nd : g.nodes())
    if (std::holds_alternative<fn::Sigmoid>(nd.fn)) return true;
  return false;
}

/// Output values at a point: exact when possible, otherwise doubles widened
/// by a tiny relative margin so rounding in the oracle cannot fake a violation.
inline Box point_outputs(const Graph& g, const RationalVec& x) {
  Box out;
  if (!has_sigmoid(g)) {
    for (const auto& r : evaluate(g, x)) out.emplace_back(r, r);
    return out;
  }
  std::vector<double> xd;
  for (const auto& r : x) xd.push_back(to_double(r));
  for (double y : evaluate_double(g, xd)) {
    double m = 1e-9 * (1 + std::abs(y));
    out.emplace_back(from_double(y - m), from_double(y + m));
  }
  return out;
}

inline bool overlaps(const RInterval& inner, const RInterval& outer) { return !(inner.hi < outer.lo) && !(outer.hi < inner.lo); }

// ---------------------------------------------------------------------------
// Zonotope vertices

/// Exact range of a generator expression over the hypercube by enumerating corners.
inline RInterval corner_range(const ZonoDim& d, std::size_t m) {
  std::optional<Rational> lo, hi;
  for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
    RationalVec eps(m);
    for (std::size_t i = 0; i < m; ++i) eps[i] = (mask >> i) & 1U ? 1 : -1;
    Rational v = d.at(eps);
    if (!lo || v < *lo) lo = v;
    if (!hi || *hi < v) hi = v;
  }
  return {*lo, *hi};
}

// ---------------------------------------------------------------------------
// Properties

/// {x in box} r <- g(x) {post}; scalars are x[0..n) then r[0..m).
inline Property box_property(std::shared_ptr<const Graph> g, const Box& box, PostFormula post) {
  Property p;
  p.add_var("x", g->input_count(), true);
  for (std::size_t i = 0; i < box.size(); ++i) {
    p.pre.emplace_back(atom_ge({{i, Rational(1)}}, box[i].lo));
    p.pre.emplace_back(atom_le({{i, Rational(1)}}, box[i].hi));
  }
  Assignment a;
  a.out = "r";
  a.net_path = "<memory>";
  a.in = std::string("x");
  a.net = g;
  p.add_var("r", g->output_count(), false);
  p.assign.push_back(std::move(a));
  p.post = std::move(post);
  return p;
}

/// A linear postcondition c.r <= t whose threshold sits near the values the
/// network takes on the box, so both verdicts occur.
inline PostFormula rand_linear_post(std::mt19937_64& rng, const Graph& g, const Box& box) {
  std::size_t n = g.input_count();
  LinExpr c;
  while (c.empty())
    for (std::size_t k = 0; k < g.output_count(); ++k) {
      Rational w(rand_int(rng, -2, 2));
      if (w != 0) c[n + k] = w;
    }
  std::optional<Rational> hi;
  for (int s = 0; s < 8; ++s) {
    RationalVec x = rand_point(rng, box);
    RationalVec y = evaluate(g, x);
    Rational v = 0;
    for (const auto& [k, w] : c) v += w * y[k - n];
    if (!hi || *hi < v) hi = v;
  }
  Rational t = *hi + ratio(rand_int(rng, -4, 4), 4);
  return PostFormula::atom(atom_le(c, t));
}

}  // namespace oracle
