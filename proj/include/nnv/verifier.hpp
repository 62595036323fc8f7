#pragma once

// Robustness verification by abstract interpretation: abstract the
// precondition, analyze the network, check the postcondition.

#include "nnv/dpllt.hpp"
#include "nnv/interval.hpp"
#include "nnv/polyhedron.hpp"
#include "nnv/property.hpp"
#include "nnv/zonotope.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace nnv {

class VerifyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { Interval, Zonotope, Polyhedron, Smt, Reluplex };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::Interval: return "interval";
    case Method::Zonotope: return "zonotope";
    case Method::Polyhedron: return "polyhedron";
    case Method::Smt: return "smt";
    case Method::Reluplex: return "reluplex";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::Interval, Method::Zonotope, Method::Polyhedron, Method::Smt, Method::Reluplex})
    if (method_name(m) == s) return m;
  throw std::invalid_argument("unknown method '" + s + "'");
}

inline bool is_abstract(Method m) { return m == Method::Interval || m == Method::Zonotope || m == Method::Polyhedron; }

enum class Outcome { Proven, Unknown, Refuted };

inline std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Proven: return "proven";
    case Outcome::Unknown: return "unknown";
    case Outcome::Refuted: return "refuted";
  }
  return "?";
}

struct Verdict {
  Outcome outcome = Outcome::Unknown;
  Method method = Method::Interval;
  std::string reason;
  std::optional<std::pair<std::size_t, std::size_t>> failing;  // (y, i), 1-based
  Box bounds;                                                    // per output dimension
  double seconds = 0;
  bool pre_inexact = false;    // the precondition was enlarged (L2 ball boxed, strict bounds closed)
  bool delta_relaxed = false;  // strict atoms were solved with a delta margin
  bool sigmoid_approx = false;
  std::optional<std::map<std::string, RationalVec>> counterexample;

  [[nodiscard]] bool proven() const { return outcome == Outcome::Proven; }
};

inline json verdict_json(const Verdict& v) {
  json j{{"verdict", outcome_name(v.outcome)}, {"method", method_name(v.method)}};
  if (!v.reason.empty()) j["reason"] = v.reason;
  if (v.failing) j["failing_pair"] = {v.failing->first, v.failing->second};
  json b = json::array();
  for (const auto& iv : v.bounds) b.push_back({to_string(iv.lo), to_string(iv.hi)});
  j["bounds"] = b;
  j["timing"] = {{"seconds", v.seconds}};
  j["flags"] = {{"delta_relaxed", v.delta_relaxed}, {"pre_inexact", v.pre_inexact}, {"sigmoid_approx", v.sigmoid_approx}};
  if (v.counterexample) {
    json c = json::object();
    for (const auto& [name, val] : *v.counterexample) {
      json a = json::array();
      for (const auto& x : val) a.push_back(to_string(x));
      c[name] = a;
    }
    j["counterexample"] = c;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Abstracting preconditions

using AbstractElement = std::variant<Box, Zonotope, Polyhedron>;

inline Box box_of_ball(const RationalVec& c, const Rational& eps) {
  if (eps < 0) throw std::invalid_argument("negative radius");
  Box b;
  for (const auto& x : c) b.emplace_back(x - eps, x + eps);
  return b;
}

inline AbstractElement abstract_box(const Box& b, Method m) {
  switch (m) {
    case Method::Interval: return b;
    case Method::Zonotope: return zono_from_box(b);
    case Method::Polyhedron: return poly_from_box(b);
    default: throw std::invalid_argument("not an abstract domain: " + method_name(m));
  }
}

/// Exact in every domain.
inline AbstractElement abstract_linf_ball(const RationalVec& c, const Rational& eps, Method m) {
  return abstract_box(box_of_ball(c, eps), m);
}

/// The tightest enclosing box; always inexact.
inline AbstractElement abstract_l2_ball(const RationalVec& c, const Rational& eps, Method m, bool* inexact = nullptr) {
  if (inexact) *inexact = true;
  return abstract_box(box_of_ball(c, eps), m);
}

inline Box abstract_synonyms(const std::vector<RationalVec>& sets) {
  Box b;
  for (const auto& s : sets) {
    if (s.empty()) throw std::invalid_argument("empty synonym set");
    b.emplace_back(*std::min_element(s.begin(), s.end()), *std::max_element(s.begin(), s.end()));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Class checks

inline void check_label(std::size_t dims, std::size_t y) {
  if (y < 1 || y > dims) throw std::out_of_range("label " + std::to_string(y) + " out of range 1.." + std::to_string(dims));
}

/// Proven iff l_y > u_i for every i != y.
inline Verdict check_class(const Box& out, std::size_t y) {
  check_label(out.size(), y);
  Verdict v{Outcome::Proven, Method::Interval};
  v.bounds = out;
  for (std::size_t i = 1; i <= out.size(); ++i)
    if (i != y && !(out[y - 1].lo > out[i - 1].hi)) {
      v.outcome = Outcome::Unknown;
      v.failing = {y, i};
      v.reason = "output " + std::to_string(y) + " does not dominate output " + std::to_string(i);
      return v;
    }
  return v;
}

/// Proven iff the lower bound of dim_y - dim_i is positive for every i != y.
/// `refined` may carry sound per-dimension bounds that sharpen the check.
inline Verdict check_class(const Zonotope& out, std::size_t y, const Box* refined = nullptr) {
  check_label(out.dims.size(), y);
  Verdict v{Outcome::Proven, Method::Zonotope};
  for (std::size_t i = 0; i < out.dims.size(); ++i) v.bounds.push_back(refined ? (*refined)[i] : zono_bounds(out.dims[i]));
  for (std::size_t i = 1; i <= out.dims.size(); ++i) {
    if (i == y) continue;
    Rational lo = zono_bounds(zono_add(out.dims[y - 1], zono_scale(-1, out.dims[i - 1]))).lo;
    if (refined) lo = rmax(lo, (*refined)[y - 1].lo - (*refined)[i - 1].hi);
    if (!(lo > 0)) {
      v.outcome = Outcome::Unknown;
      v.failing = {y, i};
      v.reason = "dim " + std::to_string(y) + " - dim " + std::to_string(i) + " has lower bound " + to_string(lo);
      return v;
    }
  }
  return v;
}

/// Proven iff phi and dim_y <= dim_i is infeasible for every i != y.
inline Verdict check_class(const Polyhedron& out, std::size_t y) {
  check_label(out.dims.size(), y);
  Verdict v{Outcome::Proven, Method::Polyhedron};
  for (std::size_t i = 0; i < out.dims.size(); ++i) v.bounds.push_back(poly_bounds(out, i));
  for (std::size_t i = 1; i <= out.dims.size(); ++i) {
    if (i == y) continue;
    ZonoDim d = zono_add(out.dims[y - 1], zono_scale(-1, out.dims[i - 1]));
    LinConstraint q{generator_expr(d), Rel::Le, -d.c0};
    // phi itself is feasible, so a constant difference decides alone
    bool feasible = q.coeffs.empty() ? d.c0 <= 0 : poly_feasible(out.phi, out.m, q);
    if (feasible) {
      v.outcome = Outcome::Unknown;
      v.failing = {y, i};
      v.reason = "dim " + std::to_string(y) + " <= dim " + std::to_string(i) + " is feasible";
      return v;
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// verify

namespace detail {

/// Box for the network's input variable from the precondition. Atoms over a
/// single scalar become bounds; others are returned for relational domains.
struct InputAbstraction {
  Box box;
  std::vector<LinAtom> relational;
  bool empty = false;
  bool inexact = false;
};

inline InputAbstraction abstract_pre(const Property& p, const VecVar& x) {
  InputAbstraction r;
  std::vector<std::optional<Rational>> lo(x.dim);
  std::vector<std::optional<Rational>> hi(x.dim);
  auto meet = [&](std::size_t i, const Rational& l, const Rational& h) {
    if (!lo[i] || *lo[i] < l) lo[i] = l;
    if (!hi[i] || h < *hi[i]) hi[i] = h;
  };
  auto own = [&](const std::string& name) {
    if (name != x.name) throw VerifyError("precondition constrains '" + name + "', which the network does not read");
  };
  for (const auto& item : p.pre) {
    if (const auto* b = std::get_if<LinfBall>(&item)) {
      own(b->var);
      for (std::size_t i = 0; i < x.dim; ++i) meet(i, b->center[i] - b->eps, b->center[i] + b->eps);
    } else if (const auto* b2 = std::get_if<L2Ball>(&item)) {
      own(b2->var);
      r.inexact = true;
      for (std::size_t i = 0; i < x.dim; ++i) meet(i, b2->center[i] - b2->eps, b2->center[i] + b2->eps);
    } else if (const auto* s = std::get_if<Synonyms>(&item)) {
      own(s->var);
      Box sb = abstract_synonyms(s->sets);
      for (std::size_t i = 0; i < x.dim; ++i) meet(i, sb[i].lo, sb[i].hi);
    } else {
      const auto& a = std::get<LinAtom>(item);
      for (const auto& [s, _] : a.coeffs)
        if (s < x.offset || s >= x.offset + x.dim)
          throw VerifyError("precondition constrains '" + p.scalar_name(s) + "', which the network does not read");
      if (a.cmp == Cmp::Lt) r.inexact = true;
      if (a.coeffs.empty()) {
        bool holds = a.cmp == Cmp::Le ? a.bias <= 0 : a.cmp == Cmp::Lt ? a.bias < 0 : a.bias == 0;
        if (!holds) r.empty = true;
        continue;
      }
      if (a.coeffs.size() > 1) {
        r.relational.push_back(a);
        continue;
      }
      // c x + b cmp 0
      const auto& [sc, c] = *a.coeffs.begin();
      Rational k = -a.bias / c;
      std::size_t i = sc - x.offset;
      if (a.cmp == Cmp::Eq)
        meet(i, k, k);
      else if (c > 0)
        hi[i] = hi[i] ? rmin(*hi[i], k) : k;
      else
        lo[i] = lo[i] ? rmax(*lo[i], k) : k;
    }
  }
  for (std::size_t i = 0; i < x.dim; ++i) {
    if (!lo[i] || !hi[i])
      throw VerifyError("precondition leaves " + p.scalar_name(x.offset + i) + " unbounded");
    if (*hi[i] < *lo[i]) {
      r.empty = true;
      r.box.emplace_back(*lo[i], *lo[i]);
    } else {
      r.box.emplace_back(*lo[i], *hi[i]);
    }
  }
  return r;
}

/// Sound bounds of a linear expression over property scalars, per domain.
struct ScalarView {
  Method method;
  std::map<std::size_t, RInterval> iv;   // scalar -> bounds
  std::map<std::size_t, ZonoDim> expr;   // scalar -> generator expression (zonotope, polyhedron)
  const Polyhedron* poly = nullptr;

  [[nodiscard]] bool knows(std::size_t s) const { return iv.count(s) > 0; }

  [[nodiscard]] RInterval bounds(const LinExpr& e, const Rational& bias) const {
    Rational lo = bias;
    Rational hi = bias;
    for (const auto& [s, c] : e) {
      auto b = iv_scale(c, iv.at(s));
      lo += b.lo;
      hi += b.hi;
    }
    if (method == Method::Interval || e.empty()) return {lo, hi};
    RationalVec coeffs;
    std::vector<ZonoDim> dims;
    for (const auto& [s, c] : e) {
      coeffs.push_back(c);
      dims.push_back(expr.at(s));
    }
    ZonoDim d = zono_affine(coeffs, bias, dims);
    RInterval rel = method == Method::Zonotope ? zono_bounds(d) : poly_bounds(poly->phi, poly->m, d);
    return {rmax(lo, rel.lo), rmin(hi, rel.hi)};
  }
};

inline bool provable_atom(const ScalarView& sv, const LinAtom& a) {
  RInterval b = sv.bounds(a.coeffs, a.bias);
  switch (a.cmp) {
    case Cmp::Le: return b.hi <= 0;
    case Cmp::Lt: return b.hi < 0;
    case Cmp::Eq: return b.lo == 0 && b.hi == 0;
  }
  return false;
}

inline bool provable_class(const ScalarView& sv, const VecVar& r, std::size_t y) {
  check_label(r.dim, y);
  for (std::size_t i = 1; i <= r.dim; ++i) {
    if (i == y) continue;
    LinExpr e{{r.offset + i - 1, Rational(1)}, {r.offset + y - 1, Rational(-1)}};
    if (!provable_atom(sv, LinAtom{e, 0, Cmp::Lt})) return false;
  }
  return true;
}

inline bool mentions_known(const ScalarView& sv, const LinExpr& e) {
  for (const auto& [s, _] : e)
    if (!sv.knows(s)) return false;
  return true;
}

/// Sound and incomplete: true only if the formula holds on the whole abstract output.
inline bool provable(const Property& p, const ScalarView& sv, const PostFormula& f) {
  switch (f.kind()) {
    case PostFormula::Kind::True: return true;
    case PostFormula::Kind::False: return false;
    case PostFormula::Kind::And: return provable(p, sv, f.lhs()) && provable(p, sv, f.rhs());
    case PostFormula::Kind::Or: return provable(p, sv, f.lhs()) || provable(p, sv, f.rhs());
    case PostFormula::Kind::Not: {
      const PostFormula& c = f.child();
      if (c.is_atom()) {
        if (const auto* la = std::get_if<LinAtom>(&c.atom())) {
          if (!mentions_known(sv, la->coeffs)) throw VerifyError("postcondition mentions a variable outside the network call");
          LraFormula n = negate_atom(*la);
          return provable(p, sv, map_atoms(n, [](const LinAtom& a) { return PostFormula::atom(a); }));
        }
        return false;  // the negation of a class statement is not checked
      }
      return provable(p, sv, to_nnf<PostAtom>(f));
    }
    case PostFormula::Kind::Atom: break;
  }
  const PostAtom& a = f.atom();
  if (const auto* la = std::get_if<LinAtom>(&a)) {
    if (!mentions_known(sv, la->coeffs)) throw VerifyError("postcondition mentions a variable outside the network call");
    return provable_atom(sv, *la);
  }
  if (const auto* ce = std::get_if<ClassEquals>(&a)) {
    const VecVar& r = p.var(ce->of);
    for (std::size_t i = 0; i < r.dim; ++i)
      if (!sv.knows(r.offset + i)) throw VerifyError("postcondition mentions a variable outside the network call");
    return provable_class(sv, r, ce->label);
  }
  const auto& sc = std::get<SameClass>(a);
  const VecVar& r1 = p.var(sc.a);
  const VecVar& r2 = p.var(sc.b);
  if (r1.dim != r2.dim) return false;
  for (std::size_t y = 1; y <= r1.dim; ++y)
    if (provable_class(sv, r1, y) && provable_class(sv, r2, y)) return true;
  return false;
}

}  // namespace detail

/// Abstraction-based verification of a property with one network call. Never returns Refuted.
inline Verdict verify(const Property& p, Method method) {
  if (!is_abstract(method)) throw std::invalid_argument("verify needs an abstract domain, got " + method_name(method));
  auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  v.method = method;
  auto finish = [&](Verdict& r) -> Verdict {
    r.method = method;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  if (p.assign.size() != 1) throw VerifyError("abstract verification needs exactly one network call");
  const Assignment& a = p.assign[0];
  const Graph& g = *a.net;
  const VecVar& out = p.var(a.out);
  for (const auto& nd : g.nodes())
    if (std::holds_alternative<fn::Sigmoid>(nd.fn)) v.sigmoid_approx = true;

  detail::InputAbstraction in;
  const VecVar* x = nullptr;
  if (const auto* name = std::get_if<std::string>(&a.in)) {
    x = &p.var(*name);
    in = detail::abstract_pre(p, *x);
  } else {
    for (const auto& c : std::get<RationalVec>(a.in)) in.box.emplace_back(c, c);
  }
  v.pre_inexact = in.inexact;
  if (in.empty) {
    v.outcome = Outcome::Proven;
    v.reason = "precondition is unsatisfiable";
    return finish(v);
  }

  detail::ScalarView sv{method, {}, {}, nullptr};
  Polyhedron poly_out;
  Zonotope zono_out;
  if (method == Method::Interval) {
    Box ob = iv_analyze(g, in.box);
    v.bounds = ob;
    if (x)
      for (std::size_t i = 0; i < x->dim; ++i) sv.iv[x->offset + i] = in.box[i];
    for (std::size_t i = 0; i < out.dim; ++i) sv.iv[out.offset + i] = ob[i];
  } else if (method == Method::Zonotope) {
    Zonotope zin = zono_from_box(in.box);
    ZonoAnalysis za = zono_analyze_full(g, zin);
    v.bounds = za.output_bounds(g);
    zono_out = za.out;
    if (x)
      for (std::size_t i = 0; i < x->dim; ++i) {
        sv.iv[x->offset + i] = in.box[i];
        sv.expr[x->offset + i] = zin.dims[i];
      }
    for (std::size_t i = 0; i < out.dim; ++i) {
      sv.iv[out.offset + i] = v.bounds[i];
      sv.expr[out.offset + i] = za.out.dims[i];
    }
  } else {
    Polyhedron pin = poly_from_box(in.box);
    // relational precondition atoms over the input generators, closed
    for (const auto& at : in.relational) {
      LinExpr e;
      Rational rhs = -at.bias;
      for (const auto& [s, c] : at.coeffs) {
        const ZonoDim& d = pin.dims[s - x->offset];
        rhs -= c * d.c0;
        add_scaled(e, generator_expr(d), c);
      }
      e = clean(e);
      if (e.empty()) {
        bool holds = at.cmp == Cmp::Eq ? rhs == 0 : 0 <= rhs;
        if (!holds) in.empty = true;
        continue;
      }
      pin.phi.push_back({e, at.cmp == Cmp::Eq ? Rel::Eq : Rel::Le, rhs});
    }
    Tableau feas = poly_tableau(pin.phi, pin.m);
    if (in.empty || simplex_solve(feas) == SimplexStatus::Unsat) {
      v.outcome = Outcome::Proven;
      v.reason = "precondition is unsatisfiable";
      return finish(v);
    }
    PolyAnalysis pa = poly_analyze_full(g, pin);
    poly_out = pa.out;
    v.bounds = pa.output_bounds(g);
    sv.poly = &poly_out;
    if (x)
      for (std::size_t i = 0; i < x->dim; ++i) {
        sv.iv[x->offset + i] = in.box[i];
        sv.expr[x->offset + i] = pin.dims[i];
      }
    for (std::size_t i = 0; i < out.dim; ++i) {
      sv.iv[out.offset + i] = v.bounds[i];
      sv.expr[out.offset + i] = poly_out.dims[i];
    }
  }

  // a single class statement reports the failing pair
  if (p.post.is_atom())
    if (const auto* ce = std::get_if<ClassEquals>(&p.post.atom()); ce && ce->of == out.name) {
      Verdict c = method == Method::Interval   ? check_class(v.bounds, ce->label)
                  : method == Method::Zonotope ? check_class(zono_out, ce->label, &v.bounds)
                                               : check_class(poly_out, ce->label);
      c.bounds = v.bounds;
      c.pre_inexact = v.pre_inexact;
      c.sigmoid_approx = v.sigmoid_approx;
      return finish(c);
    }
  if (detail::provable(p, sv, p.post)) {
    v.outcome = Outcome::Proven;
  } else {
    v.outcome = Outcome::Unknown;
    v.reason = "postcondition not implied by the abstract output";
  }
  return finish(v);
}

/// Replaces the radius of the property's single l-infinity ball.
inline Property with_radius(const Property& p, const Rational& eps) {
  Property q = p;
  std::size_t n = 0;
  for (auto& item : q.pre)
    if (auto* b = std::get_if<LinfBall>(&item)) {
      b->eps = eps;
      ++n;
    }
  if (n != 1) throw VerifyError("radius sweep needs exactly one l-infinity ball");
  return q;
}

struct SweepResult {
  Rational eps = 0;  // largest radius proven (0 if none)
  std::size_t calls = 0;
};

/// Largest radius the method proves, by doubling from `start` then bisection.
inline SweepResult eps_sweep(const Property& p, Method method, const Rational& start = Rational(1, 100),
                             std::size_t bisections = 12, const Rational& cap = 1024) {
  SweepResult r;
  auto proves = [&](const Rational& e) {
    ++r.calls;
    return verify(with_radius(p, e), method).proven();
  };
  Rational lo = 0;
  Rational hi = start;
  while (proves(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > cap) {
      r.eps = lo;
      return r;
    }
  }
  for (std::size_t k = 0; k < bisections; ++k) {
    Rational mid = (lo + hi) / 2;
    if (proves(mid))
      lo = mid;
    else
      hi = mid;
  }
  r.eps = lo;
  return r;
}

}  // namespace nnv
