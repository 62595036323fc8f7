#pragma once

// Polyhedron domain: generator expressions plus linear constraints over the generators.

#include "nnv/graph.hpp"
#include "nnv/interval.hpp"
#include "nnv/simplex.hpp"
#include "nnv/zonotope.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace nnv {

class PolyhedronError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimensions are expressions over generators eps_0 .. eps_{m-1}; phi is a
/// list of constraints over generator ids.
struct Polyhedron {
  std::vector<ZonoDim> dims;
  std::vector<LinConstraint> phi;
  std::size_t m = 0;

  std::size_t fresh_generator() { return m++; }
};

inline LinExpr generator_expr(const ZonoDim& d) {
  LinExpr e;
  for (std::size_t i = 0; i < d.gens.size(); ++i)
    if (d.gens[i] != 0) e[i] = d.gens[i];
  return e;
}

/// Simplex tableau over the generators; single-generator constraints become bounds.
inline Tableau poly_tableau(const std::vector<LinConstraint>& phi, std::size_t m) {
  Tableau t;
  for (std::size_t i = 0; i < m; ++i) t.add_var("e" + std::to_string(i + 1));
  for (const auto& c : phi) {
    for (const auto& [v, _] : c.coeffs)
      if (v >= m) throw PolyhedronError("constraint mentions unknown generator");
    if (c.coeffs.size() == 1) {
      const auto& [v, a] = *c.coeffs.begin();
      Rational b = c.rhs / a;
      bool flip = a < 0;
      if (c.rel == Rel::Eq || (c.rel == Rel::Le) != flip) t.tighten_upper(v, b);
      if (c.rel == Rel::Eq || (c.rel == Rel::Ge) != flip) t.tighten_lower(v, b);
      continue;
    }
    std::optional<Rational> lo;
    std::optional<Rational> hi;
    if (c.rel != Rel::Le) lo = c.rhs;
    if (c.rel != Rel::Ge) hi = c.rhs;
    t.add_row(c.coeffs, "", lo, hi);
  }
  return t;
}

inline RInterval poly_bounds(const std::vector<LinConstraint>& phi, std::size_t m, const ZonoDim& d) {
  LinExpr e = generator_expr(d);
  if (e.empty()) {
    Tableau t = poly_tableau(phi, m);
    if (simplex_solve(t) == SimplexStatus::Unsat) throw PolyhedronError("empty polyhedron");
    return {d.c0, d.c0};
  }
  Tableau t = poly_tableau(phi, m);
  LpResult hi = maximize(t, e);
  if (hi.status == LpStatus::Infeasible) throw PolyhedronError("empty polyhedron");
  if (hi.status == LpStatus::Unbounded) throw PolyhedronError("unbounded generator");
  LpResult lo = minimize(t, e);
  if (lo.status == LpStatus::Unbounded) throw PolyhedronError("unbounded generator");
  return {d.c0 + lo.value, d.c0 + hi.value};
}

inline RInterval poly_bounds(const Polyhedron& p, std::size_t j) { return poly_bounds(p.phi, p.m, p.dims.at(j)); }

/// Is phi and (e rel rhs) feasible?
inline bool poly_feasible(const std::vector<LinConstraint>& phi, std::size_t m, const LinConstraint& extra) {
  std::vector<LinConstraint> all = phi;
  all.push_back(extra);
  Tableau t = poly_tableau(all, m);
  return simplex_solve(t) == SimplexStatus::Sat;
}

inline ZonoDim poly_affine(std::span<const Rational> coeffs, const Rational& bias, std::span<const ZonoDim> dims) {
  return zono_affine(coeffs, bias, dims);
}

/// Triangle relaxation on a fresh generator. `b` are the bounds of `d` under phi.
inline ZonoDim poly_relu(const ZonoDim& d, const RInterval& b, std::vector<LinConstraint>& phi, std::size_t& m) {
  if (b.lo >= 0) return d;
  if (b.hi <= 0) return ZonoDim{Rational(0), {}};
  std::size_t g = m++;
  ZonoDim out{Rational(0), RationalVec(g + 1)};
  out.gens[g] = 1;
  LinExpr de = generator_expr(d);
  Rational k = b.hi / (b.hi - b.lo);
  // e <= k (d - l)
  LinExpr upper{{g, Rational(1)}};
  add_scaled(upper, de, -k);
  phi.push_back({upper, Rel::Le, k * (d.c0 - b.lo)});
  // e >= 0
  phi.push_back({{{g, Rational(1)}}, Rel::Ge, Rational(0)});
  // e >= d
  LinExpr lower{{g, Rational(1)}};
  add_scaled(lower, de, -1);
  phi.push_back({lower, Rel::Ge, d.c0});
  // implied by the triangle, stated so every generator has an explicit upper bound
  phi.push_back({{{g, Rational(1)}}, Rel::Le, b.hi});
  return out;
}

inline ZonoDim poly_relu(const ZonoDim& d, Polyhedron& p) {
  return poly_relu(d, poly_bounds(p.phi, p.m, d), p.phi, p.m);
}

/// Fresh generator e constrained to the box [lo, hi] and, when lambda != 0,
/// to the band lo_b <= e - lambda * d <= hi_b.
inline ZonoDim poly_band(const ZonoDim& d, const Rational& lambda, const Rational& lo_b, const Rational& hi_b,
                         const RInterval& box, std::vector<LinConstraint>& phi, std::size_t& m) {
  std::size_t g = m++;
  ZonoDim out{Rational(0), RationalVec(g + 1)};
  out.gens[g] = 1;
  phi.push_back({{{g, Rational(1)}}, Rel::Ge, box.lo});
  phi.push_back({{{g, Rational(1)}}, Rel::Le, box.hi});
  if (lambda != 0) {
    LinExpr e{{g, Rational(1)}};
    add_scaled(e, generator_expr(d), -lambda);
    phi.push_back({e, Rel::Ge, lo_b + lambda * d.c0});
    phi.push_back({e, Rel::Le, hi_b + lambda * d.c0});
  }
  return out;
}

/// Sigmoid: the zonotope's slope band together with the monotone box [sigma(l), sigma(u)].
inline ZonoDim poly_sigmoid(const ZonoDim& d, const RInterval& b, std::vector<LinConstraint>& phi, std::size_t& m) {
  RInterval box = iv_sigmoid(b);
  if (b.lo == b.hi) return poly_band(d, 0, 0, 0, box, phi, m);
  // reuse the zonotope band: out = lambda * d + c + h * e'
  std::size_t scratch = 0;
  ZonoDim z = zono_sigmoid(ZonoDim{Rational(0), {}}, scratch, b);
  // for d == 0 the band is centered at z.c0 with half width z.coeff(0)
  Rational half = z.coeff(0);
  Rational center = z.c0;
  // recover lambda from the transformer on a unit probe
  std::size_t scratch2 = 0;
  ZonoDim probe = zono_sigmoid(ZonoDim{Rational(1), {}}, scratch2, b);
  Rational lambda = probe.c0 - center;
  return poly_band(d, lambda, center - half, center + half, box, phi, m);
}

inline ZonoDim poly_square(const ZonoDim&, const RInterval& b, std::vector<LinConstraint>& phi, std::size_t& m) {
  return poly_band(ZonoDim{}, 0, 0, 0, iv_square(b), phi, m);
}

inline Polyhedron poly_from_box(const Box& box) {
  Polyhedron p;
  Zonotope z = zono_from_box(box);
  p.dims = z.dims;
  p.m = z.m;
  for (std::size_t i = 0; i < p.m; ++i) {
    p.phi.push_back({{{i, Rational(1)}}, Rel::Ge, Rational(-1)});
    p.phi.push_back({{{i, Rational(1)}}, Rel::Le, Rational(1)});
  }
  return p;
}

struct PolyAnalysis {
  Polyhedron out;  // output dimensions, accumulated constraints
  std::vector<ZonoDim> nodes;
  std::vector<std::optional<RInterval>> bounds;  // LP bounds where they were computed
  [[nodiscard]] Box output_bounds(const Graph& g) const {
    Box b;
    for (NodeId o : g.outputs()) b.push_back(*bounds[o]);
    return b;
  }
};

/// Runs the polyhedron transformers in topological order. Constraints from
/// all nodes accumulate in one set, a superset of what each node's inputs
/// contribute, so the result is the same or tighter.
inline PolyAnalysis poly_analyze_full(const Graph& g, const Polyhedron& input) {
  auto ins = g.inputs();
  if (input.dims.size() != ins.size())
    throw GraphError("polyhedron has " + std::to_string(input.dims.size()) + " dimensions, network has " +
                     std::to_string(ins.size()) + " inputs");
  PolyAnalysis r;
  r.out.phi = input.phi;
  r.out.m = input.m;
  auto& phi = r.out.phi;
  auto& m = r.out.m;
  r.nodes.resize(g.size());
  r.bounds.resize(g.size());
  for (std::size_t i = 0; i < ins.size(); ++i) r.nodes[ins[i]] = input.dims[i];
  auto bounds_of = [&](NodeId v) -> const RInterval& {
    if (!r.bounds[v]) r.bounds[v] = poly_bounds(phi, m, r.nodes[v]);
    return *r.bounds[v];
  };
  for (NodeId v : topo_order(g)) {
    const Node& nd = g.node(v);
    if (std::holds_alternative<fn::Input>(nd.fn)) continue;
    std::vector<ZonoDim> args;
    for (NodeId u : nd.inputs) args.push_back(r.nodes[u]);
    ZonoDim out;
    if (const auto* a = std::get_if<fn::Affine>(&nd.fn)) {
      out = poly_affine(a->coeffs, a->bias, args);
    } else if (std::holds_alternative<fn::Relu>(nd.fn)) {
      out = poly_relu(args[0], bounds_of(nd.inputs[0]), phi, m);
    } else if (std::holds_alternative<fn::Sigmoid>(nd.fn)) {
      out = poly_sigmoid(args[0], bounds_of(nd.inputs[0]), phi, m);
    } else if (std::holds_alternative<fn::Square>(nd.fn)) {
      out = poly_square(args[0], bounds_of(nd.inputs[0]), phi, m);
    } else {
      bool is_max = std::holds_alternative<fn::Max>(nd.fn);
      out = args[0];
      for (std::size_t k = 1; k < args.size(); ++k) {
        ZonoDim diff = is_max ? zono_add(args[k], zono_scale(-1, out)) : zono_add(out, zono_scale(-1, args[k]));
        ZonoDim rl = poly_relu(diff, poly_bounds(phi, m, diff), phi, m);
        out = is_max ? zono_add(out, rl) : zono_add(out, zono_scale(-1, rl));
      }
      // the triangles can overshoot the arguments' own bounds
      std::vector<RInterval> arg_bounds;
      for (NodeId u : nd.inputs) arg_bounds.push_back(bounds_of(u));
      RInterval box = is_max ? iv_max<Rational>(arg_bounds) : iv_min<Rational>(arg_bounds);
      LinExpr e = generator_expr(out);
      if (!e.empty()) {
        phi.push_back({e, Rel::Le, box.hi - out.c0});
        phi.push_back({e, Rel::Ge, box.lo - out.c0});
      }
    }
    r.nodes[v] = std::move(out);
  }
  for (NodeId o : g.outputs()) {
    bounds_of(o);
    r.out.dims.push_back(r.nodes[o]);
  }
  // bounds computed before later constraints were added remain sound; refresh
  // the outputs so they reflect the final constraint set
  for (NodeId o : g.outputs()) r.bounds[o] = poly_bounds(phi, m, r.nodes[o]);
  return r;
}

inline Polyhedron poly_analyze(const Graph& g, const Polyhedron& input) { return poly_analyze_full(g, input).out; }

}  // namespace nnv
