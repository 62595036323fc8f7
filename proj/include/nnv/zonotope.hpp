#pragma once

// Zonotope domain: each dimension is c_0 + sum_i c_i * eps_i with eps_i in [-1, 1].

#include "nnv/graph.hpp"
#include "nnv/interval.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace nnv {

/// Center plus generator coefficients. Coefficients past the end are zero,
/// so dimensions created before a generator existed need no rewrite.
struct ZonoDim {
  Rational c0;
  RationalVec gens;

  ZonoDim() = default;
  ZonoDim(Rational center, RationalVec g) : c0(std::move(center)), gens(std::move(g)) {}
  /// From the compact form <c_0, c_1, ..., c_m>.
  ZonoDim(std::initializer_list<Rational> compact) {
    auto it = compact.begin();
    if (it != compact.end()) c0 = *it++;
    gens.assign(it, compact.end());
  }

  [[nodiscard]] Rational coeff(std::size_t i) const { return i < gens.size() ? gens[i] : Rational(0); }
  [[nodiscard]] std::size_t length() const { return gens.size(); }

  /// Value at a generator instantiation.
  [[nodiscard]] Rational at(std::span<const Rational> eps) const {
    Rational v = c0;
    for (std::size_t i = 0; i < gens.size(); ++i)
      if (gens[i] != 0) v += gens[i] * eps[i];
    return v;
  }

  /// Equality up to trailing zero coefficients.
  friend bool operator==(const ZonoDim& a, const ZonoDim& b) {
    if (a.c0 != b.c0) return false;
    std::size_t n = std::max(a.gens.size(), b.gens.size());
    for (std::size_t i = 0; i < n; ++i)
      if (a.coeff(i) != b.coeff(i)) return false;
    return true;
  }
};

inline std::ostream& operator<<(std::ostream& os, const ZonoDim& d) {
  os << '<' << to_string(d.c0);
  for (const auto& g : d.gens) os << ", " << to_string(g);
  return os << '>';
}

struct Zonotope {
  std::vector<ZonoDim> dims;
  std::size_t m = 0;  // generator count

  std::size_t fresh_generator() { return m++; }
};

inline RInterval zono_bounds(const ZonoDim& d) {
  Rational r = 0;
  for (const auto& g : d.gens) r += abs(g);
  return {d.c0 - r, d.c0 + r};
}

inline ZonoDim zono_add(const ZonoDim& a, const ZonoDim& b) {
  ZonoDim r{a.c0 + b.c0, {}};
  r.gens.resize(std::max(a.length(), b.length()));
  for (std::size_t i = 0; i < r.gens.size(); ++i) r.gens[i] = a.coeff(i) + b.coeff(i);
  return r;
}

inline ZonoDim zono_scale(const Rational& k, const ZonoDim& d) {
  ZonoDim r{k * d.c0, d.gens};
  for (auto& g : r.gens) g *= k;
  return r;
}

inline ZonoDim zono_affine(std::span<const Rational> coeffs, const Rational& bias, std::span<const ZonoDim> dims) {
  if (coeffs.size() != dims.size()) throw std::invalid_argument("affine arity mismatch");
  std::size_t m = 0;
  for (const auto& d : dims) m = std::max(m, d.length());
  ZonoDim r{bias, RationalVec(m)};
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (coeffs[j] == 0) continue;
    r.c0 += coeffs[j] * dims[j].c0;
    for (std::size_t i = 0; i < dims[j].length(); ++i) r.gens[i] += coeffs[j] * dims[j].gens[i];
  }
  return r;
}

/// Output = lambda * d shifted by eta, plus eta on a fresh generator `g`.
inline ZonoDim zono_band(const ZonoDim& d, const Rational& lambda, const Rational& lo, const Rational& hi,
                         std::size_t g) {
  ZonoDim r = zono_scale(lambda, d);
  Rational half = (hi - lo) / 2;
  r.c0 += lo + half;
  if (half != 0) {
    if (r.gens.size() <= g) r.gens.resize(g + 1);
    r.gens[g] = half;
  }
  return r;
}

/// ReLU transformer. `bounds` may carry tighter sound bounds on the input
/// than the zonotope's own; they are used for the case split and lambda.
inline ZonoDim zono_relu(const ZonoDim& d, std::size_t& m, std::optional<RInterval> bounds = std::nullopt) {
  RInterval b = bounds ? *bounds : zono_bounds(d);
  if (b.lo >= 0) return d;
  if (b.hi <= 0) return ZonoDim{Rational(0), {}};
  Rational lambda = b.hi / (b.hi - b.lo);
  Rational eta = b.hi * (1 - lambda) / 2;
  return zono_band(d, lambda, Rational(0), 2 * eta, m++);
}

/// Sigmoid transformer: the line with slope min(sigma'(l), sigma'(u)) and the
/// tightest band around it.
inline ZonoDim zono_sigmoid(const ZonoDim& d, std::size_t& m, std::optional<RInterval> bounds = std::nullopt) {
  RInterval b = bounds ? *bounds : zono_bounds(d);
  auto sl = sigmoid_enclosure(b.lo);
  auto su = sigmoid_enclosure(b.hi);
  if (b.lo == b.hi) return zono_band(d, Rational(0), sl.lo, su.hi, m++);
  auto deriv = [](double x) {
    double s = sigmoid(x);
    return s * (1 - s);
  };
  double slope = std::min(deriv(to_double(b.lo)), deriv(to_double(b.hi)));
  // shrink so the slope never exceeds the true minimum derivative
  Rational lambda = from_double(slope) * Rational(1048575, 1048576);
  Rational slack(1, mpz_class(1) << 50);
  Rational lo = sl.lo - lambda * b.lo - slack;
  Rational hi = su.hi - lambda * b.hi + slack;
  return zono_band(d, lambda, lo, hi, m++);
}

/// Square through its interval image on a fresh generator.
inline ZonoDim zono_square(const ZonoDim& d, std::size_t& m, std::optional<RInterval> bounds = std::nullopt) {
  RInterval b = iv_square(bounds ? *bounds : zono_bounds(d));
  return zono_band(d, Rational(0), b.lo, b.hi, m++);
}

inline RInterval intersect(const RInterval& a, const RInterval& b) {
  Rational lo = rmax(a.lo, b.lo);
  Rational hi = rmin(a.hi, b.hi);
  if (hi < lo) throw std::logic_error("empty intersection of sound bounds");
  return {lo, hi};
}

/// Box input: one generator per dimension.
inline Zonotope zono_from_box(const Box& box) {
  Zonotope z;
  for (std::size_t i = 0; i < box.size(); ++i) {
    ZonoDim d{(box[i].lo + box[i].hi) / 2, RationalVec(box.size())};
    d.gens[i] = (box[i].hi - box[i].lo) / 2;
    z.dims.push_back(std::move(d));
  }
  z.m = box.size();
  return z;
}

struct ZonoAnalysis {
  Zonotope out;                    // output dimensions over the final generators
  std::vector<ZonoDim> nodes;      // every node
  std::vector<RInterval> bounds;   // per node, zonotope bounds met with interval bounds
  [[nodiscard]] Box output_bounds(const Graph& g) const {
    Box b;
    for (NodeId o : g.outputs()) b.push_back(bounds[o]);
    return b;
  }
};

/// Runs the zonotope transformers in topological order. Non-linear nodes use
/// the zonotope bounds met with a companion interval analysis of the input's
/// bounding box; min and max are rewritten through relu.
inline ZonoAnalysis zono_analyze_full(const Graph& g, const Zonotope& input) {
  auto ins = g.inputs();
  if (input.dims.size() != ins.size())
    throw GraphError("zonotope has " + std::to_string(input.dims.size()) + " dimensions, network has " +
                     std::to_string(ins.size()) + " inputs");
  Box in_box;
  for (const auto& d : input.dims) in_box.push_back(zono_bounds(d));
  Box iv = iv_analyze_all(g, in_box);

  ZonoAnalysis r;
  r.nodes.resize(g.size());
  r.bounds.resize(g.size());
  std::size_t m = input.m;
  for (std::size_t i = 0; i < ins.size(); ++i) {
    r.nodes[ins[i]] = input.dims[i];
    r.bounds[ins[i]] = in_box[i];
  }
  auto relu_of = [&](const ZonoDim& d, const RInterval& companion) {
    return zono_relu(d, m, intersect(zono_bounds(d), companion));
  };
  for (NodeId v : topo_order(g)) {
    const Node& nd = g.node(v);
    if (std::holds_alternative<fn::Input>(nd.fn)) continue;
    std::vector<ZonoDim> args;
    for (NodeId u : nd.inputs) args.push_back(r.nodes[u]);
    auto refined = [&](std::size_t k) { return intersect(zono_bounds(args[k]), r.bounds[nd.inputs[k]]); };
    ZonoDim out;
    if (const auto* a = std::get_if<fn::Affine>(&nd.fn)) {
      out = zono_affine(a->coeffs, a->bias, args);
    } else if (std::holds_alternative<fn::Relu>(nd.fn)) {
      out = zono_relu(args[0], m, refined(0));
    } else if (std::holds_alternative<fn::Sigmoid>(nd.fn)) {
      out = zono_sigmoid(args[0], m, refined(0));
    } else if (std::holds_alternative<fn::Square>(nd.fn)) {
      out = zono_square(args[0], m, refined(0));
    } else {
      bool is_max = std::holds_alternative<fn::Max>(nd.fn);
      // max(a, b) = a + relu(b - a), min(a, b) = a - relu(a - b)
      out = args[0];
      RInterval acc = refined(0);
      for (std::size_t k = 1; k < args.size(); ++k) {
        RInterval bk = refined(k);
        ZonoDim diff = is_max ? zono_add(args[k], zono_scale(-1, out)) : zono_add(out, zono_scale(-1, args[k]));
        RInterval diff_iv = is_max ? RInterval{bk.lo - acc.hi, bk.hi - acc.lo} : RInterval{acc.lo - bk.hi, acc.hi - bk.lo};
        ZonoDim rl = relu_of(diff, diff_iv);
        out = is_max ? zono_add(out, rl) : zono_add(out, zono_scale(-1, rl));
        acc = is_max ? iv_max<Rational>(std::vector<RInterval>{acc, bk}) : iv_min<Rational>(std::vector<RInterval>{acc, bk});
      }
    }
    r.nodes[v] = std::move(out);
    r.bounds[v] = intersect(zono_bounds(r.nodes[v]), iv[v]);
  }
  r.out.m = m;
  for (NodeId o : g.outputs()) r.out.dims.push_back(r.nodes[o]);
  return r;
}

inline Zonotope zono_analyze(const Graph& g, const Zonotope& input) { return zono_analyze_full(g, input).out; }

}  // namespace nnv
