#pragma once

// Interval domain.

#include "nnv/graph.hpp"

#include <algorithm>
#include <initializer_list>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace nnv {

template <class T>
struct Interval {
  T lo;
  T hi;

  Interval() : lo(0), hi(0) {}
  Interval(T l, T h) : lo(std::move(l)), hi(std::move(h)) {
    if (hi < lo) throw std::invalid_argument("interval with lo > hi");
  }
  static Interval point(const T& x) { return {x, x}; }

  [[nodiscard]] bool contains(const T& x) const { return !(x < lo) && !(hi < x); }
  [[nodiscard]] bool subset_of(const Interval& o) const { return !(lo < o.lo) && !(o.hi < hi); }
  [[nodiscard]] T width() const { return hi - lo; }
  friend bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }
};

template <class T>
std::ostream& operator<<(std::ostream& os, const Interval<T>& a) {
  return os << '[' << a.lo << ", " << a.hi << ']';
}

using RInterval = Interval<Rational>;
using Box = std::vector<RInterval>;

inline std::ostream& operator<<(std::ostream& os, const RInterval& a) {
  return os << '[' << to_string(a.lo) << ", " << to_string(a.hi) << ']';
}

template <class T>
Interval<T> iv_add(const Interval<T>& a, const Interval<T>& b) {
  return {a.lo + b.lo, a.hi + b.hi};
}

template <class T>
Interval<T> iv_mul(const Interval<T>& a, const Interval<T>& b) {
  T p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

template <class T>
Interval<T> iv_scale(const T& c, const Interval<T>& a) {
  return c < 0 ? Interval<T>{c * a.hi, c * a.lo} : Interval<T>{c * a.lo, c * a.hi};
}

template <class T>
Interval<T> iv_affine(std::span<const T> coeffs, const T& bias, std::span<const Interval<T>> args) {
  if (coeffs.size() != args.size()) throw std::invalid_argument("affine arity mismatch");
  T lo = bias;
  T hi = bias;
  for (std::size_t i = 0; i < args.size(); ++i) {
    auto s = iv_scale(coeffs[i], args[i]);
    lo += s.lo;
    hi += s.hi;
  }
  return {lo, hi};
}

/// [f(l), f(u)] for a monotonically increasing f.
template <class T, class F>
Interval<T> iv_monotone(F&& f, const Interval<T>& a) {
  return {f(a.lo), f(a.hi)};
}

template <class T>
Interval<T> iv_relu(const Interval<T>& a) {
  return iv_monotone([](const T& x) { return x > 0 ? x : T(0); }, a);
}

/// Sigmoid with an outward-rounded rational enclosure at both ends.
inline RInterval iv_sigmoid(const RInterval& a) {
  return {sigmoid_enclosure(a.lo).lo, sigmoid_enclosure(a.hi).hi};
}

template <class T>
Interval<T> iv_square(const Interval<T>& a) {
  T l2 = a.lo * a.lo;
  T u2 = a.hi * a.hi;
  T big = l2 < u2 ? u2 : l2;
  if (!(a.lo > 0) && !(a.hi < 0)) return {T(0), big};
  return {l2 < u2 ? l2 : u2, big};
}

template <class T>
Interval<T> iv_max(std::span<const Interval<T>> args) {
  Interval<T> r = args[0];
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (r.lo < args[i].lo) r.lo = args[i].lo;
    if (r.hi < args[i].hi) r.hi = args[i].hi;
  }
  return r;
}

template <class T>
Interval<T> iv_min(std::span<const Interval<T>> args) {
  Interval<T> r = args[0];
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i].lo < r.lo) r.lo = args[i].lo;
    if (args[i].hi < r.hi) r.hi = args[i].hi;
  }
  return r;
}

inline RInterval iv_apply(const NodeFn& f, std::span<const RInterval> args) {
  return std::visit(
      [&](const auto& v) -> RInterval {
        using F = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<F, fn::Input>) {
          throw GraphError("input nodes have no transformer");
        } else if constexpr (std::is_same_v<F, fn::Affine>) {
          return iv_affine<Rational>(v.coeffs, v.bias, args);
        } else if constexpr (std::is_same_v<F, fn::Relu>) {
          return iv_relu(args[0]);
        } else if constexpr (std::is_same_v<F, fn::Sigmoid>) {
          return iv_sigmoid(args[0]);
        } else if constexpr (std::is_same_v<F, fn::Square>) {
          return iv_square(args[0]);
        } else if constexpr (std::is_same_v<F, fn::Min>) {
          return iv_min(args);
        } else {
          return iv_max(args);
        }
      },
      f);
}

/// out^a for every node.
inline Box iv_analyze_all(const Graph& g, const Box& input) {
  auto ins = g.inputs();
  if (input.size() != ins.size())
    throw GraphError("box has " + std::to_string(input.size()) + " dimensions, network has " +
                     std::to_string(ins.size()) + " inputs");
  Box out(g.size());
  for (std::size_t i = 0; i < ins.size(); ++i) out[ins[i]] = input[i];
  Box args;
  for (NodeId v : topo_order(g)) {
    const Node& nd = g.node(v);
    if (std::holds_alternative<fn::Input>(nd.fn)) continue;
    args.clear();
    for (NodeId u : nd.inputs) args.push_back(out[u]);
    out[v] = iv_apply(nd.fn, args);
  }
  return out;
}

inline Box iv_analyze(const Graph& g, const Box& input) {
  Box all = iv_analyze_all(g, input);
  Box r;
  for (NodeId o : g.outputs()) r.push_back(all[o]);
  return r;
}

inline bool box_contains(const Box& b, std::span<const Rational> x) {
  if (b.size() != x.size()) return false;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!b[i].contains(x[i])) return false;
  return true;
}

inline bool box_subset(const Box& a, const Box& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].subset_of(b[i])) return false;
  return true;
}

}  // namespace nnv
