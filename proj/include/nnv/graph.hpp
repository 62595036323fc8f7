#pragma once

// Neural networks as data-flow DAGs with exact evaluation.

#include "nnv/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace nnv {

using NodeId = std::size_t;

namespace fn {
struct Input {
  bool operator==(const Input&) const = default;
};
struct Affine {
  RationalVec coeffs;
  Rational bias;
  bool operator==(const Affine&) const = default;
};
struct Relu {
  bool operator==(const Relu&) const = default;
};
struct Sigmoid {
  bool operator==(const Sigmoid&) const = default;
};
struct Square {
  bool operator==(const Square&) const = default;
};
struct Min {
  bool operator==(const Min&) const = default;
};
struct Max {
  bool operator==(const Max&) const = default;
};
}  // namespace fn

using NodeFn = std::variant<fn::Input, fn::Affine, fn::Relu, fn::Sigmoid, fn::Square, fn::Min, fn::Max>;

inline std::string op_name(const NodeFn& f) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, fn::Input>) return "input";
        if constexpr (std::is_same_v<T, fn::Affine>) return "affine";
        if constexpr (std::is_same_v<T, fn::Relu>) return "relu";
        if constexpr (std::is_same_v<T, fn::Sigmoid>) return "sigmoid";
        if constexpr (std::is_same_v<T, fn::Square>) return "square";
        if constexpr (std::is_same_v<T, fn::Min>) return "min";
        if constexpr (std::is_same_v<T, fn::Max>) return "max";
      },
      f);
}

inline bool is_piecewise_linear(const NodeFn& f) {
  return !std::holds_alternative<fn::Sigmoid>(f) && !std::holds_alternative<fn::Square>(f);
}

struct Node {
  NodeFn fn;
  std::vector<NodeId> inputs;  // incoming edges in slot order
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A directed acyclic data-flow graph.
///
/// Node ids are dense and their numeric order is the fixed total order on
/// nodes. Edges are ordered by (target id, input slot); the incoming edges of
/// a node determine the order of its arguments.
class Graph {
 public:
  Graph() = default;

  NodeId add_input() { return add_node(fn::Input{}, {}); }

  NodeId add_node(NodeFn f, std::vector<NodeId> inputs) {
    nodes_.push_back(Node{std::move(f), std::move(inputs)});
    return nodes_.size() - 1;
  }

  NodeId add_affine(RationalVec coeffs, Rational bias, std::vector<NodeId> inputs) {
    return add_node(fn::Affine{std::move(coeffs), std::move(bias)}, std::move(inputs));
  }

  void set_outputs(std::vector<NodeId> outputs) { outputs_ = std::move(outputs); }
  void add_output(NodeId v) { outputs_.push_back(v); }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const Node& node(NodeId v) const { return nodes_.at(v); }
  [[nodiscard]] Node& node(NodeId v) { return nodes_.at(v); }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<NodeId>& outputs() const { return outputs_; }

  [[nodiscard]] bool is_input(NodeId v) const { return std::holds_alternative<fn::Input>(nodes_.at(v).fn); }

  /// Input nodes in node order.
  [[nodiscard]] std::vector<NodeId> inputs() const {
    std::vector<NodeId> in;
    for (NodeId v = 0; v < nodes_.size(); ++v)
      if (is_input(v)) in.push_back(v);
    return in;
  }

  [[nodiscard]] std::size_t input_count() const { return inputs().size(); }
  [[nodiscard]] std::size_t output_count() const { return outputs_.size(); }

  /// Ordered edge list (source, target).
  [[nodiscard]] std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> e;
    for (NodeId v = 0; v < nodes_.size(); ++v)
      for (NodeId u : nodes_[v].inputs) e.emplace_back(u, v);
    return e;
  }

  [[nodiscard]] std::vector<std::vector<NodeId>> successors() const {
    std::vector<std::vector<NodeId>> succ(nodes_.size());
    for (NodeId v = 0; v < nodes_.size(); ++v)
      for (NodeId u : nodes_[v].inputs)
        if (u < nodes_.size()) succ[u].push_back(v);
    return succ;
  }

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  std::vector<Node> nodes_;
  std::vector<NodeId> outputs_;
};


inline bool operator==(const Graph& a, const Graph& b) {
  if (a.nodes_.size() != b.nodes_.size() || a.outputs_ != b.outputs_) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    if (a.nodes_[i].inputs != b.nodes_[i].inputs) return false;
    if (!(a.nodes_[i].fn == b.nodes_[i].fn)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Structure

enum class ViolationKind { Cycle, Unreachable, Dead, ArityMismatch, DanglingEdge, NoInputs, NoOutputs, BadOutput };

struct Violation {
  ViolationKind kind;
  NodeId node = 0;
  std::string message;
};

inline std::size_t expected_arity(const NodeFn& f, std::size_t in_degree) {
  return std::visit(
      [&](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, fn::Input>) return 0;
        if constexpr (std::is_same_v<T, fn::Affine>) return v.coeffs.size();
        if constexpr (std::is_same_v<T, fn::Relu> || std::is_same_v<T, fn::Sigmoid> ||
                      std::is_same_v<T, fn::Square>)
          return 1;
        // min/max: any arity >= 2
        return std::max<std::size_t>(2, in_degree);
      },
      f);
}

/// Returns every violated structural property; empty means the graph is well formed.
inline std::vector<Violation> validate_graph(const Graph& g) {
  std::vector<Violation> out;
  const std::size_t n = g.size();
  auto add = [&](ViolationKind k, NodeId v, std::string msg) { out.push_back({k, v, std::move(msg)}); };

  bool dangling = false;
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId u : g.node(v).inputs) {
      if (u >= n) {
        add(ViolationKind::DanglingEdge, v, "node " + std::to_string(v) + " reads missing node " + std::to_string(u));
        dangling = true;
      }
    }
    const auto& nd = g.node(v);
    std::size_t want = expected_arity(nd.fn, nd.inputs.size());
    if (want != nd.inputs.size()) {
      add(ViolationKind::ArityMismatch, v,
          "arity mismatch at node " + std::to_string(v) + ": " + op_name(nd.fn) + " expects " +
              std::to_string(want) + " inputs, has " + std::to_string(nd.inputs.size()));
    }
  }
  for (NodeId o : g.outputs())
    if (o >= n) add(ViolationKind::BadOutput, o, "output " + std::to_string(o) + " is not a node");
  if (g.inputs().empty()) add(ViolationKind::NoInputs, 0, "graph has no input nodes");
  if (g.outputs().empty()) add(ViolationKind::NoOutputs, 0, "graph has no output nodes");
  if (dangling) return out;

  // cycles: iterative DFS with colors
  std::vector<int> color(n, 0);
  auto succ = g.successors();
  std::vector<bool> reported(n, false);
  for (NodeId root = 0; root < n; ++root) {
    if (color[root] != 0) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{root, 0}};
    color[root] = 1;
    while (!stack.empty()) {
      auto& [v, idx] = stack.back();
      if (idx < succ[v].size()) {
        NodeId w = succ[v][idx++];
        if (color[w] == 1) {
          if (!reported[w]) {
            add(ViolationKind::Cycle, w, "cycle at node " + std::to_string(w));
            reported[w] = true;
          }
        } else if (color[w] == 0) {
          color[w] = 1;
          stack.emplace_back(w, 0);
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }

  // reachability from inputs
  std::vector<bool> reach(n, false);
  std::vector<NodeId> work = g.inputs();
  for (NodeId v : work) reach[v] = true;
  while (!work.empty()) {
    NodeId v = work.back();
    work.pop_back();
    for (NodeId w : succ[v])
      if (!reach[w]) {
        reach[w] = true;
        work.push_back(w);
      }
  }
  // co-reachability to outputs
  std::vector<bool> live(n, false);
  for (NodeId o : g.outputs())
    if (o < n && !live[o]) {
      live[o] = true;
      work.push_back(o);
    }
  while (!work.empty()) {
    NodeId v = work.back();
    work.pop_back();
    for (NodeId u : g.node(v).inputs)
      if (!live[u]) {
        live[u] = true;
        work.push_back(u);
      }
  }
  for (NodeId v = 0; v < n; ++v) {
    if (!reach[v]) add(ViolationKind::Unreachable, v, "node " + std::to_string(v) + " is unreachable from inputs");
    if (!live[v]) add(ViolationKind::Dead, v, "node " + std::to_string(v) + " reaches no output");
  }
  return out;
}

inline void require_valid(const Graph& g) {
  auto v = validate_graph(g);
  if (!v.empty()) throw GraphError("invalid graph: " + v.front().message);
}

/// Kahn's algorithm; ties go to the smallest node id.
inline std::vector<NodeId> topo_order(const Graph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> indeg(n, 0);
  for (NodeId v = 0; v < n; ++v) indeg[v] = g.node(v).inputs.size();
  auto succ = g.successors();
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push(v);
  std::vector<NodeId> order;
  order.reserve(n);
  while (!ready.empty()) {
    NodeId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (NodeId w : succ[v])
      if (--indeg[w] == 0) ready.push(w);
  }
  if (order.size() != n) throw GraphError("cycle detected");
  return order;
}

// ---------------------------------------------------------------------------
// Concrete semantics

/// Applies a node function to concrete arguments. Sigmoid is computed in
/// double precision and converted back exactly; every other function is exact.
inline Rational apply_fn(const NodeFn& f, std::span<const Rational> args) {
  return std::visit(
      [&](const auto& v) -> Rational {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, fn::Input>) {
          throw GraphError("input nodes have no function");
        } else if constexpr (std::is_same_v<T, fn::Affine>) {
          if (args.size() != v.coeffs.size()) throw GraphError("affine arity mismatch");
          Rational acc = v.bias;
          for (std::size_t i = 0; i < args.size(); ++i) acc += v.coeffs[i] * args[i];
          return acc;
        } else if constexpr (std::is_same_v<T, fn::Relu>) {
          return relu(args[0]);
        } else if constexpr (std::is_same_v<T, fn::Sigmoid>) {
          return from_double(sigmoid(to_double(args[0])));
        } else if constexpr (std::is_same_v<T, fn::Square>) {
          return args[0] * args[0];
        } else if constexpr (std::is_same_v<T, fn::Min>) {
          return *std::min_element(args.begin(), args.end());
        } else {
          return *std::max_element(args.begin(), args.end());
        }
      },
      f);
}

/// out(v) for every node, evaluated along `order` (any topological order).
inline RationalVec evaluate_all(const Graph& g, std::span<const Rational> x, const std::vector<NodeId>& order) {
  auto ins = g.inputs();
  if (x.size() != ins.size())
    throw GraphError("input length " + std::to_string(x.size()) + " does not match " +
                     std::to_string(ins.size()) + " input nodes");
  RationalVec out(g.size());
  for (std::size_t i = 0; i < ins.size(); ++i) out[ins[i]] = x[i];
  RationalVec args;
  for (NodeId v : order) {
    const Node& nd = g.node(v);
    if (std::holds_alternative<fn::Input>(nd.fn)) continue;
    args.clear();
    for (NodeId u : nd.inputs) args.push_back(out[u]);
    out[v] = apply_fn(nd.fn, args);
  }
  return out;
}

inline RationalVec evaluate(const Graph& g, std::span<const Rational> x) {
  auto all = evaluate_all(g, x, topo_order(g));
  RationalVec r;
  r.reserve(g.outputs().size());
  for (NodeId o : g.outputs()) r.push_back(all[o]);
  return r;
}

struct ClassResult {
  std::size_t index;  // 1-based
  bool tie;
};

/// Index of the largest element, 1-based. Exact ties pick the lowest index and set `tie`.
template <class T>
ClassResult class_of(std::span<const T> r) {
  if (r.empty()) throw std::invalid_argument("class of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.size(); ++i)
    if (r[best] < r[i]) best = i;
  bool tie = false;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (i != best && !(r[i] < r[best]) && !(r[best] < r[i])) tie = true;
  return {best + 1, tie};
}

template <class T>
ClassResult class_of(const std::vector<T>& r) {
  return class_of(std::span<const T>(r));
}

}  // namespace nnv
