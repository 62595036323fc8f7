#pragma once

// JSON network format.
//
//   {"nodes":[{"id":0,"op":"input"},
//             {"id":2,"op":"affine","coeffs":["2","1"],"bias":"0","inputs":[0,1]}, ...],
//    "outputs":[3]}

#include "nnv/graph.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <string>

namespace nnv {

using json = nlohmann::json;

inline Rational json_rational(const json& j, const std::string& where) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number_float()) return from_double(j.get<double>());
  throw ParseError(where + ": expected a rational");
}

inline NodeFn parse_op(const std::string& op, const json& jn, const std::string& where) {
  if (op == "input") return fn::Input{};
  if (op == "relu") return fn::Relu{};
  if (op == "sigmoid") return fn::Sigmoid{};
  if (op == "square") return fn::Square{};
  if (op == "min") return fn::Min{};
  if (op == "max") return fn::Max{};
  if (op == "affine") {
    fn::Affine a;
    if (!jn.contains("coeffs") || !jn["coeffs"].is_array()) throw ParseError(where + ": affine node needs coeffs");
    for (const auto& c : jn["coeffs"]) a.coeffs.push_back(json_rational(c, where));
    a.bias = jn.contains("bias") ? json_rational(jn["bias"], where) : Rational(0);
    return a;
  }
  throw ParseError(where + ": unknown op '" + op + "'");
}

/// Builds a graph from JSON. Ids may be sparse or out of order in the file;
/// they are renumbered densely in ascending order.
inline Graph graph_from_json(const json& j) {
  if (!j.is_object() || !j.contains("nodes")) throw ParseError("network: missing 'nodes'");
  std::map<long, const json*> by_id;
  for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
    const json& jn = j["nodes"][i];
    long id = jn.contains("id") ? jn["id"].get<long>() : static_cast<long>(i);
    if (!by_id.emplace(id, &jn).second) throw ParseError("network: duplicate node id " + std::to_string(id));
  }
  std::map<long, NodeId> dense;
  for (const auto& [id, _] : by_id) dense.emplace(id, dense.size());
  auto remap = [&](long id, const std::string& where) {
    auto it = dense.find(id);
    if (it == dense.end()) throw ParseError(where + ": unknown node id " + std::to_string(id));
    return it->second;
  };

  Graph g;
  for (const auto& [id, jn] : by_id) {
    std::string where = "node " + std::to_string(id);
    if (!jn->contains("op")) throw ParseError(where + ": missing op");
    NodeFn f = parse_op((*jn)["op"].get<std::string>(), *jn, where);
    std::vector<NodeId> ins;
    if (jn->contains("inputs"))
      for (const auto& e : (*jn)["inputs"]) ins.push_back(remap(e.get<long>(), where));
    g.add_node(std::move(f), std::move(ins));
  }
  if (j.contains("outputs"))
    for (const auto& o : j["outputs"]) g.add_output(remap(o.get<long>(), "outputs"));
  return g;
}

inline json graph_to_json(const Graph& g) {
  json nodes = json::array();
  for (NodeId v = 0; v < g.size(); ++v) {
    const Node& nd = g.node(v);
    json jn{{"id", v}, {"op", op_name(nd.fn)}};
    if (const auto* a = std::get_if<fn::Affine>(&nd.fn)) {
      json cs = json::array();
      for (const auto& c : a->coeffs) cs.push_back(to_string(c));
      jn["coeffs"] = cs;
      jn["bias"] = to_string(a->bias);
    }
    if (!nd.inputs.empty()) jn["inputs"] = nd.inputs;
    nodes.push_back(std::move(jn));
  }
  return json{{"nodes", nodes}, {"outputs", g.outputs()}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Graph load_graph(const std::string& path) {
  try {
    return graph_from_json(read_json_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << graph_to_json(g).dump(2) << '\n';
}

}  // namespace nnv
