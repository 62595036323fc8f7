#pragma once

// Correctness properties: {precondition} r <- f(x) ... {postcondition}.

#include "nnv/graph.hpp"
#include "nnv/graph_io.hpp"
#include "nnv/lra.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nnv {

/// A vector variable; its components are scalars offset .. offset+dim-1.
struct VecVar {
  std::string name;
  std::size_t dim = 0;
  std::size_t offset = 0;
  bool is_input = true;
};

struct LinfBall {
  std::string var;
  RationalVec center;
  Rational eps;
};

struct L2Ball {
  std::string var;
  RationalVec center;
  Rational eps;
};

/// Each component of `var` ranges over a finite set of values.
struct Synonyms {
  std::string var;
  std::vector<RationalVec> sets;
};

using PreItem = std::variant<LinAtom, LinfBall, L2Ball, Synonyms>;

struct Assignment {
  std::string out;
  std::string net_path;
  std::shared_ptr<const Graph> net;
  std::variant<std::string, RationalVec> in;  // a variable or a constant vector
};

/// class(of) = label, 1-based.
struct ClassEquals {
  std::string of;
  std::size_t label = 1;
  friend bool operator==(const ClassEquals&, const ClassEquals&) = default;
};

/// class(a) = class(b)
struct SameClass {
  std::string a;
  std::string b;
  friend bool operator==(const SameClass&, const SameClass&) = default;
};

using PostAtom = std::variant<LinAtom, ClassEquals, SameClass>;
using PostFormula = Formula<PostAtom>;

struct Property {
  std::vector<VecVar> vars;  // inputs first, then assigned outputs
  std::vector<PreItem> pre;
  std::vector<Assignment> assign;
  PostFormula post;

  [[nodiscard]] std::size_t num_scalars() const {
    return vars.empty() ? 0 : vars.back().offset + vars.back().dim;
  }
  [[nodiscard]] const VecVar* find(const std::string& name) const {
    for (const auto& v : vars)
      if (v.name == name) return &v;
    return nullptr;
  }
  [[nodiscard]] const VecVar& var(const std::string& name) const {
    if (const auto* v = find(name)) return *v;
    throw ParseError("unbound variable '" + name + "'");
  }
  [[nodiscard]] std::vector<const VecVar*> inputs() const {
    std::vector<const VecVar*> in;
    for (const auto& v : vars)
      if (v.is_input) in.push_back(&v);
    return in;
  }
  [[nodiscard]] std::string scalar_name(std::size_t s) const {
    for (const auto& v : vars)
      if (s >= v.offset && s < v.offset + v.dim)
        return v.dim == 1 ? v.name : v.name + "[" + std::to_string(s - v.offset) + "]";
    return "?" + std::to_string(s);
  }

  VecVar& add_var(std::string name, std::size_t dim, bool is_input) {
    if (find(name)) throw ParseError("variable '" + name + "' declared twice");
    vars.push_back(VecVar{std::move(name), dim, num_scalars(), is_input});
    return vars.back();
  }
};

// ---------------------------------------------------------------------------
// Precondition views

/// Every linear precondition atom, with l-infinity balls expanded into 2n
/// atoms. L2 balls contribute their enclosing box and set `inexact`.
/// Synonym sets are skipped; see pre_formula.
inline std::vector<LinAtom> linear_pre_atoms(const Property& p, bool* inexact = nullptr) {
  std::vector<LinAtom> out;
  auto ball = [&](const std::string& name, const RationalVec& c, const Rational& eps) {
    const VecVar& v = p.var(name);
    if (c.size() != v.dim) throw ParseError("ball center for '" + name + "' has wrong dimension");
    for (std::size_t i = 0; i < v.dim; ++i) {
      out.push_back(atom_le({{v.offset + i, Rational(1)}}, c[i] + eps));
      out.push_back(atom_ge({{v.offset + i, Rational(1)}}, c[i] - eps));
    }
  };
  for (const auto& item : p.pre) {
    if (const auto* a = std::get_if<LinAtom>(&item)) {
      out.push_back(*a);
    } else if (const auto* b = std::get_if<LinfBall>(&item)) {
      ball(b->var, b->center, b->eps);
    } else if (const auto* b2 = std::get_if<L2Ball>(&item)) {
      ball(b2->var, b2->center, b2->eps);
      if (inexact) *inexact = true;
    }
  }
  return out;
}

/// The precondition as an LRA formula over property scalars. Synonym sets
/// become disjunctions of equalities, which is exact.
inline LraFormula pre_formula(const Property& p, bool* inexact = nullptr) {
  std::vector<LraFormula> parts;
  for (const auto& a : linear_pre_atoms(p, inexact)) parts.push_back(LraFormula::atom(a));
  for (const auto& item : p.pre) {
    if (const auto* s = std::get_if<Synonyms>(&item)) {
      const VecVar& v = p.var(s->var);
      for (std::size_t i = 0; i < v.dim; ++i) {
        std::vector<LraFormula> alts;
        for (const auto& val : s->sets[i]) alts.push_back(eq({{v.offset + i, Rational(1)}}, val));
        parts.push_back(LraFormula::any(alts));
      }
    }
  }
  return LraFormula::all(parts);
}

// ---------------------------------------------------------------------------
// Concrete checking

inline bool eval_pre_item(const Property& p, const PreItem& item, const RationalVec& s) {
  if (const auto* a = std::get_if<LinAtom>(&item)) return eval_atom(*a, s);
  if (const auto* b = std::get_if<LinfBall>(&item)) {
    const VecVar& v = p.var(b->var);
    for (std::size_t i = 0; i < v.dim; ++i)
      if (abs(s[v.offset + i] - b->center[i]) > b->eps) return false;
    return true;
  }
  if (const auto* b = std::get_if<L2Ball>(&item)) {
    const VecVar& v = p.var(b->var);
    Rational sq = 0;
    for (std::size_t i = 0; i < v.dim; ++i) {
      Rational d = s[v.offset + i] - b->center[i];
      sq += d * d;
    }
    return sq <= b->eps * b->eps;
  }
  const auto& syn = std::get<Synonyms>(item);
  const VecVar& v = p.var(syn.var);
  for (std::size_t i = 0; i < v.dim; ++i) {
    const auto& set = syn.sets[i];
    if (std::find(set.begin(), set.end(), s[v.offset + i]) == set.end()) return false;
  }
  return true;
}

inline RationalVec slice(const RationalVec& s, const VecVar& v) {
  return RationalVec(s.begin() + static_cast<std::ptrdiff_t>(v.offset),
                     s.begin() + static_cast<std::ptrdiff_t>(v.offset + v.dim));
}

/// class(r) = y with a strict maximum; an exact tie at the top counts as false.
inline bool strict_class_is(const RationalVec& r, std::size_t y) {
  if (y < 1 || y > r.size()) throw std::out_of_range("class label " + std::to_string(y) + " out of range");
  for (std::size_t j = 0; j < r.size(); ++j)
    if (j != y - 1 && r[j] >= r[y - 1]) return false;
  return true;
}

inline bool eval_post_atom(const Property& p, const PostAtom& a, const RationalVec& s) {
  if (const auto* la = std::get_if<LinAtom>(&a)) return eval_atom(*la, s);
  if (const auto* ce = std::get_if<ClassEquals>(&a)) return strict_class_is(slice(s, p.var(ce->of)), ce->label);
  const auto& sc = std::get<SameClass>(a);
  RationalVec r1 = slice(s, p.var(sc.a));
  RationalVec r2 = slice(s, p.var(sc.b));
  auto c1 = class_of(r1);
  auto c2 = class_of(r2);
  return !c1.tie && !c2.tie && c1.index == c2.index;
}

inline bool eval_post(const Property& p, const PostFormula& f, const RationalVec& s) {
  using K = PostFormula::Kind;
  switch (f.kind()) {
    case K::True:
      return true;
    case K::False:
      return false;
    case K::Atom:
      return eval_post_atom(p, f.atom(), s);
    case K::Not:
      return !eval_post(p, f.child(), s);
    case K::And:
      return eval_post(p, f.lhs(), s) && eval_post(p, f.rhs(), s);
    case K::Or:
      return eval_post(p, f.lhs(), s) || eval_post(p, f.rhs(), s);
  }
  return false;
}

/// Runs every assignment on the given inputs; returns all property scalars.
inline RationalVec run_property(const Property& p, const std::map<std::string, RationalVec>& inputs) {
  RationalVec s(p.num_scalars());
  for (const auto* v : p.inputs()) {
    auto it = inputs.find(v->name);
    if (it == inputs.end()) throw std::invalid_argument("no value for input '" + v->name + "'");
    if (it->second.size() != v->dim)
      throw std::invalid_argument("input '" + v->name + "' has dimension " + std::to_string(v->dim) + ", got " +
                                  std::to_string(it->second.size()));
    std::copy(it->second.begin(), it->second.end(), s.begin() + static_cast<std::ptrdiff_t>(v->offset));
  }
  for (const auto& a : p.assign) {
    RationalVec x = std::holds_alternative<RationalVec>(a.in) ? std::get<RationalVec>(a.in)
                                                              : slice(s, p.var(std::get<std::string>(a.in)));
    RationalVec r = evaluate(*a.net, x);
    const VecVar& out = p.var(a.out);
    std::copy(r.begin(), r.end(), s.begin() + static_cast<std::ptrdiff_t>(out.offset));
  }
  return s;
}

struct CexCheck {
  bool valid = false;
  std::string reason;
  RationalVec scalars;
};

/// Valid iff the precondition holds and the postcondition is false.
inline CexCheck check_counterexample(const Property& p, const std::map<std::string, RationalVec>& inputs) {
  CexCheck c;
  c.scalars = run_property(p, inputs);
  for (const auto& item : p.pre)
    if (!eval_pre_item(p, item, c.scalars)) {
      c.reason = "precondition does not hold";
      return c;
    }
  if (eval_post(p, p.post, c.scalars)) {
    c.reason = "postcondition holds";
    return c;
  }
  c.valid = true;
  return c;
}

/// Splits the first scalars of a solver model into named input vectors.
inline std::map<std::string, RationalVec> input_assignment(const Property& p, const RationalVec& scalars) {
  std::map<std::string, RationalVec> m;
  for (const auto* v : p.inputs()) m[v->name] = slice(scalars, *v);
  return m;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline std::size_t scalar_ref(const Property& p, const std::string& ref) {
  auto lb = ref.find('[');
  std::string name = lb == std::string::npos ? ref : ref.substr(0, lb);
  const VecVar* v = p.find(name);
  if (!v) throw ParseError("unbound variable '" + name + "'");
  std::size_t idx = 0;
  if (lb == std::string::npos) {
    if (v->dim != 1) throw ParseError("'" + name + "' is a vector; index it as " + name + "[i]");
  } else {
    auto rb = ref.find(']', lb);
    if (rb == std::string::npos || rb != ref.size() - 1) throw ParseError("bad variable reference '" + ref + "'");
    try {
      idx = std::stoul(ref.substr(lb + 1, rb - lb - 1));
    } catch (const std::exception&) {
      throw ParseError("bad index in '" + ref + "'");
    }
    if (idx >= v->dim)
      throw ParseError("index " + std::to_string(idx) + " out of range for '" + name + "' of dimension " +
                       std::to_string(v->dim));
  }
  return v->offset + idx;
}

inline LinExpr read_coeffs(const Property& p, const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": coeffs must be an object");
  LinExpr e;
  for (const auto& [k, c] : j.items()) e[scalar_ref(p, k)] += json_rational(c, where);
  return clean(e);
}

inline LinAtom read_atom(const Property& p, const json& j, const std::string& where) {
  LinExpr e = read_coeffs(p, j.at("coeffs"), where);
  Rational rhs = j.contains("rhs") ? json_rational(j["rhs"], where) : Rational(0);
  std::string rel = j.value("rel", "<=");
  if (rel == "<=") return atom_le(e, rhs);
  if (rel == "<") return atom_lt(e, rhs);
  if (rel == "=" || rel == "==") return atom_eq(e, rhs);
  if (rel == ">=") return atom_ge(e, rhs);
  if (rel == ">") return atom_gt(e, rhs);
  throw ParseError(where + ": unknown relation '" + rel + "'");
}

inline RationalVec read_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  RationalVec v;
  for (const auto& x : j) v.push_back(json_rational(x, where));
  return v;
}

inline json atom_json(const Property& p, const LinAtom& a) {
  json coeffs = json::object();
  for (const auto& [v, c] : a.coeffs) coeffs[p.scalar_name(v)] = to_string(c);
  const char* rel = a.cmp == Cmp::Le ? "<=" : a.cmp == Cmp::Lt ? "<" : "=";
  return json{{"coeffs", coeffs}, {"rel", rel}, {"rhs", to_string(-a.bias)}};
}

inline json vector_json(const RationalVec& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(to_string(x));
  return a;
}

inline PostFormula read_post(const Property& p, const json& j, const std::string& where) {
  if (j.is_array()) {
    std::vector<PostFormula> parts;
    for (std::size_t i = 0; i < j.size(); ++i) parts.push_back(read_post(p, j[i], where + "[" + std::to_string(i) + "]"));
    return PostFormula::all(parts);
  }
  if (j.contains("and")) return read_post(p, j["and"], where);
  if (j.contains("or")) {
    std::vector<PostFormula> parts;
    for (std::size_t i = 0; i < j["or"].size(); ++i)
      parts.push_back(read_post(p, j["or"][i], where + ".or[" + std::to_string(i) + "]"));
    return PostFormula::any(parts);
  }
  if (j.contains("not")) return !read_post(p, j["not"], where + ".not");
  if (j.contains("class")) {
    const json& c = j["class"];
    std::string of = c.at("of").get<std::string>();
    const VecVar& v = p.var(of);
    if (c.contains("same_as")) {
      std::string other = c["same_as"].get<std::string>();
      if (p.var(other).dim != v.dim) throw ParseError(where + ": class comparison between different dimensions");
      return PostFormula::atom(SameClass{of, other});
    }
    auto label = c.at("label").get<std::size_t>();
    if (label < 1 || label > v.dim) throw ParseError(where + ": label " + std::to_string(label) + " out of range");
    return PostFormula::atom(ClassEquals{of, label});
  }
  return PostFormula::atom(read_atom(p, j, where));
}

inline json post_json(const Property& p, const PostFormula& f) {
  using K = PostFormula::Kind;
  switch (f.kind()) {
    case K::True:
      return json::array();
    case K::False:
      return json{{"or", json::array()}};
    case K::Atom: {
      const auto& a = f.atom();
      if (const auto* la = std::get_if<LinAtom>(&a)) return atom_json(p, *la);
      if (const auto* ce = std::get_if<ClassEquals>(&a)) return json{{"class", {{"of", ce->of}, {"label", ce->label}}}};
      const auto& sc = std::get<SameClass>(a);
      return json{{"class", {{"of", sc.a}, {"same_as", sc.b}}}};
    }
    case K::Not:
      return json{{"not", post_json(p, f.child())}};
    case K::And:
      return json{{"and", json::array({post_json(p, f.lhs()), post_json(p, f.rhs())})}};
    case K::Or:
      return json{{"or", json::array({post_json(p, f.lhs()), post_json(p, f.rhs())})}};
  }
  return json();
}

}  // namespace detail

/// Parses a property. Network paths are resolved against `base_dir`;
/// `loader` may be supplied to fetch networks from elsewhere.
inline Property property_from_json(const json& j, const std::filesystem::path& base_dir = {},
                                   const std::function<std::shared_ptr<const Graph>(const std::string&)>& loader = {}) {
  Property p;
  try {
    for (const auto& in : j.at("inputs")) p.add_var(in.at("name").get<std::string>(), in.at("dim").get<std::size_t>(), true);

    const json pre = j.value("pre", json::array());
    for (std::size_t i = 0; i < pre.size(); ++i) {
      const json& it = pre[i];
      std::string where = "pre[" + std::to_string(i) + "]";
      if (it.contains("linf") || it.contains("l2")) {
        const json& b = it.contains("linf") ? it["linf"] : it["l2"];
        std::string var = b.at("var").get<std::string>();
        const VecVar& v = p.var(var);
        if (!v.is_input) throw ParseError(where + ": precondition may only mention inputs");
        RationalVec c = detail::read_vector(b.at("center"), where);
        if (c.size() != v.dim) throw ParseError(where + ": center has dimension " + std::to_string(c.size()) + ", expected " + std::to_string(v.dim));
        Rational eps = json_rational(b.at("eps"), where);
        if (eps < 0) throw ParseError(where + ": negative radius");
        if (it.contains("linf"))
          p.pre.emplace_back(LinfBall{var, c, eps});
        else
          p.pre.emplace_back(L2Ball{var, c, eps});
      } else if (it.contains("synonyms")) {
        const json& s = it["synonyms"];
        std::string var = s.at("var").get<std::string>();
        const VecVar& v = p.var(var);
        Synonyms syn{var, {}};
        for (const auto& set : s.at("sets")) syn.sets.push_back(detail::read_vector(set, where));
        if (syn.sets.size() != v.dim) throw ParseError(where + ": need one synonym set per dimension");
        for (const auto& set : syn.sets)
          if (set.empty()) throw ParseError(where + ": empty synonym set");
        p.pre.emplace_back(std::move(syn));
      } else if (it.contains("abs")) {
        // |sum c x + bias| <= le
        const json& a = it["abs"];
        LinExpr e = detail::read_coeffs(p, a.at("coeffs"), where);
        Rational bias = a.contains("bias") ? json_rational(a["bias"], where) : Rational(0);
        Rational bound = json_rational(a.at("le"), where);
        p.pre.emplace_back(atom_le(e, bound - bias));
        p.pre.emplace_back(atom_ge(e, -bound - bias));
      } else {
        p.pre.emplace_back(detail::read_atom(p, it, where));
      }
    }
    for (const auto& item : p.pre)
      if (const auto* a = std::get_if<LinAtom>(&item))
        for (const auto& [s, _] : a->coeffs)
          for (const auto& v : p.vars)
            if (s >= v.offset && s < v.offset + v.dim && !v.is_input)
              throw ParseError("precondition mentions assigned variable '" + v.name + "'");

    const json assign = j.value("assign", json::array());
    for (std::size_t i = 0; i < assign.size(); ++i) {
      const json& a = assign[i];
      std::string where = "assign[" + std::to_string(i) + "]";
      Assignment as;
      as.out = a.at("out").get<std::string>();
      as.net_path = a.at("net").get<std::string>();
      if (loader) {
        as.net = loader(as.net_path);
      } else {
        auto path = std::filesystem::path(as.net_path);
        if (path.is_relative()) path = base_dir / path;
        as.net = std::make_shared<const Graph>(load_graph(path.string()));
      }
      require_valid(*as.net);
      std::size_t in_dim = 0;
      if (a.at("in").is_string()) {
        std::string src = a["in"].get<std::string>();
        in_dim = p.var(src).dim;
        as.in = src;
      } else {
        RationalVec c = detail::read_vector(a["in"], where);
        in_dim = c.size();
        as.in = c;
      }
      if (in_dim != as.net->input_count())
        throw ParseError(where + ": network expects " + std::to_string(as.net->input_count()) + " inputs, got " +
                         std::to_string(in_dim));
      p.add_var(as.out, as.net->output_count(), false);
      p.assign.push_back(std::move(as));
    }
    p.post = detail::read_post(p, j.value("post", json::array()), "post");
  } catch (const json::exception& e) {
    throw ParseError(std::string("property: ") + e.what());
  }
  return p;
}

inline Property load_property(const std::string& path) {
  json j = read_json_file(path);
  try {
    return property_from_json(j, std::filesystem::path(path).parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline json property_to_json(const Property& p) {
  json j;
  j["inputs"] = json::array();
  for (const auto* v : p.inputs()) j["inputs"].push_back({{"name", v->name}, {"dim", v->dim}});
  j["pre"] = json::array();
  for (const auto& item : p.pre) {
    if (const auto* a = std::get_if<LinAtom>(&item)) {
      j["pre"].push_back(detail::atom_json(p, *a));
    } else if (const auto* b = std::get_if<LinfBall>(&item)) {
      j["pre"].push_back({{"linf", {{"var", b->var}, {"center", detail::vector_json(b->center)}, {"eps", to_string(b->eps)}}}});
    } else if (const auto* b2 = std::get_if<L2Ball>(&item)) {
      j["pre"].push_back({{"l2", {{"var", b2->var}, {"center", detail::vector_json(b2->center)}, {"eps", to_string(b2->eps)}}}});
    } else {
      const auto& s = std::get<Synonyms>(item);
      json sets = json::array();
      for (const auto& set : s.sets) sets.push_back(detail::vector_json(set));
      j["pre"].push_back({{"synonyms", {{"var", s.var}, {"sets", sets}}}});
    }
  }
  j["assign"] = json::array();
  for (const auto& a : p.assign) {
    json ja{{"out", a.out}, {"net", a.net_path}};
    if (std::holds_alternative<std::string>(a.in))
      ja["in"] = std::get<std::string>(a.in);
    else
      ja["in"] = detail::vector_json(std::get<RationalVec>(a.in));
    j["assign"].push_back(ja);
  }
  json post = detail::post_json(p, p.post);
  j["post"] = post.is_array() ? post : json::array({post});
  return j;
}

}  // namespace nnv
