#pragma once

// Immutable Boolean formula trees, generic over the atom type.

#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace nnv {

template <class A>
class Formula {
 public:
  enum class Kind { True, False, Atom, Not, And, Or };

  Formula() : Formula(make(Kind::True, A{}, nullptr, nullptr)) {}

  static Formula top() { return make(Kind::True, A{}, nullptr, nullptr); }
  static Formula bottom() { return make(Kind::False, A{}, nullptr, nullptr); }
  static Formula constant(bool b) { return b ? top() : bottom(); }
  static Formula atom(A a) { return make(Kind::Atom, std::move(a), nullptr, nullptr); }
  static Formula negate(const Formula& f) { return make(Kind::Not, A{}, f.n_, nullptr); }
  static Formula conj(const Formula& a, const Formula& b) { return make(Kind::And, A{}, a.n_, b.n_); }
  static Formula disj(const Formula& a, const Formula& b) { return make(Kind::Or, A{}, a.n_, b.n_); }

  /// Left-folded binary conjunction; the empty conjunction is true.
  static Formula all(const std::vector<Formula>& fs) {
    if (fs.empty()) return top();
    Formula acc = fs.front();
    for (std::size_t i = 1; i < fs.size(); ++i) acc = conj(acc, fs[i]);
    return acc;
  }
  static Formula any(const std::vector<Formula>& fs) {
    if (fs.empty()) return bottom();
    Formula acc = fs.front();
    for (std::size_t i = 1; i < fs.size(); ++i) acc = disj(acc, fs[i]);
    return acc;
  }

  [[nodiscard]] Kind kind() const { return n_->kind; }
  [[nodiscard]] bool is_true() const { return kind() == Kind::True; }
  [[nodiscard]] bool is_false() const { return kind() == Kind::False; }
  [[nodiscard]] bool is_const() const { return is_true() || is_false(); }
  [[nodiscard]] bool is_atom() const { return kind() == Kind::Atom; }
  [[nodiscard]] const A& atom() const { return n_->atom; }
  [[nodiscard]] Formula lhs() const { return Formula(n_->a); }
  [[nodiscard]] Formula rhs() const { return Formula(n_->b); }
  [[nodiscard]] Formula child() const { return Formula(n_->a); }

  /// An atom or a negated atom.
  [[nodiscard]] bool is_literal() const {
    return is_atom() || (kind() == Kind::Not && child().is_atom());
  }

  /// Number of nodes in the tree.
  [[nodiscard]] std::size_t size() const {
    switch (kind()) {
      case Kind::True:
      case Kind::False:
      case Kind::Atom:
        return 1;
      case Kind::Not:
        return 1 + child().size();
      default:
        return 1 + lhs().size() + rhs().size();
    }
  }

  friend bool operator==(const Formula& x, const Formula& y) {
    if (x.n_ == y.n_) return true;
    if (x.kind() != y.kind()) return false;
    switch (x.kind()) {
      case Kind::True:
      case Kind::False:
        return true;
      case Kind::Atom:
        return x.atom() == y.atom();
      case Kind::Not:
        return x.child() == y.child();
      default:
        return x.lhs() == y.lhs() && x.rhs() == y.rhs();
    }
  }

  friend Formula operator!(const Formula& f) { return negate(f); }
  friend Formula operator&&(const Formula& a, const Formula& b) { return conj(a, b); }
  friend Formula operator||(const Formula& a, const Formula& b) { return disj(a, b); }

 private:
  struct Node {
    Kind kind;
    A atom;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
  };

  explicit Formula(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

  static Formula make(Kind k, A atom, std::shared_ptr<const Node> a, std::shared_ptr<const Node> b) {
    return Formula(std::make_shared<const Node>(Node{k, std::move(atom), std::move(a), std::move(b)}));
  }

  std::shared_ptr<const Node> n_;
};

/// Replaces every atom by a formula over another atom type.
template <class A, class F>
auto map_atoms(const Formula<A>& f, F&& fn) -> decltype(fn(f.atom())) {
  using Out = decltype(fn(f.atom()));
  using K = typename Formula<A>::Kind;
  switch (f.kind()) {
    case K::True:
      return Out::top();
    case K::False:
      return Out::bottom();
    case K::Atom:
      return fn(f.atom());
    case K::Not:
      return Out::negate(map_atoms(f.child(), fn));
    case K::And:
      return Out::conj(map_atoms(f.lhs(), fn), map_atoms(f.rhs(), fn));
    case K::Or:
      return Out::disj(map_atoms(f.lhs(), fn), map_atoms(f.rhs(), fn));
  }
  throw std::logic_error("unreachable");
}

template <class A>
void collect_atoms(const Formula<A>& f, std::vector<A>& out) {
  using K = typename Formula<A>::Kind;
  switch (f.kind()) {
    case K::Atom:
      out.push_back(f.atom());
      break;
    case K::Not:
      collect_atoms(f.child(), out);
      break;
    case K::And:
    case K::Or:
      collect_atoms(f.lhs(), out);
      collect_atoms(f.rhs(), out);
      break;
    default:
      break;
  }
}

/// Negation normal form. `negate_atom` decides how a negated atom is written;
/// by default it stays as Not(atom). Constants under negation are folded.
template <class A>
Formula<A> to_nnf(const Formula<A>& f,
                  const std::type_identity_t<std::function<Formula<A>(const A&)>>& negate_atom = nullptr,
                  bool negated = false) {
  using F = Formula<A>;
  using K = typename F::Kind;
  switch (f.kind()) {
    case K::True:
      return F::constant(!negated);
    case K::False:
      return F::constant(negated);
    case K::Atom:
      if (!negated) return f;
      return negate_atom ? negate_atom(f.atom()) : F::negate(f);
    case K::Not:
      return to_nnf(f.child(), negate_atom, !negated);
    case K::And:
      return negated ? F::disj(to_nnf(f.lhs(), negate_atom, true), to_nnf(f.rhs(), negate_atom, true))
                     : F::conj(to_nnf(f.lhs(), negate_atom, false), to_nnf(f.rhs(), negate_atom, false));
    case K::Or:
      return negated ? F::conj(to_nnf(f.lhs(), negate_atom, true), to_nnf(f.rhs(), negate_atom, true))
                     : F::disj(to_nnf(f.lhs(), negate_atom, false), to_nnf(f.rhs(), negate_atom, false));
  }
  throw std::logic_error("unreachable");
}

template <class A>
bool is_nnf(const Formula<A>& f) {
  using K = typename Formula<A>::Kind;
  switch (f.kind()) {
    case K::Not:
      return f.child().is_atom();
    case K::And:
    case K::Or:
      return is_nnf(f.lhs()) && is_nnf(f.rhs());
    default:
      return true;
  }
}

template <class A, class P>
void print_formula(std::ostream& os, const Formula<A>& f, P&& print_atom) {
  using K = typename Formula<A>::Kind;
  switch (f.kind()) {
    case K::True:
      os << "true";
      break;
    case K::False:
      os << "false";
      break;
    case K::Atom:
      print_atom(os, f.atom());
      break;
    case K::Not:
      os << "(not ";
      print_formula(os, f.child(), print_atom);
      os << ')';
      break;
    case K::And:
    case K::Or:
      os << (f.kind() == K::And ? "(and " : "(or ");
      print_formula(os, f.lhs(), print_atom);
      os << ' ';
      print_formula(os, f.rhs(), print_atom);
      os << ')';
      break;
  }
}

}  // namespace nnv
