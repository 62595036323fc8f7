#pragma once

// Simplex over exact rationals: tableau, Bland's rule, and an optimizing variant.

#include "nnv/rational.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnv {

using VarId = std::size_t;
using LinExpr = std::map<VarId, Rational>;  // sparse, no zero entries

enum class Rel { Le, Ge, Eq };

inline const char* rel_symbol(Rel r) {
  switch (r) {
    case Rel::Le:
      return "<=";
    case Rel::Ge:
      return ">=";
    case Rel::Eq:
      return "=";
  }
  return "?";
}

/// sum_j coeffs[j] * x_j  rel  rhs
struct LinConstraint {
  LinExpr coeffs;
  Rel rel = Rel::Le;
  Rational rhs;
};

inline Rational eval_expr(const LinExpr& e, const RationalVec& x) {
  Rational acc = 0;
  for (const auto& [v, c] : e) acc += c * x.at(v);
  return acc;
}

inline bool satisfies(const LinConstraint& c, const RationalVec& x) {
  Rational lhs = eval_expr(c.coeffs, x);
  switch (c.rel) {
    case Rel::Le:
      return lhs <= c.rhs;
    case Rel::Ge:
      return lhs >= c.rhs;
    case Rel::Eq:
      return lhs == c.rhs;
  }
  return false;
}

inline void add_scaled(LinExpr& into, const LinExpr& e, const Rational& k) {
  if (k == 0) return;
  for (const auto& [v, c] : e) {
    Rational& slot = into[v];
    slot += k * c;
    if (slot == 0) into.erase(v);
  }
}

class SimplexError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Simplex state: rows x_b = sum c_bj x_j over non-basic x_j, optional bounds,
/// and the current interpretation. Variable ids double as Bland's order.
class Tableau {
 public:
  VarId add_var(std::string name = {}, std::optional<Rational> lo = {}, std::optional<Rational> hi = {}) {
    VarId v = val_.size();
    if (name.empty()) name = "x" + std::to_string(v);
    names_.push_back(std::move(name));
    lo_.push_back(std::move(lo));
    hi_.push_back(std::move(hi));
    basic_.push_back(false);
    val_.emplace_back(0);
    return v;
  }

  /// Adds a new basic variable defined as `expr` (which may mention basic
  /// variables; they are substituted away).
  VarId add_row(const LinExpr& expr, std::string name = {}, std::optional<Rational> lo = {},
                std::optional<Rational> hi = {}) {
    LinExpr row;
    for (const auto& [v, c] : expr) {
      if (basic_.at(v)) {
        add_scaled(row, rows_.at(v), c);
      } else {
        Rational& slot = row[v];
        slot += c;
        if (slot == 0) row.erase(v);
      }
    }
    VarId s = add_var(std::move(name), std::move(lo), std::move(hi));
    basic_[s] = true;
    val_[s] = eval_expr(row, val_);
    rows_.emplace(s, std::move(row));
    return s;
  }

  [[nodiscard]] std::size_t num_vars() const { return val_.size(); }
  [[nodiscard]] bool is_basic(VarId v) const { return basic_.at(v); }
  [[nodiscard]] const std::map<VarId, LinExpr>& rows() const { return rows_; }
  [[nodiscard]] const LinExpr& row(VarId basic) const { return rows_.at(basic); }
  [[nodiscard]] const std::optional<Rational>& lower(VarId v) const { return lo_.at(v); }
  [[nodiscard]] const std::optional<Rational>& upper(VarId v) const { return hi_.at(v); }
  [[nodiscard]] const Rational& value(VarId v) const { return val_.at(v); }
  [[nodiscard]] const RationalVec& values() const { return val_; }
  [[nodiscard]] const std::string& name(VarId v) const { return names_.at(v); }

  /// Coefficient of non-basic x_j in the row of basic x_i (0 if absent).
  [[nodiscard]] Rational coeff(VarId i, VarId j) const {
    const auto& r = rows_.at(i);
    auto it = r.find(j);
    return it == r.end() ? Rational(0) : it->second;
  }

  void set_lower(VarId v, std::optional<Rational> b) { lo_.at(v) = std::move(b); }
  void set_upper(VarId v, std::optional<Rational> b) { hi_.at(v) = std::move(b); }
  void tighten_lower(VarId v, const Rational& b) {
    if (!lo_.at(v) || *lo_[v] < b) lo_[v] = b;
  }
  void tighten_upper(VarId v, const Rational& b) {
    if (!hi_.at(v) || b < *hi_[v]) hi_[v] = b;
  }

  [[nodiscard]] bool below_lower(VarId v) const { return lo_[v] && val_[v] < *lo_[v]; }
  [[nodiscard]] bool above_upper(VarId v) const { return hi_[v] && *hi_[v] < val_[v]; }
  [[nodiscard]] bool within_bounds(VarId v) const { return !below_lower(v) && !above_upper(v); }
  [[nodiscard]] bool bounds_consistent() const {
    for (VarId v = 0; v < num_vars(); ++v)
      if (lo_[v] && hi_[v] && *hi_[v] < *lo_[v]) return false;
    return true;
  }

  /// Sets a non-basic variable and recomputes every basic variable.
  void set_value(VarId v, Rational x) {
    if (basic_.at(v)) throw SimplexError("cannot assign basic variable " + names_[v]);
    val_[v] = std::move(x);
    recompute_basic();
  }

  void recompute_basic() {
    for (const auto& [b, r] : rows_) val_[b] = eval_expr(r, val_);
  }

  /// Exchanges basic x_i with non-basic x_j. The solution set of the rows is unchanged.
  void pivot(VarId i, VarId j) {
    if (!basic_.at(i) || basic_.at(j)) throw SimplexError("pivot needs a basic and a non-basic variable");
    LinExpr ri = std::move(rows_.at(i));
    rows_.erase(i);
    auto it = ri.find(j);
    if (it == ri.end() || it->second == 0) throw SimplexError("zero pivot coefficient");
    Rational c = it->second;
    ri.erase(it);
    // x_j = (x_i - sum_{k != j} c_ik x_k) / c
    LinExpr rj;
    rj[i] = Rational(1) / c;
    for (const auto& [k, a] : ri) rj[k] = -a / c;
    for (auto& [b, r] : rows_) {
      auto hit = r.find(j);
      if (hit == r.end()) continue;
      Rational k = hit->second;
      r.erase(hit);
      add_scaled(r, rj, k);
    }
    rows_.emplace(j, std::move(rj));
    basic_[i] = false;
    basic_[j] = true;
  }

  /// Rows hold exactly and basic variables never appear on a right-hand side.
  [[nodiscard]] bool equalities_hold() const {
    for (const auto& [b, r] : rows_) {
      if (eval_expr(r, val_) != val_[b]) return false;
      for (const auto& [k, c] : r)
        if (basic_[k] || c == 0) return false;
    }
    return true;
  }

  [[nodiscard]] bool nonbasic_within_bounds() const {
    for (VarId v = 0; v < num_vars(); ++v)
      if (!basic_[v] && !within_bounds(v)) return false;
    return true;
  }

  [[nodiscard]] std::string dump() const {
    std::ostringstream os;
    for (const auto& [b, r] : rows_) {
      os << names_[b] << " =";
      bool first = true;
      for (const auto& [k, c] : r) {
        os << (first ? " " : " + ") << to_string(c) << "*" << names_[k];
        first = false;
      }
      if (first) os << " 0";
      os << '\n';
    }
    for (VarId v = 0; v < num_vars(); ++v) {
      os << names_[v] << (basic_[v] ? " [basic]" : "") << " in [" << (lo_[v] ? to_string(*lo_[v]) : "-inf") << ", "
         << (hi_[v] ? to_string(*hi_[v]) : "inf") << "] = " << to_string(val_[v]) << '\n';
    }
    return os.str();
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::optional<Rational>> lo_;
  std::vector<std::optional<Rational>> hi_;
  std::vector<bool> basic_;
  RationalVec val_;
  std::map<VarId, LinExpr> rows_;
};

/// One slack per constraint: s_i = sum c_ij x_j with the relation moved onto
/// the bounds of s_i. Variables 0..num_vars-1 are the original (unbounded)
/// variables; slack i gets id num_vars + i.
inline Tableau to_simplex_form(const std::vector<LinConstraint>& cs, std::size_t num_vars) {
  Tableau t;
  for (std::size_t v = 0; v < num_vars; ++v) t.add_var();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto& c = cs[i];
    for (const auto& [v, _] : c.coeffs)
      if (v >= num_vars) throw SimplexError("constraint mentions unknown variable");
    std::optional<Rational> lo;
    std::optional<Rational> hi;
    if (c.rel != Rel::Le) lo = c.rhs;
    if (c.rel != Rel::Ge) hi = c.rhs;
    t.add_row(c.coeffs, "s" + std::to_string(i + 1), lo, hi);
  }
  return t;
}

struct SimplexOptions {
  bool check_invariants = false;
  std::size_t max_pivots = 0;  // 0 = unlimited
};

struct SimplexStats {
  std::size_t pivots = 0;
};

enum class SimplexStatus { Sat, Unsat };

/// Feasibility Simplex with Bland's rule, continuing from the tableau's current
/// interpretation. Non-basic variables outside their bounds are first moved to
/// the violated bound.
inline SimplexStatus simplex_solve(Tableau& t, const SimplexOptions& opt = {}, SimplexStats* stats = nullptr) {
  if (!t.bounds_consistent()) return SimplexStatus::Unsat;
  bool moved = false;
  for (VarId v = 0; v < t.num_vars(); ++v) {
    if (t.is_basic(v)) continue;
    if (t.below_lower(v)) {
      t.set_value(v, *t.lower(v));
      moved = true;
    } else if (t.above_upper(v)) {
      t.set_value(v, *t.upper(v));
      moved = true;
    }
  }
  if (!moved) t.recompute_basic();

  std::size_t pivots = 0;
  for (;;) {
    if (opt.check_invariants && (!t.equalities_hold() || !t.nonbasic_within_bounds()))
      throw SimplexError("tableau invariant violated:\n" + t.dump());
    VarId xi = t.num_vars();
    for (const auto& [b, _] : t.rows())
      if (!t.within_bounds(b)) {
        xi = b;
        break;
      }
    if (xi == t.num_vars()) {
      if (stats) stats->pivots = pivots;
      return SimplexStatus::Sat;
    }
    bool raise = t.below_lower(xi);
    const LinExpr& r = t.row(xi);
    VarId xj = t.num_vars();
    for (const auto& [k, c] : r) {
      bool can_up = !t.upper(k) || t.value(k) < *t.upper(k);
      bool can_down = !t.lower(k) || *t.lower(k) < t.value(k);
      bool ok = raise ? ((c > 0 && can_up) || (c < 0 && can_down)) : ((c < 0 && can_up) || (c > 0 && can_down));
      if (ok) {
        xj = k;
        break;
      }
    }
    if (xj == t.num_vars()) {
      if (stats) stats->pivots = pivots;
      return SimplexStatus::Unsat;
    }
    Rational target = raise ? *t.lower(xi) : *t.upper(xi);
    t.pivot(xi, xj);
    ++pivots;
    t.set_value(xi, target);
    if (opt.max_pivots && pivots > opt.max_pivots) throw SimplexError("pivot limit exceeded");
  }
}

// ---------------------------------------------------------------------------
// Optimization, used for LP bounds.

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Rational value;
};

/// Maximizes `objective` over the tableau's rows and bounds. Starts from a
/// feasible point found by simplex_solve, then runs a bounded-variable primal
/// simplex with Bland's entering/leaving choice. The tableau is left at an
/// optimal vertex.
inline LpResult maximize(Tableau& t, const LinExpr& objective) {
  if (simplex_solve(t) == SimplexStatus::Unsat) return {LpStatus::Infeasible, 0};
  for (;;) {
    LinExpr d;
    for (const auto& [v, c] : objective) {
      if (t.is_basic(v)) {
        add_scaled(d, t.row(v), c);
      } else {
        Rational& slot = d[v];
        slot += c;
        if (slot == 0) d.erase(v);
      }
    }
    VarId xj = t.num_vars();
    int dir = 0;
    for (const auto& [k, c] : d) {
      if (c > 0 && (!t.upper(k) || t.value(k) < *t.upper(k))) {
        xj = k;
        dir = 1;
        break;
      }
      if (c < 0 && (!t.lower(k) || *t.lower(k) < t.value(k))) {
        xj = k;
        dir = -1;
        break;
      }
    }
    if (xj == t.num_vars()) {
      Rational z = 0;
      for (const auto& [v, c] : objective) z += c * t.value(v);
      return {LpStatus::Optimal, z};
    }
    // ratio test: largest step s >= 0 moving x_j by dir*s
    std::optional<Rational> best;
    VarId leave = t.num_vars();
    if (dir > 0 && t.upper(xj)) best = *t.upper(xj) - t.value(xj);
    if (dir < 0 && t.lower(xj)) best = t.value(xj) - *t.lower(xj);
    for (const auto& [b, r] : t.rows()) {
      auto it = r.find(xj);
      if (it == r.end()) continue;
      Rational rate = it->second * dir;
      std::optional<Rational> step;
      if (rate > 0 && t.upper(b)) step = (*t.upper(b) - t.value(b)) / rate;
      if (rate < 0 && t.lower(b)) step = (*t.lower(b) - t.value(b)) / rate;
      if (!step) continue;
      if (!best || *step < *best || (*step == *best && leave != t.num_vars() && b < leave)) {
        best = *step;
        leave = b;
      }
    }
    if (!best) return {LpStatus::Unbounded, 0};
    Rational next = t.value(xj) + dir * *best;
    if (leave == t.num_vars()) {
      t.set_value(xj, next);
      continue;
    }
    auto rate = t.row(leave).at(xj) * dir;
    Rational target = rate > 0 ? *t.upper(leave) : *t.lower(leave);
    t.pivot(leave, xj);
    t.set_value(leave, target);
  }
}

inline LpResult minimize(Tableau& t, const LinExpr& objective) {
  LinExpr neg;
  for (const auto& [v, c] : objective) neg[v] = -c;
  auto r = maximize(t, neg);
  r.value = -r.value;
  return r;
}

}  // namespace nnv
