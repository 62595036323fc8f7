#pragma once

// Simplex with native ReLU constraints, lazy repair and case splitting.

#include "nnv/simplex.hpp"

#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nnv {

/// x_i = relu(x_j)
struct ReluPair {
  VarId i;
  VarId j;
};

struct ReluplexProblem {
  Tableau tableau;
  std::vector<ReluPair> pairs;
  std::size_t num_orig = 0;  // variables 0..num_orig-1 are the caller's
};

/// Simplex form plus the pairs, each with its implied bound x_i >= 0.
inline ReluplexProblem to_reluplex_form(const std::vector<LinConstraint>& cs, std::size_t num_vars,
                                        const std::vector<ReluPair>& pairs) {
  ReluplexProblem p{to_simplex_form(cs, num_vars), {}, num_vars};
  std::set<VarId> seen;
  for (const auto& pr : pairs) {
    if (pr.i >= num_vars || pr.j >= num_vars) throw std::invalid_argument("relu pair mentions unknown variable");
    if (pr.i == pr.j) throw std::invalid_argument("relu pair needs two distinct variables");
    if (!seen.insert(pr.i).second)
      throw std::invalid_argument("duplicate relu constraint on x" + std::to_string(pr.i));
    p.tableau.tighten_lower(pr.i, 0);
    p.pairs.push_back(pr);
  }
  return p;
}

struct ReluplexOptions {
  std::size_t tau = 5;
  std::function<void(const std::string&)> trace;  // optional repair/split log
};

struct ReluplexStats {
  std::size_t simplex_calls = 0;
  std::size_t repairs = 0;
  std::size_t pivots = 0;
  std::size_t splits = 0;
  std::size_t fixed = 0;  // pairs replaced by their only feasible phase
  std::size_t max_depth = 0;
};

struct ReluplexResult {
  bool sat = false;
  RationalVec model;  // values of the caller's variables
  ReluplexStats stats;
};

namespace detail {

inline bool relu_holds(const Tableau& t, const ReluPair& p) { return t.value(p.i) == relu(t.value(p.j)); }

/// First non-basic variable (by id) in the row of `basic`, other than `avoid`.
inline std::optional<VarId> pivot_partner(const Tableau& t, VarId basic, VarId avoid) {
  for (const auto& [k, c] : t.row(basic))
    if (k != avoid && c != 0) return k;
  return std::nullopt;
}

inline void active_phase(Tableau& t, const ReluPair& p) {
  t.tighten_lower(p.j, 0);
  LinExpr e{{p.i, Rational(1)}, {p.j, Rational(-1)}};
  t.add_row(e, t.name(p.i) + "-" + t.name(p.j), Rational(0), Rational(0));
}

inline void inactive_phase(Tableau& t, const ReluPair& p) {
  t.tighten_upper(p.j, 0);
  t.tighten_upper(p.i, 0);
}

inline bool reluplex_rec(Tableau t, std::vector<ReluPair> pairs, const ReluplexOptions& opt, ReluplexStats& st,
                         std::size_t depth, RationalVec& model) {
  st.max_depth = std::max(st.max_depth, depth);
  auto log = [&](const std::string& s) {
    if (opt.trace) opt.trace(std::string(depth * 2, ' ') + s);
  };
  std::vector<std::size_t> counter(pairs.size(), 0);
  std::vector<bool> toggle(pairs.size(), false);

  auto split = [&](std::size_t k) {
    ReluPair pr = pairs[k];
    std::vector<ReluPair> rest = pairs;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
    ++st.splits;
    log("split " + t.name(pr.i) + " = relu(" + t.name(pr.j) + ")");
    Tableau t1 = t;
    active_phase(t1, pr);
    if (reluplex_rec(std::move(t1), rest, opt, st, depth + 1, model)) return true;
    Tableau t2 = t;
    inactive_phase(t2, pr);
    return reluplex_rec(std::move(t2), std::move(rest), opt, st, depth + 1, model);
  };

  for (;;) {
    ++st.simplex_calls;
    SimplexStats ss;
    if (simplex_solve(t, {}, &ss) == SimplexStatus::Unsat) {
      st.pivots += ss.pivots;
      return false;
    }
    st.pivots += ss.pivots;

    std::size_t k = pairs.size();
    for (std::size_t q = 0; q < pairs.size(); ++q)
      if (!relu_holds(t, pairs[q])) {
        k = q;
        break;
      }
    if (k == pairs.size()) {
      model = t.values();
      return true;
    }
    ReluPair pr = pairs[k];
    ++counter[k];

    const std::optional<Rational> lj = t.lower(pr.j);
    const std::optional<Rational> uj = t.upper(pr.j);
    bool splittable = (!lj || *lj < 0) && (!uj || *uj > 0);

    bool stuck = false;
    if (t.is_basic(pr.i)) {
      if (auto x = pivot_partner(t, pr.i, pr.j)) {
        t.pivot(pr.i, *x);
        ++st.pivots;
      } else {
        stuck = true;
      }
    }
    if (!stuck && t.is_basic(pr.j)) {
      if (auto x = pivot_partner(t, pr.j, pr.i)) {
        t.pivot(pr.j, *x);
        ++st.pivots;
      } else {
        stuck = true;
      }
    }
    if (!stuck) {
      ++st.repairs;
      if (!toggle[k]) {
        log("repair " + t.name(pr.i) + " := relu(" + t.name(pr.j) + ")");
        t.set_value(pr.i, relu(t.value(pr.j)));
      } else {
        log("repair " + t.name(pr.j) + " := " + t.name(pr.i));
        t.set_value(pr.j, t.value(pr.i));
      }
      toggle[k] = !toggle[k];
    }

    if (counter[k] > opt.tau || stuck) {
      if (splittable) return split(k);
      // only one phase is possible under the current bounds
      ++st.fixed;
      if (lj && *lj >= 0)
        active_phase(t, pr);
      else
        inactive_phase(t, pr);
      log("fix " + t.name(pr.i) + " = relu(" + t.name(pr.j) + ")");
      pairs.erase(pairs.begin() + static_cast<std::ptrdiff_t>(k));
      counter.erase(counter.begin() + static_cast<std::ptrdiff_t>(k));
      toggle.erase(toggle.begin() + static_cast<std::ptrdiff_t>(k));
    }
  }
}

}  // namespace detail

inline ReluplexResult reluplex_solve(const ReluplexProblem& p, const ReluplexOptions& opt = {}) {
  ReluplexResult r;
  RationalVec model;
  r.sat = detail::reluplex_rec(p.tableau, p.pairs, opt, r.stats, 0, model);
  if (r.sat) r.model.assign(model.begin(), model.begin() + static_cast<std::ptrdiff_t>(p.num_orig));
  return r;
}

}  // namespace nnv
