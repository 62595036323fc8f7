#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace nnv;

namespace {

constexpr VarId X = 0, Y = 1;

std::vector<LinConstraint> running() {
  return {{{{X, 1}, {Y, 1}}, Rel::Ge, 0}, {{{X, -2}, {Y, 1}}, Rel::Ge, 2}, {{{X, -10}, {Y, 1}}, Rel::Ge, -5}};
}

bool model_ok(const std::vector<LinConstraint>& cs, const RationalVec& x) {
  for (const auto& c : cs)
    if (!satisfies(c, x)) return false;
  return true;
}

}  // namespace

TEST(SimplexForm, RunningExample) {
  Tableau t = to_simplex_form(running(), 2);
  ASSERT_EQ(t.num_vars(), 5u);
  EXPECT_EQ(t.row(2), (LinExpr{{X, 1}, {Y, 1}}));
  EXPECT_EQ(t.row(3), (LinExpr{{X, -2}, {Y, 1}}));
  EXPECT_EQ(t.row(4), (LinExpr{{X, -10}, {Y, 1}}));
  EXPECT_EQ(t.lower(2), Rational(0));
  EXPECT_EQ(t.lower(3), Rational(2));
  EXPECT_EQ(t.lower(4), Rational(-5));
  EXPECT_FALSE(t.upper(2));
  EXPECT_FALSE(t.lower(X));
  EXPECT_FALSE(t.upper(Y));
  for (VarId v = 0; v < 5; ++v) EXPECT_EQ(t.value(v), 0);
}

TEST(SimplexForm, EqualityAndUpperBound) {
  Tableau e = to_simplex_form({{{{X, 1}}, Rel::Eq, 3}}, 1);
  EXPECT_EQ(e.lower(1), Rational(3));
  EXPECT_EQ(e.upper(1), Rational(3));
  Tableau u = to_simplex_form({{{{X, 1}}, Rel::Le, 5}}, 1);
  EXPECT_FALSE(u.lower(1));
  EXPECT_EQ(u.upper(1), Rational(5));
}

TEST(Pivot, RunningExample) {
  Tableau t = to_simplex_form(running(), 2);
  t.pivot(3, X);
  EXPECT_TRUE(t.is_basic(X));
  EXPECT_FALSE(t.is_basic(3));
  EXPECT_EQ(t.row(X), (LinExpr{{Y, Rational(1, 2)}, {3, Rational(-1, 2)}}));
  EXPECT_EQ(t.row(2), (LinExpr{{Y, Rational(3, 2)}, {3, Rational(-1, 2)}}));
  EXPECT_EQ(t.row(4), (LinExpr{{Y, -4}, {3, 5}}));
}

TEST(Pivot, ReverseRestores) {
  Tableau t = to_simplex_form(running(), 2);
  Tableau u = t;
  u.pivot(3, X);
  u.pivot(X, 3);
  EXPECT_EQ(u.rows(), t.rows());
}

TEST(Pivot, ZeroCoefficientThrows) {
  Tableau t = to_simplex_form({{{{X, 1}}, Rel::Ge, 0}}, 2);
  EXPECT_THROW(t.pivot(2, Y), SimplexError);
}

TEST(Pivot, PreservesSolutionSet) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 50; ++n) {
    std::vector<LinConstraint> cs;
    for (int k = 0; k < 3; ++k) cs.push_back(oracle::rand_constraint(rng, 3));
    Tableau t = to_simplex_form(cs, 3);
    // a random pivot on a nonzero coefficient
    std::vector<std::pair<VarId, VarId>> cand;
    for (const auto& [b, r] : t.rows())
      for (const auto& [v, c] : r) cand.emplace_back(b, v);
    if (cand.empty()) continue;
    auto [b, v] = cand[static_cast<std::size_t>(oracle::rand_int(rng, 0, static_cast<int>(cand.size()) - 1))];
    Tableau u = t;
    u.pivot(b, v);
    for (int s = 0; s < 10; ++s) {
      // a point on the original equalities
      RationalVec x(t.num_vars());
      for (VarId o = 0; o < 3; ++o) x[o] = oracle::rand_rational(rng);
      for (const auto& [bb, r] : t.rows()) x[bb] = eval_expr(r, x);
      for (const auto& [bb, r] : u.rows()) EXPECT_EQ(x[bb], eval_expr(r, x));
    }
  }
}

TEST(Solve, RunningExampleModel) {
  Tableau t = to_simplex_form(running(), 2);
  ASSERT_EQ(simplex_solve(t, {true}), SimplexStatus::Sat);
  EXPECT_EQ(t.value(X), Rational(-2, 3));
  EXPECT_EQ(t.value(Y), Rational(2, 3));
  EXPECT_TRUE(model_ok(running(), t.values()));
}

TEST(Solve, UnsatExample) {
  std::vector<LinConstraint> cs{
      {{{X, 1}, {Y, 1}}, Rel::Ge, 0}, {{{X, -1}, {Y, -2}}, Rel::Ge, 2}, {{{X, -1}, {Y, 1}}, Rel::Ge, 1}};
  Tableau t = to_simplex_form(cs, 2);
  EXPECT_EQ(simplex_solve(t, {true}), SimplexStatus::Unsat);
}

TEST(Solve, ContradictoryBounds) {
  Tableau t = to_simplex_form({{{{X, 1}}, Rel::Ge, 1}, {{{X, 1}}, Rel::Le, 0}}, 1);
  EXPECT_EQ(simplex_solve(t), SimplexStatus::Unsat);
}

TEST(Solve, AgreesWithFourierMotzkin) {
  std::mt19937_64 rng(12);
  int sat = 0;
  for (int n = 0; n < 300; ++n) {
    std::size_t vars = static_cast<std::size_t>(oracle::rand_int(rng, 1, 4));
    std::vector<LinConstraint> cs;
    int k = oracle::rand_int(rng, 1, 8);
    for (int i = 0; i < k; ++i) cs.push_back(oracle::rand_constraint(rng, vars));
    Tableau t = to_simplex_form(cs, vars);
    SimplexStats st;
    bool s = simplex_solve(t, {true, 10000}, &st) == SimplexStatus::Sat;
    ASSERT_EQ(s, oracle::fm_feasible(oracle::to_ineqs(cs, vars), vars));
    if (s) {
      ++sat;
      RationalVec x(t.values().begin(), t.values().begin() + static_cast<long>(vars));
      EXPECT_TRUE(model_ok(cs, x));
    }
  }
  EXPECT_GT(sat, 30);
  EXPECT_LT(sat, 290);
}

TEST(Lp, BoundsOfRunningExample) {
  Tableau t = to_simplex_form(running(), 2);
  auto lo = minimize(t, {{Y, 1}});
  ASSERT_EQ(lo.status, LpStatus::Optimal);
  EXPECT_EQ(lo.value, Rational(2, 3));
  Tableau u = to_simplex_form(running(), 2);
  EXPECT_EQ(maximize(u, {{Y, 1}}).status, LpStatus::Unbounded);
  Tableau w = to_simplex_form({{{{X, 1}}, Rel::Ge, 1}, {{{X, 1}}, Rel::Le, 0}}, 1);
  EXPECT_EQ(maximize(w, {{X, 1}}).status, LpStatus::Infeasible);
}

TEST(Lp, OptimumMatchesVertexEnumeration) {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 60; ++n) {
    // box plus random cuts in 2D, objective checked against a dense grid lower bound
    std::vector<LinConstraint> cs{{{{X, 1}}, Rel::Ge, -2}, {{{X, 1}}, Rel::Le, 2}, {{{Y, 1}}, Rel::Ge, -2}, {{{Y, 1}}, Rel::Le, 2}};
    for (int k = 0; k < 2; ++k) cs.push_back(oracle::rand_constraint(rng, 2));
    LinExpr obj{{X, oracle::rand_rational(rng)}, {Y, oracle::rand_rational(rng)}};
    Tableau t = to_simplex_form(cs, 2);
    auto r = maximize(t, obj);
    bool feas = oracle::fm_feasible(oracle::to_ineqs(cs, 2), 2);
    ASSERT_EQ(r.status == LpStatus::Optimal, feas);
    if (!feas) continue;
    RationalVec at(t.values().begin(), t.values().begin() + 2);
    EXPECT_TRUE(model_ok(cs, at));
    EXPECT_EQ(eval_expr(obj, at), r.value);
    // nothing feasible is better: obj >= value + 1/1000 is infeasible
    auto more = cs;
    more.push_back({obj, Rel::Ge, r.value + Rational(1, 1000)});
    EXPECT_FALSE(oracle::fm_feasible(oracle::to_ineqs(more, 2), 2));
  }
}
