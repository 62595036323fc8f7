#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace nnv;

namespace {

constexpr Method kAbstract[] = {Method::Interval, Method::Zonotope, Method::Polyhedron};

Property with_net(const json& j, std::shared_ptr<const Graph> g) {
  return property_from_json(j, {}, [g](const std::string&) { return g; });
}

std::shared_ptr<const Graph> difference_net() {
  auto g = std::make_shared<Graph>();
  NodeId a = g->add_input(), b = g->add_input();
  g->set_outputs({g->add_affine({1, -1}, 0, {a, b})});
  return g;
}

PostFormula class_post(std::size_t y) { return PostFormula::atom(ClassEquals{"r", y}); }

}  // namespace

TEST(Precondition, BallsAndSynonyms) {
  Box b = std::get<Box>(abstract_linf_ball({1, 2}, Rational(1, 2), Method::Interval));
  EXPECT_EQ(b, (Box{{Rational(1, 2), Rational(3, 2)}, {Rational(3, 2), Rational(5, 2)}}));
  bool inexact = false;
  Box c = std::get<Box>(abstract_l2_ball({0, 0}, 1, Method::Interval, &inexact));
  EXPECT_TRUE(inexact);
  EXPECT_EQ(c, (Box{{-1, 1}, {-1, 1}}));
  Box tiny = std::get<Box>(abstract_l2_ball({3}, Rational(1, 1000), Method::Interval));
  EXPECT_EQ(tiny[0].hi - tiny[0].lo, Rational(1, 500));
  EXPECT_EQ(abstract_synonyms({{1, 3}, {5}}), (Box{{1, 3}, {5, 5}}));
  EXPECT_THROW(abstract_synonyms({{1}, {}}), std::invalid_argument);
  EXPECT_EQ(std::get<Zonotope>(abstract_linf_ball({1}, 1, Method::Zonotope)).dims[0], (ZonoDim{1, 1}));
}

TEST(Precondition, L2BallSamplesInsideBox) {
  std::mt19937_64 rng(1);
  RationalVec c{1, -2};
  Rational eps(3, 2);
  Box b = std::get<Box>(abstract_l2_ball(c, eps, Method::Interval));
  int kept = 0;
  while (kept < 300) {
    RationalVec x = oracle::rand_point(rng, b);
    Rational d = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]);
    if (d > eps * eps) continue;
    ++kept;
    EXPECT_TRUE(box_contains(b, x));
  }
}

TEST(Precondition, SynonymTuplesInsideBox) {
  std::vector<RationalVec> sets{{1, 4, Rational(1, 2)}, {-2, 0}, {7}, {3, 5, 6}};
  Box b = abstract_synonyms(sets);
  for (const auto& a : sets[0])
    for (const auto& c : sets[1])
      for (const auto& d : sets[2])
        for (const auto& e : sets[3]) EXPECT_TRUE(box_contains(b, RationalVec{a, c, d, e}));
}

TEST(CheckClass, IntervalExamples) {
  Box proven{{Rational(1, 10), Rational(1, 5)}, {Rational(3, 10), Rational(2, 5)}};
  EXPECT_EQ(check_class(proven, 2).outcome, Outcome::Proven);
  Box unknown{{Rational(1, 10), Rational(1, 5)}, {Rational(3, 20), Rational(2, 5)}};
  Verdict v = check_class(unknown, 2);
  EXPECT_EQ(v.outcome, Outcome::Unknown);
  EXPECT_EQ(v.failing, (std::pair<std::size_t, std::size_t>{2, 1}));
  // equality is not separation
  EXPECT_EQ(check_class(Box{{0, 1}, {1, 2}}, 2).outcome, Outcome::Unknown);
  EXPECT_THROW(check_class(proven, 3), std::out_of_range);
  EXPECT_THROW(check_class(proven, 0), std::out_of_range);
}

TEST(CheckClass, ZonotopeExample) {
  Zonotope z{{{2, 1, 0}, {4, 1, 1}}, 2};
  EXPECT_EQ(check_class(z, 2).outcome, Outcome::Proven);
  EXPECT_EQ(check_class(z, 1).outcome, Outcome::Unknown);
  // the box of the same zonotope does not separate the outputs
  EXPECT_EQ(check_class(Box{zono_bounds(z.dims[0]), zono_bounds(z.dims[1])}, 2).outcome, Outcome::Unknown);
}

TEST(CheckClass, PolyhedronExample) {
  Polyhedron p = poly_from_box({{-1, 1}, {-1, 1}});
  p.dims = {{2, 1, 0}, {4, 1, 1}};
  EXPECT_EQ(check_class(p, 2).outcome, Outcome::Proven);
  EXPECT_EQ(check_class(p, 1).outcome, Outcome::Unknown);
}

TEST(Verify, ClassFiles) {
  Property yes = load_property(NNV_DATA_DIR "/class_proven.json");
  Property no = load_property(NNV_DATA_DIR "/class_unknown.json");
  for (Method m : kAbstract) {
    EXPECT_EQ(verify(yes, m).outcome, Outcome::Proven) << method_name(m);
    Verdict v = verify(no, m);
    EXPECT_EQ(v.outcome, Outcome::Unknown) << method_name(m);
    EXPECT_TRUE(v.failing.has_value());
  }
  EXPECT_EQ(verify_smt(no).outcome, Outcome::Refuted);
}

TEST(Verify, XMinusXPrecisionGap) {
  Property p = load_property(NNV_DATA_DIR "/x_minus_x_property.json");
  Verdict iv = verify(p, Method::Interval);
  EXPECT_EQ(iv.outcome, Outcome::Unknown);
  EXPECT_EQ(iv.bounds, (Box{{-1, 1}}));
  EXPECT_EQ(verify(p, Method::Zonotope).outcome, Outcome::Proven);
  EXPECT_EQ(verify(p, Method::Polyhedron).outcome, Outcome::Proven);
}

TEST(Verify, RobustReluNet) {
  Property p = load_property(NNV_DATA_DIR "/robust_relu.json");
  for (Method m : kAbstract) EXPECT_EQ(verify(p, m).outcome, Outcome::Proven) << method_name(m);
  EXPECT_EQ(verify_smt(p).outcome, Outcome::Proven);
}

TEST(Verify, ThresholdOnLargeInputs) {
  auto g = std::make_shared<Graph>();
  NodeId d = g->add_input(), v = g->add_input();
  NodeId h = g->add_node(fn::Relu{}, {g->add_affine({Rational(1, 1000), -1}, -50, {d, v})});
  g->set_outputs({h});
  json j = json::parse(R"({"inputs": [{"name": "x", "dim": 2}],
    "pre": [{"coeffs": {"x[0]": "1"}, "rel": ">=", "rhs": "55947"},
            {"coeffs": {"x[0]": "1"}, "rel": "<=", "rhs": "60760"},
            {"coeffs": {"x[1]": "1"}, "rel": ">=", "rhs": "1145"},
            {"coeffs": {"x[1]": "1"}, "rel": "<=", "rhs": "1200"}],
    "assign": [{"out": "r", "net": "acas", "in": "x"}],
    "post": [{"coeffs": {"r": "1"}, "rel": "<=", "rhs": "0"}]})");
  Property p = with_net(j, g);
  Verdict iv = verify(p, Method::Interval);
  EXPECT_EQ(iv.outcome, Outcome::Proven);
  EXPECT_EQ(iv.bounds, (Box{{0, 0}}));
}

TEST(Verify, RelationalPreconditionUsedByPolyhedron) {
  json j = json::parse(R"({"inputs": [{"name": "x", "dim": 2}],
    "pre": [{"linf": {"var": "x", "center": ["0", "0"], "eps": "1"}},
            {"coeffs": {"x[0]": "1", "x[1]": "-1"}, "rel": "=", "rhs": "0"}],
    "assign": [{"out": "r", "net": "diff", "in": "x"}],
    "post": [{"coeffs": {"r": "1"}, "rel": "=", "rhs": "0"}]})");
  Property p = with_net(j, difference_net());
  EXPECT_EQ(verify(p, Method::Interval).outcome, Outcome::Unknown);
  EXPECT_EQ(verify(p, Method::Polyhedron).outcome, Outcome::Proven);
  EXPECT_EQ(verify_smt(p).outcome, Outcome::Proven);
}

TEST(Verify, EmptyPreconditionIsProven) {
  json j = json::parse(R"({"inputs": [{"name": "x", "dim": 2}],
    "pre": [{"linf": {"var": "x", "center": ["0", "0"], "eps": "1"}},
            {"coeffs": {"x[0]": "1"}, "rel": ">=", "rhs": "2"}],
    "assign": [{"out": "r", "net": "diff", "in": "x"}],
    "post": [{"coeffs": {"r": "1"}, "rel": "=", "rhs": "5"}]})");
  Property p = with_net(j, difference_net());
  for (Method m : kAbstract) EXPECT_EQ(verify(p, m).outcome, Outcome::Proven) << method_name(m);
}

TEST(Verify, Errors) {
  json unbounded = json::parse(R"({"inputs": [{"name": "x", "dim": 2}],
    "pre": [{"coeffs": {"x[0]": "1"}, "rel": ">=", "rhs": "0"}],
    "assign": [{"out": "r", "net": "diff", "in": "x"}],
    "post": [{"coeffs": {"r": "1"}, "rel": "<=", "rhs": "0"}]})");
  EXPECT_THROW(verify(with_net(unbounded, difference_net()), Method::Interval), VerifyError);
  EXPECT_THROW(verify(load_property(NNV_DATA_DIR "/monotone.json"), Method::Interval), VerifyError);
  EXPECT_THROW(verify(load_property(NNV_DATA_DIR "/robust_relu.json"), Method::Smt), std::invalid_argument);
}

TEST(Verify, L2PreconditionIsFlagged) {
  json j = json::parse(R"({"inputs": [{"name": "x", "dim": 2}],
    "pre": [{"l2": {"var": "x", "center": ["2", "1"], "eps": "1/10"}}],
    "assign": [{"out": "r", "net": "relu_2_2_2.json", "in": "x"}],
    "post": [{"class": {"of": "r", "label": 1}}]})");
  Property p = property_from_json(j, NNV_DATA_DIR);
  Verdict v = verify(p, Method::Interval);
  EXPECT_EQ(v.outcome, Outcome::Proven);
  EXPECT_TRUE(v.pre_inexact);
}

TEST(Verify, NeverRefutedAndOneSided) {
  std::mt19937_64 rng(2);
  int proven = 0;
  for (int t = 0; t < 60; ++t) {
    Graph g = oracle::rand_relu_net(rng, 2, 2, 2, 2);
    auto net = std::make_shared<const Graph>(g);
    Box box = oracle::rand_box(rng, 2);
    PostFormula post = t % 2 ? oracle::rand_linear_post(rng, g, box) : class_post(static_cast<std::size_t>(1 + t % 4 / 2));
    Property p = oracle::box_property(net, box, post);
    bool any = false;
    for (Method m : kAbstract) {
      Verdict v = verify(p, m);
      EXPECT_NE(v.outcome, Outcome::Refuted);
      any = any || v.proven();
    }
    if (any) {
      ++proven;
      EXPECT_EQ(verify_smt(p).outcome, Outcome::Proven) << "instance " << t;
    }
  }
  EXPECT_GT(proven, 5);
}

TEST(Verify, PrecisionOrderingOfDomains) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 60; ++t) {
    Graph g = oracle::rand_relu_net(rng, 2, 2, 3, 2);
    auto net = std::make_shared<const Graph>(g);
    Box box = oracle::rand_box(rng, 2);
    PostFormula post = t % 2 ? oracle::rand_linear_post(rng, g, box) : class_post(1 + static_cast<std::size_t>(t % 4 / 2));
    Property p = oracle::box_property(net, box, post);
    bool iv = verify(p, Method::Interval).proven();
    bool zo = verify(p, Method::Zonotope).proven();
    bool po = verify(p, Method::Polyhedron).proven();
    if (iv) EXPECT_TRUE(zo && po) << "instance " << t;
    if (zo) EXPECT_TRUE(po) << "instance " << t;
  }
}

TEST(Sweep, RobustReluRadius) {
  // the interval domain separates the classes exactly for radii below 7/8
  Property p = load_property(NNV_DATA_DIR "/robust_relu.json");
  SweepResult r = eps_sweep(p, Method::Interval);
  EXPECT_LT(r.eps, Rational(7, 8));
  EXPECT_GT(r.eps, Rational(7, 8) - Rational(1, 1000));
  EXPECT_TRUE(verify(with_radius(p, r.eps), Method::Interval).proven());
  EXPECT_FALSE(verify(with_radius(p, Rational(7, 8)), Method::Interval).proven());
  EXPECT_GT(r.calls, 12u);
}

TEST(Sweep, NeedsOneBall) {
  EXPECT_THROW(with_radius(load_property(NNV_DATA_DIR "/class_proven.json"), 1), VerifyError);
}

TEST(Json, VerdictFields) {
  Verdict v = verify(load_property(NNV_DATA_DIR "/class_unknown.json"), Method::Zonotope);
  json j = verdict_json(v);
  EXPECT_EQ(j["verdict"], "unknown");
  EXPECT_EQ(j["method"], "zonotope");
  EXPECT_EQ(j["bounds"].size(), 2u);
  EXPECT_EQ(j["failing_pair"], json::array({2, 1}));
  EXPECT_TRUE(j["timing"].contains("seconds"));
  EXPECT_FALSE(j["flags"]["delta_relaxed"].get<bool>());
  EXPECT_FALSE(j.contains("counterexample"));
  Verdict r = verify_smt(load_property(NNV_DATA_DIR "/add_one_property.json"));
  EXPECT_TRUE(verdict_json(r).contains("counterexample"));
}
