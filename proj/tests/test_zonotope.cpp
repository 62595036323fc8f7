#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace nnv;

namespace {

RationalVec rand_eps(std::mt19937_64& rng, std::size_t m) {
  RationalVec e(m);
  for (auto& x : e) x = oracle::rand_in(rng, {-1, 1});
  return e;
}

}  // namespace

TEST(Bounds, Examples) {
  EXPECT_EQ(zono_bounds({3, 1, 1}).hi, 5);
  EXPECT_EQ(zono_bounds({7}), RInterval(7, 7));
  EXPECT_EQ(zono_bounds({0, -2}), RInterval(-2, 2));
}

TEST(Bounds, MatchCornerEnumeration) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    std::size_t m = static_cast<std::size_t>(oracle::rand_int(rng, 0, 5));
    ZonoDim d(oracle::rand_rational(rng), {});
    for (std::size_t i = 0; i < m; ++i) d.gens.push_back(oracle::rand_rational(rng));
    EXPECT_EQ(zono_bounds(d), oracle::corner_range(d, m));
  }
}

TEST(Add, Examples) {
  ZonoDim s = zono_add({0, 1, 0}, {1, 0, 1});
  EXPECT_EQ(s, (ZonoDim{1, 1, 1}));
  EXPECT_EQ(zono_bounds(s), RInterval(-1, 3));
  EXPECT_EQ(zono_add({2, 3, -1}, {0, 0, 0}), (ZonoDim{2, 3, -1}));
  EXPECT_EQ(zono_add({0, -5}, {0, 5}), (ZonoDim{0}));
}

TEST(Affine, Examples) {
  std::vector<ZonoDim> in{{1, 2, 3}, {0, 1, 1}};
  EXPECT_EQ(zono_affine(RationalVec{3, 2}, Rational(0), in), (ZonoDim{3, 8, 11}));
  std::vector<ZonoDim> one{{1, 2, -3}};
  EXPECT_EQ(zono_affine(RationalVec{1}, Rational(0), one), one[0]);
  EXPECT_EQ(zono_affine(RationalVec{-1}, Rational(0), one), (ZonoDim{-1, -2, 3}));
  EXPECT_THROW(zono_affine(RationalVec{1, 1}, Rational(0), one), std::invalid_argument);
}

TEST(Relu, Examples) {
  std::size_t m = 1;
  EXPECT_EQ(zono_relu({0, 1}, m), (ZonoDim{Rational(1, 4), Rational(1, 2), Rational(1, 4)}));
  EXPECT_EQ(m, 2u);
  std::size_t m2 = 1;
  EXPECT_EQ(zono_relu({3, 1}, m2), (ZonoDim{3, 1}));
  EXPECT_EQ(zono_relu({-3, 1}, m2), (ZonoDim{0, 0}));
  EXPECT_EQ(m2, 1u);
}

TEST(Relu, ParallelogramContainsReluGraph) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    ZonoDim d{oracle::rand_rational(rng, 4, 2), {oracle::rand_rational(rng, 4, 2)}};
    if (d.gens[0] == 0) continue;
    RInterval b = zono_bounds(d);
    std::size_t m = 1;
    ZonoDim r = zono_relu(d, m);
    for (int s = 0; s < 50; ++s) {
      RationalVec eps = rand_eps(rng, m);
      Rational in = d.at(eps), out = r.at(eps);
      if (b.lo < 0 && b.hi > 0) {
        Rational lambda = b.hi / (b.hi - b.lo);
        EXPECT_LE(out, lambda * in + b.hi * (1 - lambda));
        EXPECT_GE(out, lambda * in);
        // the point (in, relu(in)) is reached by some value of the fresh generator
        Rational eta = r.gens[1];
        Rational need = (relu(in) - lambda * in - eta) / eta;
        EXPECT_GE(need, -1);
        EXPECT_LE(need, 1);
      } else {
        EXPECT_EQ(out, relu(in));
      }
    }
  }
}

TEST(Analyze, XMinusXIsExact) {
  Graph g = load_graph(NNV_DATA_DIR "/x_minus_x.json");
  Zonotope z = zono_analyze(g, {{{Rational(1, 2), {Rational(1, 2)}}}, 1});
  ASSERT_EQ(z.dims.size(), 1u);
  EXPECT_EQ(z.dims[0], (ZonoDim{0}));
}

TEST(Analyze, PaperNetworkWithinInterval) {
  Graph g = load_graph(NNV_DATA_DIR "/affine_relu.json");
  Box box{{0, 1}, {2, 3}};
  Box zb = zono_analyze_full(g, zono_from_box(box)).output_bounds(g);
  EXPECT_TRUE(box_subset(zb, iv_analyze(g, box)));
  EXPECT_TRUE(box_subset(zb, Box{{2, 5}}));
}

TEST(Analyze, AffineNetsAreExact) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    Graph g;
    std::vector<NodeId> prev{g.add_input(), g.add_input(), g.add_input()};
    for (int l = 0; l < 2; ++l) {
      std::vector<NodeId> cur;
      for (int k = 0; k < 2; ++k) {
        RationalVec w;
        for (std::size_t j = 0; j < prev.size(); ++j) w.push_back(oracle::rand_rational(rng));
        cur.push_back(g.add_affine(w, oracle::rand_rational(rng), prev));
      }
      prev = cur;
    }
    g.set_outputs(prev);
    Box box = oracle::rand_box(rng, 3);
    Zonotope z = zono_analyze(g, zono_from_box(box));
    for (std::size_t k = 0; k < z.dims.size(); ++k) {
      RInterval exact = oracle::corner_range(z.dims[k], z.m);
      EXPECT_EQ(zono_bounds(z.dims[k]), exact);
      // vertex images of the input box give the same range
      std::optional<Rational> lo, hi;
      for (std::uint32_t mask = 0; mask < 8; ++mask) {
        RationalVec x(3);
        for (int i = 0; i < 3; ++i) x[i] = (mask >> i) & 1U ? box[i].hi : box[i].lo;
        Rational y = evaluate(g, x)[k];
        if (!lo || y < *lo) lo = y;
        if (!hi || *hi < y) hi = y;
      }
      EXPECT_EQ(exact, RInterval(*lo, *hi));
    }
  }
}

TEST(Analyze, AffineNetsMatchIntervalWithoutReuse) {
  // a single affine layer reads each input once, so the interval result is exact too
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    Graph g;
    std::vector<NodeId> in{g.add_input(), g.add_input()};
    RationalVec w{oracle::rand_rational(rng), oracle::rand_rational(rng)};
    g.set_outputs({g.add_affine(w, oracle::rand_rational(rng), in)});
    Box box = oracle::rand_box(rng, 2);
    EXPECT_EQ(zono_bounds(zono_analyze(g, zono_from_box(box)).dims[0]), iv_analyze(g, box)[0]);
  }
}

TEST(Analyze, SoundOnSamples) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    Graph g = oracle::rand_mixed_net(rng, 2, 10);
    Box box = oracle::rand_box(rng, 2);
    Zonotope in = zono_from_box(box);
    auto za = zono_analyze_full(g, in);
    Box out = za.output_bounds(g);
    for (int s = 0; s < 500; ++s) {
      RationalVec eps = rand_eps(rng, in.m);
      RationalVec x;
      for (const auto& d : in.dims) x.push_back(d.at(eps));
      Box y = oracle::point_outputs(g, x);
      for (std::size_t k = 0; k < y.size(); ++k) {
        ASSERT_TRUE(oracle::overlaps(y[k], out[k]));
        ASSERT_TRUE(oracle::overlaps(y[k], zono_bounds(za.out.dims[k])));
      }
    }
  }
}

TEST(Analyze, TighterThanInterval) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    Graph g = oracle::rand_mixed_net(rng, 2, 10);
    Box box = oracle::rand_box(rng, 2);
    EXPECT_TRUE(box_subset(zono_analyze_full(g, zono_from_box(box)).output_bounds(g), iv_analyze(g, box)));
  }
}

TEST(Analyze, GeneratorCountGrowsByUnstableRelus) {
  Graph g = load_graph(NNV_DATA_DIR "/relu_2_2_2.json");
  Zonotope z = zono_analyze(g, zono_from_box({{-1, 1}, {-1, 1}}));
  EXPECT_EQ(z.m, 4u);
  for (const auto& d : z.dims) EXPECT_LE(d.length(), z.m);
}
