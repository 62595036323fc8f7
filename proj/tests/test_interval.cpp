#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace nnv;

namespace {

RInterval iv(Rational a, Rational b) { return {std::move(a), std::move(b)}; }

}  // namespace

TEST(Add, Examples) {
  EXPECT_EQ(iv_add(iv(1, 5), iv(100, 200)), iv(101, 205));
  EXPECT_EQ(iv_add(iv(0, 0), iv(-3, 7)), iv(-3, 7));
  EXPECT_EQ(iv_add(iv(-1, 1), iv(-1, 1)), iv(-2, 2));
}

TEST(Mul, Examples) {
  EXPECT_EQ(iv_mul(iv(-1, 1), iv(-3, -2)), iv(-3, 3));
  EXPECT_EQ(iv_mul(iv(2, 3), iv(4, 5)), iv(8, 15));
  EXPECT_EQ(iv_mul(iv(0, 0), iv(-3, 7)), iv(0, 0));
}

TEST(Affine, Examples) {
  Box a{iv(5, 10), iv(20, 30)};
  EXPECT_EQ(iv_affine<Rational>(RationalVec{3, 2}, Rational(0), a), iv(55, 90));
  Box b{iv(0, 1)};
  EXPECT_EQ(iv_affine<Rational>(RationalVec{-1}, Rational(0), b), iv(-1, 0));
  Box c{iv(0, 1), iv(2, 3)};
  EXPECT_EQ(iv_affine<Rational>(RationalVec{2, 1}, Rational(0), c), iv(2, 5));
  EXPECT_THROW(iv_affine<Rational>(RationalVec{1, 1}, Rational(0), b), std::invalid_argument);
}

TEST(Monotone, Relu) {
  EXPECT_EQ(iv_relu(iv(3, 5)), iv(3, 5));
  EXPECT_EQ(iv_relu(iv(-2, -1)), iv(0, 0));
  Box x{iv(2, 3)};
  EXPECT_EQ(iv_relu(iv_affine<Rational>(RationalVec{3}, Rational(0), x)), iv(6, 9));
}

TEST(Monotone, SigmoidEnclosesFloat) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 500; ++t) {
    Rational a = oracle::rand_rational(rng, 40, 7), b = a + oracle::rand_rational(rng, 20, 7) * (t % 2);
    if (b < a) std::swap(a, b);
    RInterval s = iv_sigmoid(iv(a, b));
    EXPECT_LE(s.lo, from_double(sigmoid(to_double(a))));
    EXPECT_GE(s.hi, from_double(sigmoid(to_double(b))));
    EXPECT_GE(s.lo, 0);
    EXPECT_LE(s.hi, 1);
  }
}

TEST(Square, Examples) {
  EXPECT_EQ(iv_square(iv(-1, 1)), iv(0, 1));
  EXPECT_EQ(iv_square(iv(2, 3)), iv(4, 9));
  EXPECT_EQ(iv_square(iv(-3, -2)), iv(4, 9));
  EXPECT_TRUE(iv_square(iv(-1, 2)).subset_of(iv_mul(iv(-1, 2), iv(-1, 2))));
}

TEST(Interval, RejectsInvertedBounds) { EXPECT_THROW(iv(2, 1), std::invalid_argument); }

TEST(Analyze, PaperNetwork) {
  Graph g = load_graph(NNV_DATA_DIR "/affine_relu.json");
  EXPECT_EQ(iv_analyze(g, {iv(0, 1), iv(2, 3)}), (Box{iv(2, 5)}));
}

TEST(Analyze, XMinusXLosesPrecision) {
  Graph g = load_graph(NNV_DATA_DIR "/x_minus_x.json");
  EXPECT_EQ(iv_analyze(g, {iv(0, 1)}), (Box{iv(-1, 1)}));
}

TEST(Analyze, DimensionMismatch) {
  Graph g = load_graph(NNV_DATA_DIR "/affine_relu.json");
  EXPECT_THROW(iv_analyze(g, {iv(0, 1)}), GraphError);
}

TEST(Analyze, PointBoxesAreExact) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    Graph g = oracle::rand_mixed_net(rng, 3, 12, false, true);
    RationalVec x = oracle::rand_point(rng, oracle::rand_box(rng, 3));
    Box pt;
    for (const auto& v : x) pt.push_back(RInterval::point(v));
    Box out = iv_analyze(g, pt);
    RationalVec y = evaluate(g, x);
    for (std::size_t k = 0; k < y.size(); ++k) EXPECT_EQ(out[k], RInterval::point(y[k]));
  }
}

TEST(Analyze, SoundOnSamples) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    Graph g = oracle::rand_mixed_net(rng, 2, 10);
    Box box = oracle::rand_box(rng, 2);
    Box out = iv_analyze(g, box);
    for (int s = 0; s < 500; ++s) {
      Box y = oracle::point_outputs(g, oracle::rand_point(rng, box));
      for (std::size_t k = 0; k < y.size(); ++k) ASSERT_TRUE(oracle::overlaps(y[k], out[k]));
    }
  }
}

TEST(Analyze, MonotoneInInput) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    Graph g = oracle::rand_mixed_net(rng, 2, 10);
    Box outer = oracle::rand_box(rng, 2);
    Box inner;
    for (const auto& b : outer) {
      Rational a = oracle::rand_in(rng, b), c = oracle::rand_in(rng, b);
      inner.push_back(a < c ? iv(a, c) : iv(c, a));
    }
    EXPECT_TRUE(box_subset(iv_analyze(g, inner), iv_analyze(g, outer)));
  }
}
