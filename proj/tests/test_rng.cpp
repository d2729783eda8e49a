#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "gyromat/rng.hpp"

using namespace gyromat;

TEST(Rng, ReferenceValues) {
  // Published reference outputs of splitmix64 (state 0) and FNV-1a.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(derive_seed(42, "init"), splitmix64(42 ^ fnv1a64("init")));
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  Rng a = make_rng(7, "data"), b = make_rng(7, "data"), c = make_rng(7, "init"), d = make_rng(8, "data");
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng = make_rng(1, "test");
  const int n = 200000;
  double s = 0.0, s2 = 0.0, u = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = normal(rng);
    s += z;
    s2 += z * z;
    const double v = uniform01(rng);
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    u += v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
  EXPECT_NEAR(u / n, 0.5, 0.005);
}

TEST(Rng, IndexAndShuffle) {
  Rng rng = make_rng(2, "test");
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 5000; ++i) {
    const Index k = uniform_index(rng, 5);
    ASSERT_GE(k, 0);
    ASSERT_LT(k, 5);
    ++hits[static_cast<std::size_t>(k)];
  }
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);

  std::vector<Index> idx(50);
  std::iota(idx.begin(), idx.end(), 0);
  shuffle_indices(rng, idx);
  std::vector<Index> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 50; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
  EXPECT_FALSE(std::is_sorted(idx.begin(), idx.end()));
}

TEST(Rng, Matrices) {
  Rng rng = make_rng(3, "test");
  const Matrix s = normal_sym(rng, 6, 2.0);
  EXPECT_TRUE(s == s.transpose());
  const Matrix m = normal_matrix(rng, 3, 4, 0.0);
  EXPECT_EQ(m.norm(), 0.0);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 4);
}
