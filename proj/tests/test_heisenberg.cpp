#include <array>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nilwalk/heisenberg.hpp"

using namespace nilwalk;

namespace {

// 3x3 unipotent matrices as an independent oracle for the group law.
using mat3 = std::array<std::array<i128, 3>, 3>;

mat3 to_matrix(const lattice_elem& g) { return {{{1, g.x, g.z}, {0, 1, g.y}, {0, 0, 1}}}; }

lattice_elem from_matrix(const mat3& m) { return {m[0][1], m[1][2], m[0][2]}; }

mat3 matmul(const mat3& a, const mat3& b) {
  mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// Adjugate inverse of a unipotent matrix (determinant 1).
mat3 matinv(const mat3& m) {
  return {{{1, -m[0][1], m[0][1] * m[1][2] - m[0][2]}, {0, 1, -m[1][2]}, {0, 0, 1}}};
}

const lattice_elem A = gen_a<i128>(), B = gen_b<i128>(), C = gen_c<i128>();

lattice_elem L(long x, long y, long z) { return {x, y, z}; }

std::vector<lattice_elem> mu0_word(std::size_t len, std::mt19937_64& rng) {
  const std::array<lattice_elem, 5> alphabet{identity<i128>(), A, inverse(A), B, inverse(B)};
  std::uniform_int_distribution<int> pick(0, 4);
  std::vector<lattice_elem> w(len);
  for (auto& g : w) g = alphabet[pick(rng)];
  return w;
}

}  // namespace

TEST(HeisenbergMul, IdentityIsNeutral) {
  const auto g = L(3, -4, 7);
  EXPECT_EQ(mul(identity<i128>(), g), g);
  EXPECT_EQ(mul(g, identity<i128>()), g);
}

TEST(HeisenbergMul, MatchesMatrixProduct) {
  EXPECT_EQ(mul(A, B), from_matrix(matmul(to_matrix(A), to_matrix(B))));
  EXPECT_EQ(mul(A, B), L(1, 1, 1));
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> c(-1000000, 1000000);
  for (int i = 0; i < 2000; ++i) {
    const auto a = L(c(rng), c(rng), c(rng)), b = L(c(rng), c(rng), c(rng));
    ASSERT_EQ(mul(a, b), from_matrix(matmul(to_matrix(a), to_matrix(b))));
  }
}

TEST(HeisenbergMul, CommutatorIdentities) {
  EXPECT_EQ(commutator(A, B), C);
  EXPECT_EQ(commutator(inverse(A), inverse(B)), C);
  EXPECT_EQ(commutator(A, inverse(B)), inverse(C));
  EXPECT_EQ(commutator(inverse(A), B), inverse(C));
  EXPECT_EQ(inverse(C), L(0, 0, -1));
}

TEST(HeisenbergMul, NormalFormCzByAx) {
  auto power = [](lattice_elem g, int k) {
    lattice_elem r{};
    const auto step = k >= 0 ? g : inverse(g);
    for (int i = 0; i < std::abs(k); ++i) r = mul(r, step);
    return r;
  };
  for (int x = -3; x <= 3; ++x)
    for (int y = -3; y <= 3; ++y)
      for (int z = -3; z <= 3; ++z) EXPECT_EQ(mul(mul(power(C, z), power(B, y)), power(A, x)), L(x, y, z));
}

TEST(HeisenbergMul, Associativity) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> c(-1000000, 1000000);
  for (int i = 0; i < 10000; ++i) {
    const auto a = L(c(rng), c(rng), c(rng)), b = L(c(rng), c(rng), c(rng)), d = L(c(rng), c(rng), c(rng));
    ASSERT_EQ(mul(mul(a, b), d), mul(a, mul(b, d)));
  }
}

TEST(HeisenbergMul, OverflowIsReported) {
  const i128 big = static_cast<i128>(1) << 100;
  const lattice_elem a{big, 0, 0}, b{0, big, 0};
  EXPECT_THROW(mul(a, b), arithmetic_overflow);
  const lattice_elem top{0, 0, ~(static_cast<i128>(1) << 127)};
  EXPECT_THROW(mul(top, C), arithmetic_overflow);
}

TEST(HeisenbergInverse, Examples) {
  EXPECT_EQ(inverse(identity<i128>()), identity<i128>());
  EXPECT_EQ(inverse(L(1, 1, 1)), L(-1, -1, 0));
  EXPECT_EQ(inverse(L(1, 0, 0)), L(-1, 0, 0));
  EXPECT_EQ(inverse(L(1, 1, 1)), from_matrix(matinv(to_matrix(L(1, 1, 1)))));
}

TEST(HeisenbergInverse, ProductWithInverseIsIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long> c(-1000000, 1000000);
  for (int i = 0; i < 1000; ++i) {
    const auto a = L(c(rng), c(rng), c(rng));
    ASSERT_EQ(mul(a, inverse(a)), identity<i128>());
    ASSERT_EQ(mul(inverse(a), a), identity<i128>());
    ASSERT_EQ(inverse(a), from_matrix(matinv(to_matrix(a))));
  }
}

TEST(WordProduct, Examples) {
  EXPECT_EQ(word_product(std::vector<lattice_elem>{}), identity<i128>());
  EXPECT_EQ(word_product(std::vector{A}), A);
  EXPECT_EQ(word_product(std::vector{A, B}), L(1, 1, 1));
  EXPECT_EQ(word_product(std::vector{B, A}), L(1, 1, 0));
}

TEST(WordProduct, ConcatenationIsAssociative) {
  std::mt19937_64 rng(5);
  const auto u = mu0_word(37, rng), v = mu0_word(53, rng);
  auto uv = u;
  uv.insert(uv.end(), v.begin(), v.end());
  EXPECT_EQ(word_product(uv), mul(word_product(u), word_product(v)));
}

TEST(HFunctional, Examples) {
  using V = vec2<long>;
  EXPECT_EQ(h_functional(std::vector<V>{{3, 4}}), 0);
  EXPECT_EQ(h_functional(std::vector<V>{{1, 0}, {0, 1}}), 1);
  EXPECT_EQ(h_functional(std::vector<V>{{0, 1}, {1, 0}}), 0);
}

TEST(HFunctional, MatchesDoubleSum) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<long> c(-5, 5);
  std::vector<vec2<long>> w(60);
  for (auto& v : w) v = {c(rng), c(rng)};
  long h = 0, twice_star = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      h += w[i][0] * w[j][1];
      twice_star += w[i][0] * w[j][1] - w[i][1] * w[j][0];
    }
  EXPECT_EQ(h_functional(w), h);
  EXPECT_EQ(twice_h_star(w), twice_star);
}

TEST(HStar, Examples) {
  using V = vec2<long>;
  EXPECT_EQ(twice_h_star(std::vector<V>{{2, 5}}), 0);
  EXPECT_EQ(twice_h_star(std::vector<V>{{1, 0}, {0, 1}}), 1);  // H* = 1/2
  EXPECT_EQ(twice_h_star(std::vector<V>{{1, 0}, {1, 0}}), 0);
  EXPECT_DOUBLE_EQ(h_star(std::vector<vec2<double>>{{1, 0}, {0, 1}}), 0.5);
}

TEST(HStar, AdjacentSwapFlipsPairContribution) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<long> c(-4, 4);
  for (int it = 0; it < 500; ++it) {
    std::vector<vec2<long>> w(12);
    for (auto& v : w) v = {c(rng), c(rng)};
    const std::size_t i = static_cast<std::size_t>(it) % 11;
    auto s = w;
    std::swap(s[i], s[i + 1]);
    // Only the pair (i, i+1) changes order, so 2H* moves by twice its wedge.
    EXPECT_EQ(twice_h_star(s), twice_h_star(w) - 2 * (w[i][0] * w[i + 1][1] - w[i][1] * w[i + 1][0]));
    if (w[i] != w[i + 1] && w[i][0] * w[i + 1][1] != w[i][1] * w[i + 1][0]) {
      // a two-letter word alone: H* changes sign
      const std::vector<vec2<long>> pair{w[i], w[i + 1]}, rev{w[i + 1], w[i]};
      EXPECT_EQ(twice_h_star(pair), -twice_h_star(rev));
    }
    std::shuffle(s.begin(), s.end(), rng);
    vec2<long> a{}, b{};
    for (std::size_t k = 0; k < w.size(); ++k) a[0] += w[k][0], a[1] += w[k][1], b[0] += s[k][0], b[1] += s[k][1];
    EXPECT_EQ(a, b);
  }
}

TEST(ProductFormula, Examples) {
  EXPECT_EQ(product_formula(std::vector{A, B}), L(1, 1, 1));
  EXPECT_EQ(product_formula(std::vector<lattice_elem>{}), identity<i128>());
}

TEST(ProductFormula, MatchesFoldOnRandomWords) {
  std::mt19937_64 rng(13);
  for (std::size_t len : {1u, 2u, 10u, 100u, 1000u}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto w = mu0_word(len, rng);
      ASSERT_EQ(product_formula(w), word_product(w));
    }
  }
  std::uniform_int_distribution<long> c(-50, 50);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<lattice_elem> w(40);
    for (auto& g : w) g = L(c(rng), c(rng), c(rng));
    ASSERT_EQ(product_formula(w), word_product(w));
  }
}

TEST(ProductFormula, RealWords) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  std::vector<real_elem> w(200);
  for (auto& g : w) g = {nd(rng), nd(rng), nd(rng)};
  const auto a = product_formula(w), b = word_product(w);
  EXPECT_NEAR(a.x, b.x, 1e-9);
  EXPECT_NEAR(a.y, b.y, 1e-9);
  EXPECT_NEAR(a.z, b.z, 1e-9 * (1 + std::abs(b.z)));
}

TEST(Dilation, Examples) {
  const real_elem g{1.5, -2.0, 0.75};
  EXPECT_EQ(dilate(dilation(1.0), g), g);
  EXPECT_EQ(dilate(i128{2}, L(1, 1, 1)), L(2, 2, 4));
  const double N = 1234.0;
  const auto back = dilate(dilation(1.0 / std::sqrt(N)), dilate(dilation(std::sqrt(N)), g));
  EXPECT_NEAR(back.x, g.x, 1e-12 * std::abs(g.x));
  EXPECT_NEAR(back.y, g.y, 1e-12 * std::abs(g.y));
  EXPECT_NEAR(back.z, g.z, 1e-12 * std::abs(g.z));
  EXPECT_THROW(dilation(0.0), numeric_domain_error);
  EXPECT_THROW(dilation(-1.0), numeric_domain_error);
}

TEST(Dilation, SemigroupLaw) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = u(rng), t = u(rng);
    const real_elem g{u(rng) - 5, u(rng) - 5, u(rng) - 5};
    const auto a = dilate(dilation(s), dilate(dilation(t), g));
    const auto b = dilate(compose(dilation(s), dilation(t)), g);
    ASSERT_NEAR(a.x, b.x, 1e-12 * std::abs(b.x));
    ASSERT_NEAR(a.y, b.y, 1e-12 * std::abs(b.y));
    ASSERT_NEAR(a.z, b.z, 1e-12 * std::abs(b.z));
  }
  for (long s = 1; s <= 5; ++s)
    for (long t = 1; t <= 5; ++t) EXPECT_EQ(dilate(i128{s}, dilate(i128{t}, L(3, -2, 5))), dilate(i128{s * t}, L(3, -2, 5)));
}

TEST(Dilation, IsAutomorphism) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<long> c(-1000, 1000);
  for (int i = 0; i < 1000; ++i) {
    const auto a = L(c(rng), c(rng), c(rng)), b = L(c(rng), c(rng), c(rng));
    const i128 t = 1 + i % 7;
    ASSERT_EQ(dilate(t, mul(a, b)), mul(dilate(t, a), dilate(t, b)));
  }
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const real_elem a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
    const dilation d(0.3 + std::abs(u(rng)));
    const auto l = dilate(d, mul(a, b)), r = mul(dilate(d, a), dilate(d, b));
    ASSERT_NEAR(l.z, r.z, 1e-12 * (1 + std::abs(r.z)));
    ASSERT_NEAR(l.x, r.x, 1e-12 * (1 + std::abs(r.x)));
  }
}
