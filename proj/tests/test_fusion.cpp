#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include <namedis/fusion.hpp>
#include <namedis/hetnet.hpp>

#include "oracles.hpp"

using namespace namedis;

namespace {

Matrix<double> random_matrix(std::mt19937_64& g, std::size_t r, std::size_t c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix<double> m(r, c);
  for (auto& x : m.data()) x = nd(g);
  return m;
}

PublicationRecord pub(std::string id, std::vector<std::string> coauthors) {
  PublicationRecord r;
  r.id = std::move(id);
  r.authors.push_back({"Wei Li", ""});
  for (auto& c : coauthors) r.authors.push_back({c, ""});
  return r;
}

// Two entities of `per` pubs; table 0 separates them, table 1 is noise.
struct Planted {
  std::vector<Matrix<double>> tables;
  AdjacencyMatrix a;
};

Planted planted(std::uint64_t seed, std::size_t per = 10, std::size_t d = 8) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const std::size_t n = 2 * per;
  Planted p{{Matrix<double>(n, d), random_matrix(g, n, d, 1.5)}, AdjacencyMatrix(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) p.tables[0](i, k) = 0.1 * nd(g);
    p.tables[0](i, i / per) += 2.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (i / per == j / per) p.a.connect(i, j);
    }
  }
  return p;
}

}  // namespace

TEST(Adjacency, CoauthorSharing) {
  std::vector<PublicationRecord> recs{pub("p0", {"Bob Stone"}), pub("p1", {"Bob Stone", "Ann Ray"}),
                                      pub("p2", {"Carl Dunn"}), pub("p3", {})};
  const auto block = *build_block(recs, "Wei Li");
  const auto a = build_coauthor_adjacency(build_hetnet(block));
  EXPECT_TRUE(a(0, 1));
  EXPECT_TRUE(a(1, 0));
  // Every pub lists the ambiguous name itself; that never links them.
  EXPECT_FALSE(a(0, 2));
  EXPECT_FALSE(a(2, 3));
  EXPECT_FALSE(a(0, 0));
  EXPECT_EQ(a.edge_count(), 1u);
}

TEST(Adjacency, FromLabels) {
  std::vector<PublicationRecord> recs{pub("p0", {}), pub("p1", {}), pub("p2", {}), pub("p3", {})};
  const auto block = *build_block(recs, "Wei Li");
  const std::vector<AuthorEntity> ents{{"e1", {"p0", "p2", "zz"}}, {"e2", {"p1"}}, {"e3", {"p3"}}};
  const auto a = build_label_adjacency(block, ents);
  EXPECT_TRUE(a(0, 2));
  EXPECT_EQ(a.edge_count(), 1u);
}

TEST(Attention, ZeroQueryGivesZeroCoefficients) {
  std::mt19937_64 g(1);
  std::vector<Matrix<double>> tables{random_matrix(g, 6, 4), random_matrix(g, 6, 4), random_matrix(g, 6, 4)};
  auto p = AttentionParams::initialize(4, 5, 3);
  std::fill(p.q.begin(), p.q.end(), 0.0);
  const auto w = attention_coefficients(tables, p);
  for (double x : w) EXPECT_EQ(x, 0.0);
  for (double a : attention_softmax(w)) EXPECT_DOUBLE_EQ(a, 1.0 / 3.0);
}

TEST(Attention, SoftmaxCases) {
  const auto a = attention_softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_GE(a[1], 0.0);
  EXPECT_LT(a[1], 1e-300);
  const auto b = attention_softmax(std::vector<double>{0.0, std::log(3.0)});
  EXPECT_NEAR(b[0], 0.25, 1e-15);
  EXPECT_NEAR(b[1], 0.75, 1e-15);
  EXPECT_TRUE(attention_softmax(std::vector<double>{}).empty());
}

TEST(Attention, HandCoefficientAndDuplicateRows) {
  AttentionParams p{Matrix<double>(1, 1, 1.0), {0.0}, {2.0}};
  std::vector<Matrix<double>> one{Matrix<double>(1, 1, std::atanh(0.5))};
  EXPECT_NEAR(attention_coefficients(one, p)[0], 1.0, 1e-15);

  // Repeating every row leaves the per-path mean unchanged.
  std::mt19937_64 g(3);
  const auto p2 = AttentionParams::initialize(3, 4, 9);
  std::vector<Matrix<double>> tables{random_matrix(g, 5, 3), random_matrix(g, 5, 3)};
  std::vector<Matrix<double>> doubled;
  for (const auto& t : tables) {
    Matrix<double> d(10, 3);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t k = 0; k < 3; ++k) d(i, k) = t(i % 5, k);
    }
    doubled.push_back(d);
  }
  const auto w = attention_coefficients(tables, p2), wd = attention_coefficients(doubled, p2);
  for (std::size_t n = 0; n < 2; ++n) EXPECT_NEAR(w[n], wd[n], 1e-14);

  const auto a = attention_softmax(std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(a[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(a[1], 1.0 / 3.0, 1e-15);
}

TEST(Fusion, StructuralSimilarityIsCosine) {
  Matrix<double> z(2, 2, 0.0);
  z(0, 0) = 1.0;
  z(1, 0) = z(1, 1) = 1.0;
  const auto m = structural_similarity(z);
  EXPECT_NEAR(m.values(0, 1), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(m.values(0, 1), m.values(1, 0));
}

TEST(Attention, SoftmaxShiftInvariantAndSumsToOne) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> w(1 + g() % 6);
    for (auto& x : w) x = u(g);
    const double c = u(g);
    auto shifted = w;
    for (auto& x : shifted) x += c;
    const auto a = attention_softmax(w), b = attention_softmax(shifted);
    double s = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      EXPECT_NEAR(a[k], b[k], 1e-12);
      EXPECT_GE(a[k], 0.0);
      s += a[k];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Attention, PermutationEquivariant) {
  std::mt19937_64 g(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 2 + g() % 3;
    std::vector<Matrix<double>> tables;
    for (std::size_t k = 0; k < m; ++k) tables.push_back(random_matrix(g, 7, 3));
    const auto p = AttentionParams::initialize(3, 6, g());
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    std::vector<Matrix<double>> permuted;
    for (auto k : perm) permuted.push_back(tables[k]);
    const auto a = attention_softmax(attention_coefficients(tables, p));
    const auto b = attention_softmax(attention_coefficients(permuted, p));
    for (std::size_t k = 0; k < m; ++k) EXPECT_NEAR(b[k], a[perm[k]], 1e-14);
  }
}

TEST(Fusion, IdentityAndConvexity) {
  std::mt19937_64 g(6);
  std::vector<Matrix<double>> tables{random_matrix(g, 5, 3), random_matrix(g, 5, 3)};
  const auto one = fuse_embeddings(tables, std::vector<double>{1.0, 0.0});
  EXPECT_EQ(one.z, tables[0]);
  const auto half = fuse_embeddings(tables, std::vector<double>{0.5, 0.5});
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double lo = std::min(tables[0](i, k), tables[1](i, k));
      const double hi = std::max(tables[0](i, k), tables[1](i, k));
      EXPECT_GE(half.z(i, k), lo - 1e-15);
      EXPECT_LE(half.z(i, k), hi + 1e-15);
      EXPECT_NEAR(half.z(i, k), 0.5 * (tables[0](i, k) + tables[1](i, k)), 1e-15);
    }
  }
  EXPECT_THROW(fuse_embeddings(tables, std::vector<double>{1.0}), ConfigError);
  std::vector<Matrix<double>> ragged{Matrix<double>(5, 3), Matrix<double>(4, 3)};
  EXPECT_THROW(fuse_embeddings(ragged, std::vector<double>{0.5, 0.5}), ConfigError);
}

TEST(Decoder, ReconstructValues) {
  Matrix<double> z(3, 2, 0.0);
  z(0, 0) = 1.0;
  z(1, 0) = std::log(3.0);
  z(2, 1) = 4.0;
  const auto a = reconstruct_adjacency(z);
  EXPECT_NEAR(a(0, 1), 0.75, 1e-15);
  EXPECT_DOUBLE_EQ(a(0, 2), 0.5);
  EXPECT_EQ(a(1, 1), 0.0);
  EXPECT_EQ(a(1, 0), a(0, 1));
}

TEST(AttentionLoss, ZeroEmbeddingsGiveLog2) {
  std::vector<Matrix<double>> tables{Matrix<double>(4, 3, 0.0), Matrix<double>(4, 3, 0.0)};
  const auto p = AttentionParams::initialize(3, 4, 1);
  const std::vector<LabeledPair> pairs{{0, 1, 1.0}, {0, 2, 0.0}, {2, 3, 0.0}};
  EXPECT_NEAR(attention_loss(tables, p, pairs), std::log(2.0), 1e-15);
  EXPECT_THROW(attention_loss(tables, p, std::vector<LabeledPair>{}), ConfigError);
}

TEST(AttentionLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 g(7);
  auto close = [](double fd, double an) { return std::abs(fd - an) <= 1e-6 + 1e-4 * std::abs(an); };
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + g() % 3, n = 3 + g() % 4, d = 2 + g() % 3, h = 2 + g() % 4;
    std::vector<Matrix<double>> tables;
    for (std::size_t k = 0; k < m; ++k) tables.push_back(random_matrix(g, n, d, 0.7));
    auto p = AttentionParams::initialize(d, h, g());
    for (auto& x : p.b) x = std::uniform_real_distribution<double>(-0.5, 0.5)(g);
    std::vector<LabeledPair> pairs;
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t j = i + 1; j < n; ++j) {
        if (g() % 2) pairs.push_back({i, j, static_cast<double>(g() % 2)});
      }
    }
    if (pairs.empty()) pairs.push_back({0, 1, 1.0});
    AttentionGradient grad;
    attention_loss(tables, p, pairs, &grad, true);
    ASSERT_EQ(grad.tables.size(), m);
    auto fd = [&](double& x) {
      const double saved = x;
      const double v = oracle::central_difference([&](double y) { x = y; return attention_loss(tables, p, pairs); }, saved);
      x = saved;
      return v;
    };
    for (std::size_t k = 0; k < h; ++k) {
      EXPECT_PRED2(close, fd(p.q[k]), grad.q[k]) << "q" << k;
      EXPECT_PRED2(close, fd(p.b[k]), grad.b[k]) << "b" << k;
      for (std::size_t c = 0; c < d; ++c) EXPECT_PRED2(close, fd(p.W(k, c)), grad.W(k, c));
    }
    for (std::size_t t = 0; t < m; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) EXPECT_PRED2(close, fd(tables[t](i, c)), grad.tables[t](i, c));
      }
    }
  }
}

TEST(TrainingPairs, PositivesAndNegatives) {
  const auto pl = planted(1, 4);  // 8 pubs, 12 positives, 16 zeros
  Rng r(1);
  const auto pairs = sample_training_pairs(pl.a, 1.0, r);
  std::size_t pos = 0;
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const auto& p : pairs) {
    EXPECT_LT(p.i, p.j);
    EXPECT_EQ(p.target, pl.a(p.i, p.j) ? 1.0 : 0.0);
    pos += p.target > 0;
    EXPECT_TRUE(seen.emplace(p.i, p.j).second);
  }
  EXPECT_EQ(pos, 12u);
  EXPECT_EQ(pairs.size(), 24u);
  Rng r2(1);
  EXPECT_EQ(sample_training_pairs(pl.a, 5.0, r2).size(), 28u);
}

TEST(AttentionTraining, ZeroEpochsLeavesParameters) {
  const auto pl = planted(2);
  AttentionHyper h;
  h.epochs = 0;
  h.hidden = 6;
  const auto init = AttentionParams::initialize(8, 6, 9);
  const auto r = train_attention(pl.tables, pl.a, h, init);
  EXPECT_EQ(r.params.W, init.W);
  EXPECT_EQ(r.params.b, init.b);
  EXPECT_EQ(r.params.q, init.q);
  EXPECT_TRUE(r.epoch_loss.empty());
  // No positive pairs: nothing to learn from either.
  h.epochs = 10;
  const auto r2 = train_attention(pl.tables, AdjacencyMatrix(pl.a.size()), h, init);
  EXPECT_EQ(r2.params.q, init.q);
}

TEST(AttentionTraining, LossTraceNonIncreasing) {
  const auto pl = planted(3);
  AttentionHyper h;
  h.epochs = 100;
  h.hidden = 16;
  const auto r = train_attention(pl.tables, pl.a, h);
  ASSERT_EQ(r.epoch_loss.size(), 101u);
  for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) {
    EXPECT_LE(r.epoch_loss[e], r.epoch_loss[e - 1] * 1.01) << "epoch " << e;
  }
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

// Against a brute-force grid over the mixing weight: the informative path
// must get the larger weight both ways.
TEST(AttentionTraining, NoisePathGetsSmallerWeight) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto pl = planted(seed);
    std::vector<LabeledPair> all;
    for (std::uint32_t i = 0; i < pl.a.size(); ++i) {
      for (std::uint32_t j = i + 1; j < pl.a.size(); ++j) all.push_back({i, j, pl.a(i, j) ? 1.0 : 0.0});
    }
    double best_a = 0, best_loss = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 100; ++s) {
      const double a0 = s / 100.0;
      const auto f = fuse_embeddings(pl.tables, std::vector<double>{a0, 1 - a0});
      double loss = 0;
      for (const auto& p : all) {
        const double x = dot(f.z.row(p.i), f.z.row(p.j));
        loss += p.target * std::log1p(std::exp(-x)) + (1 - p.target) * std::log1p(std::exp(x));
      }
      if (loss < best_loss) best_loss = loss, best_a = a0;
    }
    EXPECT_GT(best_a, 0.5) << "seed " << seed;
    AttentionHyper h;
    h.seed = seed;
    h.hidden = 16;
    const auto r = train_attention(pl.tables, pl.a, h);
    EXPECT_GT(r.fused.alpha[0], r.fused.alpha[1]) << "seed " << seed;
  }
}

TEST(AttentionTraining, FineTuneMovesTables) {
  const auto pl = planted(4, 5);
  AttentionHyper h;
  h.epochs = 5;
  h.hidden = 4;
  EXPECT_EQ(train_attention(pl.tables, pl.a, h).tables[1], pl.tables[1]);
  h.fine_tune = true;
  EXPECT_NE(train_attention(pl.tables, pl.a, h).tables[1], pl.tables[1]);
}

TEST(AttentionTraining, Errors) {
  const auto pl = planted(5, 3);
  AttentionHyper h;
  EXPECT_THROW(train_attention({}, pl.a, h), ConfigError);
  EXPECT_THROW(train_attention(pl.tables, AdjacencyMatrix(2), h), ConfigError);
  EXPECT_THROW(train_attention(pl.tables, pl.a, h, AttentionParams::initialize(3, 4, 1)), ConfigError);
}
