#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include <namedis/hetnet.hpp>
#include <namedis/synthetic.hpp>
#include <namedis/walker.hpp>

#include "oracles.hpp"

using namespace namedis;

namespace {

PublicationRecord record(std::string id, std::vector<std::string> coauthors, std::string venue = "",
                         std::string org = "") {
  PublicationRecord r;
  r.id = std::move(id);
  r.authors.push_back({"Wei Li", org});
  for (auto& a : coauthors) r.authors.push_back({std::move(a), ""});
  r.venue = std::move(venue);
  return r;
}

Block block_of(std::vector<PublicationRecord> recs) {
  auto b = build_block(recs, "Wei Li");
  return *b;
}

// Pubs and Author edges given as adjacency lists.
HetNet author_net(const std::vector<std::vector<std::string>>& authors) {
  HetNet net;
  for (std::size_t i = 0; i < authors.size(); ++i) net.add_pub("p" + std::to_string(i));
  for (std::size_t i = 0; i < authors.size(); ++i) {
    for (const auto& a : authors[i]) net.add_edge(static_cast<std::uint32_t>(i), NodeType::Author, a);
  }
  return net;
}

// Counts schema-conforming walks by plain recursion.
std::uint64_t count_walks(const HetNet& net, std::span<const NodeType> schema, std::size_t from,
                          std::size_t to) {
  std::function<std::uint64_t(std::size_t, std::size_t)> rec = [&](std::size_t pub, std::size_t step) {
    if (step + 1 >= schema.size()) return std::uint64_t{pub == to};
    std::uint64_t total = 0;
    for (auto a : net.attributes_of(pub, schema[step + 1])) {
      for (auto q : net.attribute(a).pubs) total += rec(q, step + 2);
    }
    return total;
  };
  return rec(from, 0);
}

HetNet random_net(std::mt19937_64& g, int pubs, int attrs, double density) {
  std::bernoulli_distribution coin(density);
  HetNet net;
  for (int i = 0; i < pubs; ++i) net.add_pub("p" + std::to_string(i));
  const NodeType types[] = {NodeType::Author, NodeType::Org, NodeType::Venue, NodeType::Year, NodeType::Word};
  for (int i = 0; i < pubs; ++i) {
    for (auto t : types) {
      for (int a = 0; a < attrs; ++a) {
        if (coin(g)) net.add_edge(static_cast<std::uint32_t>(i), t, "a" + std::to_string(a));
      }
    }
  }
  return net;
}

}  // namespace

TEST(MetaPath, ParseAndValidate) {
  EXPECT_EQ(MetaPath::parse("P-A-P").name(), "PAP");
  EXPECT_EQ(MetaPath::parse("PAPAP").hops(), 4u);
  EXPECT_EQ(MetaPath::parse("pop").primary_attribute(), NodeType::Org);
  EXPECT_THROW(MetaPath::parse("PA"), ConfigError);
  EXPECT_THROW(MetaPath::parse("PAPA"), ConfigError);
  EXPECT_THROW(MetaPath::parse("PAO"), ConfigError);
  EXPECT_THROW(MetaPath::parse("PAVOP"), ConfigError);
  EXPECT_THROW(MetaPath::parse("PQP"), ConfigError);
  EXPECT_THROW(MetaPath::parse("APA"), ConfigError);
  EXPECT_TRUE(is_supported_metapath("PYP"));
  EXPECT_FALSE(is_supported_metapath("PAPVP"));
  EXPECT_EQ(default_metapaths().size(), 4u);
}

TEST(HetNet, SharedCoauthorIsOneNode) {
  const auto b = block_of({record("p1", {"J. Smith"}), record("p2", {"Smith J"}), record("p3", {"K Lee"})});
  const auto net = build_hetnet(b);
  auto a = net.find_attribute(NodeType::Author, "j smith");
  ASSERT_TRUE(a);
  EXPECT_EQ(net.attribute(*a).pubs.size(), 2u);
  // The ambiguous name never becomes an Author node.
  EXPECT_FALSE(net.find_attribute(NodeType::Author, "li wei"));
  for (std::size_t i = 0; i < net.attribute_count(); ++i) EXPECT_GE(net.attribute(i).pubs.size(), 1u);
}

TEST(HetNet, MissingOrgMeansNoOrgEdges) {
  const auto b = block_of({record("p1", {"x y"}, "", "Tsinghua Univ."), record("p2", {"x y"})});
  const auto net = build_hetnet(b);
  EXPECT_EQ(net.attributes_of(0, NodeType::Org).size(), 1u);
  EXPECT_TRUE(net.attributes_of(1, NodeType::Org).empty());
  EXPECT_TRUE(net.find_attribute(NodeType::Org, "tsinghua univ"));
}

TEST(HetNet, OrgComesFromTheAmbiguousAuthorOnly) {
  auto r = record("p1", {}, "", "Mine");
  r.authors.push_back({"Other Person", "Theirs"});
  const auto net = build_hetnet(block_of({r}));
  EXPECT_TRUE(net.find_attribute(NodeType::Org, "mine"));
  EXPECT_FALSE(net.find_attribute(NodeType::Org, "theirs"));
}

TEST(HetNet, WordDocumentFrequencyBounds) {
  std::vector<PublicationRecord> recs;
  for (int i = 0; i < 10; ++i) {
    auto r = record("p" + std::to_string(i), {});
    r.title = "ubiquitous";                        // df 10: above 0.2 * 10
    if (i < 2) r.title += " clustering";            // df 2: kept
    if (i == 0) r.title += " singular";             // df 1: below min_count
    r.abstract = "clustering abstracts never count";  // abstract ignored for words
    recs.push_back(r);
  }
  const auto net = build_hetnet(block_of(recs));
  EXPECT_FALSE(net.find_attribute(NodeType::Word, "ubiquitous"));
  EXPECT_FALSE(net.find_attribute(NodeType::Word, "singular"));
  auto c = net.find_attribute(NodeType::Word, "clustering");
  ASSERT_TRUE(c);
  EXPECT_EQ(net.attribute(*c).pubs.size(), 2u);
  EXPECT_FALSE(net.find_attribute(NodeType::Word, "abstracts"));
}

TEST(HetNet, YearIsCategorical) {
  auto r = record("p1", {});
  r.year = 2015;
  const auto net = build_hetnet(block_of({r}));
  EXPECT_TRUE(net.find_attribute(NodeType::Year, "y2015"));
}

TEST(HetNet, SyntheticAuthorNodesMatchPools) {
  const auto s = generate_synthetic_block({}, 3);
  const auto net = build_hetnet(s.block);
  std::map<std::string, std::size_t> pool_of;
  for (std::size_t e = 0; e < s.coauthor_pools.size(); ++e) {
    for (const auto& a : s.coauthor_pools[e]) pool_of[a] = e;
  }
  std::size_t authors = 0;
  for (std::size_t k = 0; k < net.attribute_count(); ++k) {
    const auto& node = net.attribute(k);
    if (node.type != NodeType::Author) continue;
    ++authors;
    ASSERT_TRUE(pool_of.contains(node.label)) << node.label;
    for (auto p : node.pubs) EXPECT_EQ(s.entity_of[p], pool_of[node.label]);
  }
  EXPECT_EQ(authors, pool_of.size());
}

TEST(Projection, CountsSharedAuthors) {
  const auto b = block_of({record("p1", {"a b", "c d"}, "KDD"), record("p2", {"a b", "c d"}, "ICML"),
                           record("p3", {"e f"}, "KDD")});
  const auto net = build_hetnet(b);
  const auto pap = project_metapath(net, MetaPath::parse("PAP"));
  EXPECT_EQ(pap.weight(0, 1), 2u);
  EXPECT_EQ(pap.weight(0, 2), 0u);
  const auto pvp = project_metapath(net, MetaPath::parse("PVP"));
  EXPECT_EQ(pvp.weight(0, 2), 1u);
  EXPECT_EQ(pvp.weight(0, 1), 0u);
  EXPECT_EQ(pap.weight(0, 0), 0u);  // no self-loops
}

TEST(Projection, PapapChainMatchesEnumeration) {
  const auto net = author_net({{"a1"}, {"a1", "a2"}, {"a2", "a3"}, {"a3"}});
  const auto path = MetaPath::parse("PAPAP");
  const auto g = project_metapath(net, path);
  EXPECT_EQ(g.weight(0, 2), 1u);
  EXPECT_EQ(g.weight(1, 3), 1u);
  // p0-a1-p0-a1-p1, p0-a1-p1-a1-p1, p0-a1-p1-a2-p1
  EXPECT_EQ(g.weight(0, 1), 3u);
  EXPECT_EQ(g.weight(0, 3), 0u);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i != j) EXPECT_EQ(g.weight(i, j), count_walks(net, path.schema(), i, j)) << i << "," << j;
    }
  }
}

TEST(Projection, SymmetricAndMatchesEnumerationOnRandomNets) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = random_net(gen, 8, 4, 0.3);
    for (const char* name : {"PAP", "POP", "PVP", "PWP", "PYP", "PAPAP"}) {
      const auto path = MetaPath::parse(name);
      const auto g = project_metapath(net, path);
      for (std::size_t i = 0; i < 8; ++i) {
        for (const auto& nb : g.neighbors(i)) EXPECT_GT(nb.weight, 0u);
        for (std::size_t j = 0; j < 8; ++j) {
          EXPECT_EQ(g.weight(i, j), g.weight(j, i));
          if (i != j) ASSERT_EQ(g.weight(i, j), count_walks(net, path.schema(), i, j));
        }
      }
    }
  }
}

TEST(Projection, AddingAnEdgeNeverDecreasesWeights) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 30; ++trial) {
    auto net = random_net(gen, 7, 4, 0.25);
    const auto path = MetaPath::parse(trial % 2 ? "PAPAP" : "PAP");
    const auto before = project_metapath(net, path);
    net.add_edge(static_cast<std::uint32_t>(gen() % 7), NodeType::Author, "a" + std::to_string(gen() % 4));
    const auto after = project_metapath(net, path);
    for (std::size_t i = 0; i < 7; ++i) {
      for (std::size_t j = 0; j < 7; ++j) EXPECT_GE(after.weight(i, j), before.weight(i, j));
    }
  }
}

TEST(Projection, PapComponentsEqualEntitiesOnNoiseFreeBlocks) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = generate_synthetic_block({}, seed);
    const auto g = project_metapath(build_hetnet(s.block), MetaPath::parse("PAP"));
    const std::size_t n = g.pub_count();
    std::vector<int> comp(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (comp[i] >= 0) continue;
      std::queue<std::size_t> q;
      q.push(i);
      comp[i] = next;
      while (!q.empty()) {
        auto x = q.front();
        q.pop();
        for (const auto& nb : g.neighbors(x)) {
          if (comp[nb.pub] < 0) {
            comp[nb.pub] = next;
            q.push(nb.pub);
          }
        }
      }
      ++next;
    }
    std::vector<int> truth(s.entity_of.begin(), s.entity_of.end());
    EXPECT_TRUE(oracle::same_partition(comp, truth)) << "seed " << seed;
  }
}

TEST(Walks, ForcedTransitionAlternates) {
  const auto net = author_net({{"a"}, {"a"}, {}});
  const auto c = sample_walks(net, MetaPath::parse("PAP"), {3, 6, 2}, 5);
  ASSERT_EQ(c.walks.size(), 9u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(c.walks[r], (std::vector<std::uint32_t>{0, 1, 0, 1, 0, 1, 0}));
    EXPECT_EQ(c.walks[6 + r], (std::vector<std::uint32_t>{2}));  // isolated
  }
}

TEST(Walks, FirstHopFrequency) {
  // p0 shares three authors with p1 and one with p2.
  const auto net = author_net({{"a", "b", "c", "d"}, {"a", "b", "c"}, {"d"}});
  const auto c = sample_walks(net, MetaPath::parse("PAP"), {10000, 1, 1}, 99);
  std::size_t to_p1 = 0;
  for (std::size_t r = 0; r < 10000; ++r) to_p1 += c.walks[r][1] == 1;
  EXPECT_NEAR(to_p1 / 10000.0, 0.75, 0.02);
}

TEST(Walks, TransitionsPassChiSquare) {
  // Three pubs with all pairwise PAP weights distinct: w01 = 3, w02 = 1, w12 = 2.
  const auto net = author_net({{"a", "b", "c", "d"}, {"a", "b", "c", "e", "f"}, {"d", "e", "f"}});
  const auto g = project_metapath(net, MetaPath::parse("PAP"));
  ASSERT_EQ(g.weight(0, 1), 3u);
  ASSERT_EQ(g.weight(1, 2), 2u);
  const auto c = sample_walks(g, MetaPath::parse("PAP"), {10000, 1, 1}, 7);
  for (std::uint32_t start = 0; start < 3; ++start) {
    std::vector<double> obs(3, 0.0), exp(3, 0.0);
    double total = 0;
    for (const auto& nb : g.neighbors(start)) total += static_cast<double>(nb.weight);
    for (const auto& nb : g.neighbors(start)) exp[nb.pub] = 10000.0 * static_cast<double>(nb.weight) / total;
    for (std::size_t r = 0; r < 10000; ++r) obs[c.walks[start * 10000 + r][1]] += 1;
    EXPECT_EQ(obs[start], 0.0);
    std::vector<double> o, e;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != start) {
        o.push_back(obs[k]);
        e.push_back(exp[k]);
      }
    }
    EXPECT_GT(oracle::chi2_sf(oracle::chi2_stat(o, e), 1), 0.01) << "start " << start;
  }
}

TEST(Walks, ReproducibleAndThreadIndependent) {
  const auto s = generate_synthetic_block({}, 2);
  const auto net = build_hetnet(s.block);
  const auto path = MetaPath::parse("PWP");
  const auto a = sample_walks(net, path, {4, 10, 3}, 42);
  const auto b = sample_walks(net, path, {4, 10, 3}, 42);
  const auto c = sample_walks(net, path, {4, 10, 3}, 42, 3);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.walks, c.walks);
  EXPECT_NE(a.walks, sample_walks(net, path, {4, 10, 3}, 43).walks);
}

TEST(Walks, StartsAndEdgesAreValid) {
  const auto s = generate_synthetic_block({}, 6);
  const auto net = build_hetnet(s.block);
  for (const auto& path : default_metapaths()) {
    const auto g = project_metapath(net, path);
    const auto c = sample_walks(g, path, {3, 8, 2}, 1);
    for (std::size_t w = 0; w < c.walks.size(); ++w) {
      const auto& walk = c.walks[w];
      ASSERT_FALSE(walk.empty());
      EXPECT_EQ(walk[0], w / 3);
      for (std::size_t i = 1; i < walk.size(); ++i) EXPECT_GT(g.weight(walk[i - 1], walk[i]), 0u);
      EXPECT_TRUE(walk.size() == 9 || g.neighbors(walk[0]).empty());
    }
  }
}

TEST(Walks, RejectsBadParams) {
  const auto net = author_net({{"a"}, {"a"}});
  EXPECT_THROW(sample_walks(net, MetaPath::parse("PAP"), {0, 5, 1}, 1), ConfigError);
  EXPECT_THROW(sample_walks(net, MetaPath::parse("PAP"), {1, 0, 1}, 1), ConfigError);
}

TEST(ContextPairs, WindowEnumeration) {
  WalkCorpus c;
  c.pub_count = 3;
  c.walks = {{0, 1, 2}, {2}};
  const auto pairs = context_pairs(c, 1);
  EXPECT_EQ(pairs, (std::vector<ContextPair>{{0, 1}, {1, 0}, {1, 2}, {2, 1}}));
  EXPECT_THROW(context_pairs(c, 0), ConfigError);
}

TEST(ContextPairs, CountMatchesRecount) {
  const auto net = author_net({{"a"}, {"a", "b"}, {"b", "c"}, {"c"}, {"c", "d"}, {"d"}, {"e"}, {"e"}, {}, {"a"}});
  const auto path = MetaPath::parse("PAP");
  const auto g = project_metapath(net, path);
  const auto c = sample_walks(g, path, {2, 5, 1}, 8);
  for (std::size_t w = 1; w <= 4; ++w) {
    std::size_t expected = 0;
    for (const auto& walk : c.walks) {
      for (std::size_t i = 0; i < walk.size(); ++i) {
        for (std::size_t j = 0; j < walk.size(); ++j) {
          const std::size_t dist = i > j ? i - j : j - i;
          if (dist >= 1 && dist <= w && walk[i] != walk[j]) ++expected;
        }
      }
    }
    const auto pairs = context_pairs(c, w);
    EXPECT_EQ(pairs.size(), expected);
    // Support: each pair is within w hops in the projected graph.
    for (const auto& p : pairs) {
      std::vector<int> dist(g.pub_count(), -1);
      std::queue<std::uint32_t> q;
      q.push(p.center);
      dist[p.center] = 0;
      while (!q.empty()) {
        auto x = q.front();
        q.pop();
        for (const auto& nb : g.neighbors(x)) {
          if (dist[nb.pub] < 0) {
            dist[nb.pub] = dist[x] + 1;
            q.push(nb.pub);
          }
        }
      }
      ASSERT_GE(dist[p.context], 1);
      EXPECT_LE(static_cast<std::size_t>(dist[p.context]), w);
    }
  }
}

TEST(Dumps, TabSeparatedAndTypePrefixed) {
  const auto net = author_net({{"a"}, {"a"}});
  std::ostringstream h, p, w;
  dump_hetnet(net, h);
  EXPECT_EQ(h.str(), "P:p0\tA:a\nP:p1\tA:a\n");
  dump_projection(net, project_metapath(net, MetaPath::parse("PAP")), p);
  EXPECT_EQ(p.str(), "P:p0\tP:p1\t1\n");
  dump_walks(sample_walks(net, MetaPath::parse("PAP"), {1, 2, 1}, 1), net, w);
  EXPECT_EQ(w.str(), "p0 p1 p0\np1 p0 p1\n");
}
