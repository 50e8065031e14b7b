#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "hetnet.hpp"
#include "random.hpp"

namespace namedis {

struct WalkParams {
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 20;  // pub-hops per walk
  std::size_t window = 5;

  bool operator==(const WalkParams&) const = default;
};

// Meta-path walks recorded as pub sequences; attribute hops are elided.
// Walks are ordered by (start pub, repetition).
struct WalkCorpus {
  std::string path;
  WalkParams params;
  std::uint64_t seed = 0;
  std::size_t pub_count = 0;
  std::vector<std::vector<std::uint32_t>> walks;

  bool operator==(const WalkCorpus&) const = default;
};

struct ContextPair {
  std::uint32_t center;
  std::uint32_t context;
  bool operator==(const ContextPair&) const = default;
};

namespace detail {

// Per-pub cumulative projected weights for exact integer sampling.
class TransitionTable {
 public:
  explicit TransitionTable(const ProjectedGraph& g) : cumulative_(g.pub_count()) {
    for (std::size_t i = 0; i < g.pub_count(); ++i) {
      std::uint64_t total = 0;
      for (const auto& nb : g.neighbors(i)) {
        total += nb.weight;
        cumulative_[i].push_back(total);
      }
    }
  }

  std::optional<std::uint32_t> next(const ProjectedGraph& g, std::uint32_t cur, Rng& rng) const {
    const auto& cum = cumulative_[cur];
    if (cum.empty()) return std::nullopt;
    const std::uint64_t r = rng.below(cum.back());
    auto it = std::upper_bound(cum.begin(), cum.end(), r);
    return g.neighbors(cur)[static_cast<std::size_t>(it - cum.begin())].pub;
  }

 private:
  std::vector<std::vector<std::uint64_t>> cumulative_;
};

}  // namespace detail

// Each hop moves to a neighbor with probability proportional to the projected
// weight. A pub without neighbors under the path yields the walk [pub].
inline WalkCorpus sample_walks(const ProjectedGraph& graph, const MetaPath& path,
                               const WalkParams& params, std::uint64_t seed,
                               std::size_t threads = 1) {
  if (params.walks_per_node < 1) throw ConfigError("walks_per_node must be >= 1");
  if (params.walk_length < 1) throw ConfigError("walk_length must be >= 1");
  const std::size_t n = graph.pub_count();
  WalkCorpus corpus;
  corpus.path = path.name();
  corpus.params = params;
  corpus.seed = seed;
  corpus.pub_count = n;
  corpus.walks.resize(n * params.walks_per_node);
  const detail::TransitionTable table(graph);

  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      const auto start = static_cast<std::uint32_t>(w / params.walks_per_node);
      const std::size_t rep = w % params.walks_per_node;
      Rng rng(mix_seed(seed, {start, rep}));
      auto& walk = corpus.walks[w];
      walk.push_back(start);
      for (std::size_t hop = 0; hop < params.walk_length; ++hop) {
        auto next = table.next(graph, walk.back(), rng);
        if (!next) break;
        walk.push_back(*next);
      }
    }
  };

  const std::size_t total = corpus.walks.size();
  threads = std::max<std::size_t>(1, std::min(threads, total));
  if (threads == 1) {
    run(0, total);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(total, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
  }
  return corpus;
}

inline WalkCorpus sample_walks(const HetNet& net, const MetaPath& path, const WalkParams& params,
                               std::uint64_t seed, std::size_t threads = 1) {
  return sample_walks(project_metapath(net, path), path, params, seed, threads);
}

template <typename Visitor>
void for_each_context_pair(const WalkCorpus& corpus, std::size_t window, Visitor&& visit) {
  if (window < 1) throw ConfigError("context window must be >= 1");
  for (const auto& walk : corpus.walks) {
    const std::size_t len = walk.size();
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(len - 1, i + window);
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j != i && walk[j] != walk[i]) visit(ContextPair{walk[i], walk[j]});
      }
    }
  }
}

// All (center, context) pairs within `window` positions of each other.
inline std::vector<ContextPair> context_pairs(const WalkCorpus& corpus, std::size_t window) {
  std::vector<ContextPair> out;
  for_each_context_pair(corpus, window, [&](ContextPair p) { out.push_back(p); });
  return out;
}

// Pub frequency over all walks.
inline std::vector<std::uint64_t> walk_frequencies(const WalkCorpus& corpus) {
  std::vector<std::uint64_t> freq(corpus.pub_count, 0);
  for (const auto& walk : corpus.walks) {
    for (auto p : walk) ++freq[p];
  }
  return freq;
}

// One walk per line, space-separated pub ids.
inline void dump_walks(const WalkCorpus& corpus, const HetNet& net, std::ostream& out) {
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i) out << ' ';
      out << net.pub_id(walk[i]);
    }
    out << '\n';
  }
}

}  // namespace namedis
