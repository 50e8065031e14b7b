#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "embed.hpp"
#include "similarity.hpp"

namespace namedis {

struct DocVectorConfig {
  std::size_t dim = 100;
  std::size_t epochs = 20;
  std::size_t negatives = 5;
  std::size_t min_count = 2;
  float initial_lr = 0.025f;
  float min_lr = 1e-4f;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  ExecutionMode mode = ExecutionMode::Deterministic;
};

struct DocVectorTable {
  Matrix<float> vectors;  // one row per document, input order
  std::vector<std::string> vocabulary;
  std::vector<std::uint64_t> counts;
  DocVectorConfig config;
  // Mean negative-sampling loss on a fixed evaluation subset: [0] before
  // training, [e] after epoch e. Empty when nothing was trained.
  std::vector<double> epoch_loss;
};

// Title, abstract and keywords of each pub, tokenized.
inline std::vector<std::vector<std::string>> build_doc_corpus(const Block& block) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(block.size());
  for (const auto& rec : block.pubs) docs.push_back(tokenize_text(rec.title, rec.abstract, rec.keywords));
  return docs;
}

// Distributed bag-of-words paragraph vectors: each document vector predicts
// the document's words against sampled negatives. Documents with identical
// (vocabulary-filtered) token lists share one vector, and training runs in a
// canonical content order, so the result does not depend on input order.
// Documents with no in-vocabulary tokens keep their random initialization,
// seeded by `keys[i]` when keys are given and by position otherwise.
inline DocVectorTable train_doc_vectors(const std::vector<std::vector<std::string>>& docs,
                                        const DocVectorConfig& cfg,
                                        std::span<const std::string> keys = {}) {
  if (cfg.dim < 2) throw ConfigError("document vector dimension must be >= 2");
  if (!keys.empty() && keys.size() != docs.size()) throw ConfigError("one key per document required");
  DocVectorTable out;
  out.config = cfg;

  std::map<std::string, std::uint64_t> counts;
  for (const auto& d : docs) {
    for (const auto& t : d) ++counts[t];
  }
  std::map<std::string, std::uint32_t> index;
  for (const auto& [tok, c] : counts) {
    if (c >= cfg.min_count) {
      index.emplace(tok, static_cast<std::uint32_t>(out.vocabulary.size()));
      out.vocabulary.push_back(tok);
      out.counts.push_back(c);
    }
  }

  std::map<std::vector<std::uint32_t>, std::uint32_t> groups;
  std::vector<std::int64_t> group_of(docs.size(), -1);
  std::vector<std::vector<std::uint32_t>> filtered(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& t : docs[i]) {
      if (auto it = index.find(t); it != index.end()) filtered[i].push_back(it->second);
    }
    if (!filtered[i].empty()) groups.try_emplace(filtered[i], 0);
  }
  std::uint32_t g = 0;
  for (auto& [content, id] : groups) id = g++;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!filtered[i].empty()) group_of[i] = groups.at(filtered[i]);
  }

  const float half = 0.5f / static_cast<float>(cfg.dim);
  EmbeddingTable group_table;
  group_table.tag = "doc";
  group_table.vectors = Matrix<float>(groups.size(), cfg.dim);
  std::vector<ContextPair> pairs;
  for (const auto& [content, id] : groups) {
    std::string signature;
    for (auto t : content) signature += out.vocabulary[t] + '\n';
    Rng rng(mix_seed(cfg.seed, {fnv1a("doc-init"), fnv1a(signature)}));
    fill_uniform(group_table.vectors.row(id), rng, half);
    for (auto t : content) pairs.push_back({id, t});
  }

  if (!pairs.empty() && cfg.epochs > 0) {
    NegativeSampler sampler(out.counts, cfg.negatives);
    SkipGramHyper hyper;
    hyper.epochs = cfg.epochs;
    hyper.initial_lr = cfg.initial_lr;
    hyper.min_lr = cfg.min_lr;
    hyper.seed = mix_seed(cfg.seed, "doc-train");
    hyper.threads = cfg.threads;
    hyper.mode = cfg.mode;
    const Matrix<float> words(out.vocabulary.size(), cfg.dim, 0.0f);
    auto trained = train_skipgram(pairs, group_table, sampler, hyper, &words);
    group_table.vectors = std::move(trained.table.vectors);
    for (double j : trained.epoch_objective) out.epoch_loss.push_back(-j);
  }

  out.vectors = Matrix<float>(docs.size(), cfg.dim);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto row = out.vectors.row(i);
    if (group_of[i] >= 0) {
      auto src = group_table.vectors.row(static_cast<std::size_t>(group_of[i]));
      std::copy(src.begin(), src.end(), row.begin());
    } else {
      const std::uint64_t key = keys.empty() ? static_cast<std::uint64_t>(i) : fnv1a(keys[i]);
      Rng rng(mix_seed(cfg.seed, {fnv1a("doc-empty"), key}));
      fill_uniform(row, rng, half);
    }
  }
  return out;
}

inline SimilarityMatrix semantic_similarity(const DocVectorTable& table) {
  return cosine_similarity(table.vectors, SimilarityRole::Semantic);
}

}  // namespace namedis
