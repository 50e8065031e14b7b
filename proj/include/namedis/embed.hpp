#pragma once

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "hetnet.hpp"
#include "matrix.hpp"
#include "random.hpp"
#include "walker.hpp"

namespace namedis {

enum class ExecutionMode { Deterministic, Parallel };

struct InitRecord {
  std::uint64_t seed = 0;
  std::string source;
  bool operator==(const InitRecord&) const = default;
};

// One vector per pub, in block order.
struct EmbeddingTable {
  std::string tag;
  std::vector<std::string> ids;
  Matrix<float> vectors;
  InitRecord init;

  std::size_t size() const { return vectors.rows(); }
  std::size_t dim() const { return vectors.cols(); }
};

// ---------------------------------------------------------------------------
// Negative sampling

// Draws negatives from unigram^power over the supplied frequencies.
class NegativeSampler {
 public:
  static constexpr int kMaxRedraws = 10;

  NegativeSampler(std::span<const std::uint64_t> frequencies, std::size_t negatives,
                  double power = 0.75)
      : negatives_(negatives) {
    if (negatives < 1) throw ConfigError("negative sample count must be >= 1");
    std::vector<double> w(frequencies.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = frequencies[i] > 0 ? std::pow(static_cast<double>(frequencies[i]), power) : 0.0;
    }
    dist_ = DiscreteSampler(w);
    if (dist_.empty()) throw ConfigError("negative sampling distribution has no support");
  }

  static NegativeSampler from_walks(const WalkCorpus& corpus, std::size_t negatives) {
    const auto freq = walk_frequencies(corpus);
    return NegativeSampler(freq, negatives);
  }

  std::size_t negatives() const { return negatives_; }
  std::size_t support_size() const { return dist_.size(); }
  double probability(std::size_t i) const { return dist_.probability(i); }

  std::uint32_t sample(Rng& rng) const { return static_cast<std::uint32_t>(dist_(rng)); }

  // T draws; a draw equal to `positive` is redrawn a bounded number of times.
  void draw(std::uint32_t positive, Rng& rng, std::vector<std::uint32_t>& out) const {
    out.resize(negatives_);
    for (auto& x : out) {
      x = sample(rng);
      for (int r = 0; r < kMaxRedraws && x == positive; ++r) x = sample(rng);
    }
  }

  std::vector<std::uint32_t> draw(std::uint32_t positive, Rng& rng) const {
    std::vector<std::uint32_t> out;
    draw(positive, rng, out);
    return out;
  }

 private:
  std::size_t negatives_;
  DiscreteSampler dist_;
};

// ---------------------------------------------------------------------------
// Skip-gram with negative sampling: per-pair objective and gradient
//
//   J = log s(z . u_c) + sum_t log s(-z . u_t)
//   dJ/dz   = (1 - s(z.u_c)) u_c - sum_t s(z.u_t) u_t
//   dJ/du_c = (1 - s(z.u_c)) z
//   dJ/du_t = -s(z.u_t) z

template <typename T>
double sgns_objective(std::span<const T> center, std::span<const T> context,
                      std::span<const std::span<const T>> negatives) {
  double j = log_sigmoid(static_cast<double>(dot(center, context)));
  for (auto neg : negatives) j += log_sigmoid(-static_cast<double>(dot(center, neg)));
  return j;
}

template <typename T>
struct SgnsGradient {
  std::vector<T> center;
  std::vector<T> context;
  std::vector<std::vector<T>> negatives;
};

template <typename T>
SgnsGradient<T> sgns_gradient(std::span<const T> center, std::span<const T> context,
                              std::span<const std::span<const T>> negatives) {
  const std::size_t d = center.size();
  SgnsGradient<T> g{std::vector<T>(d, T{}), std::vector<T>(d, T{}), {}};
  const T gc = static_cast<T>(1.0 - sigmoid(static_cast<double>(dot(center, context))));
  axpy(gc, context, std::span<T>(g.center));
  axpy(gc, center, std::span<T>(g.context));
  for (auto neg : negatives) {
    const T gt = static_cast<T>(-sigmoid(static_cast<double>(dot(center, neg))));
    axpy(gt, neg, std::span<T>(g.center));
    std::vector<T> gn(d, T{});
    axpy(gt, center, std::span<T>(gn));
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

// Center and context tables for one skip-gram model. Gradient ascent steps
// follow the word2vec order: each target row is updated as soon as its
// gradient is known, the center row once at the end.
class SkipGramModel {
 public:
  SkipGramModel(Matrix<float> center, Matrix<float> context)
      : center_(std::move(center)), context_(std::move(context)), scratch_(center_.cols()) {
    if (center_.cols() != context_.cols()) throw ConfigError("center/context dimension mismatch");
  }

  const Matrix<float>& center() const { return center_; }
  const Matrix<float>& context() const { return context_; }
  Matrix<float>& center() { return center_; }
  Matrix<float>& context() { return context_; }

  double objective(std::uint32_t c, std::uint32_t ctx,
                   std::span<const std::uint32_t> negatives) const {
    double j = log_sigmoid(static_cast<double>(dot(center_.row(c), context_.row(ctx))));
    for (auto t : negatives) j += log_sigmoid(-static_cast<double>(dot(center_.row(c), context_.row(t))));
    return j;
  }

  // Returns the pair objective evaluated before the update.
  double step(std::uint32_t c, std::uint32_t ctx, std::span<const std::uint32_t> negatives,
              float lr) {
    auto z = center_.row(c);
    std::fill(scratch_.begin(), scratch_.end(), 0.0f);
    double objective = 0.0;
    auto target = [&](std::uint32_t t, float label) {
      auto u = context_.row(t);
      const double score = static_cast<double>(dot(std::span<const float>(z), std::span<const float>(u)));
      objective += label > 0 ? log_sigmoid(score) : log_sigmoid(-score);
      const float g = lr * (label - static_cast<float>(sigmoid(score)));
      for (std::size_t k = 0; k < z.size(); ++k) {
        scratch_[k] += g * u[k];
        u[k] += g * z[k];
      }
    };
    target(ctx, 1.0f);
    for (auto t : negatives) target(t, 0.0f);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += scratch_[k];
    return objective;
  }

  // Same update for concurrent use: rows are read and written through
  // relaxed atomics, so racing threads may lose updates but never tear.
  static double hogwild_step(Matrix<float>& center, Matrix<float>& context, std::uint32_t c,
                             std::uint32_t ctx, std::span<const std::uint32_t> negatives,
                             float lr, std::vector<float>& z, std::vector<float>& acc) {
    auto load = [](float& x) { return std::atomic_ref<float>(x).load(std::memory_order_relaxed); };
    auto store = [](float& x, float v) {
      std::atomic_ref<float>(x).store(v, std::memory_order_relaxed);
    };
    const std::size_t d = center.cols();
    z.resize(d);
    acc.assign(d, 0.0f);
    auto zrow = center.row(c);
    for (std::size_t k = 0; k < d; ++k) z[k] = load(zrow[k]);
    double objective = 0.0;
    auto target = [&](std::uint32_t t, float label) {
      auto u = context.row(t);
      double score = 0.0;
      for (std::size_t k = 0; k < d; ++k) score += static_cast<double>(z[k] * load(u[k]));
      objective += label > 0 ? log_sigmoid(score) : log_sigmoid(-score);
      const float g = lr * (label - static_cast<float>(sigmoid(score)));
      for (std::size_t k = 0; k < d; ++k) {
        const float uk = load(u[k]);
        acc[k] += g * uk;
        store(u[k], uk + g * z[k]);
      }
    };
    target(ctx, 1.0f);
    for (auto t : negatives) target(t, 0.0f);
    for (std::size_t k = 0; k < d; ++k) store(zrow[k], load(zrow[k]) + acc[k]);
    return objective;
  }

 private:
  Matrix<float> center_;
  Matrix<float> context_;
  std::vector<float> scratch_;
};

struct SkipGramHyper {
  std::size_t epochs = 5;
  float initial_lr = 0.025f;
  float min_lr = 1e-4f;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  ExecutionMode mode = ExecutionMode::Deterministic;
  // Pairs used for the per-epoch objective trace (fixed subset, fixed negatives).
  std::size_t eval_pairs = 20000;
};

struct SkipGramResult {
  EmbeddingTable table;
  Matrix<float> context;
  // Mean per-pair objective on the evaluation subset: [0] before training,
  // [e] after epoch e.
  std::vector<double> epoch_objective;
};

namespace detail {

inline void check_finite_rows(const SkipGramModel& model, const ContextPair& p,
                              std::span<const std::uint32_t> negs, std::size_t step) {
  bool ok = all_finite(model.center().row(p.center)) && all_finite(model.context().row(p.context));
  for (auto t : negs) ok = ok && all_finite(model.context().row(t));
  if (!ok) {
    throw StageError("skip-gram produced a non-finite update at step " + std::to_string(step));
  }
}

}  // namespace detail

// Stochastic gradient ascent on the negative-sampling objective. Center rows
// start from `init`, context rows from zero (unless `context_init` is given).
inline SkipGramResult train_skipgram(std::span<const ContextPair> pairs, const EmbeddingTable& init,
                                     const NegativeSampler& sampler, const SkipGramHyper& hyper,
                                     const Matrix<float>* context_init = nullptr) {
  if (pairs.empty()) throw ConfigError("skip-gram training needs at least one context pair");
  const std::size_t n = init.size(), d = init.dim();
  if (sampler.support_size() != (context_init ? context_init->rows() : n)) {
    throw ConfigError("negative sampler support does not match the context table");
  }
  SkipGramModel model(init.vectors,
                      context_init ? *context_init : Matrix<float>(n, d, 0.0f));

  // Fixed evaluation subset and negatives for a comparable objective trace.
  std::vector<std::uint32_t> eval_idx(pairs.size());
  for (std::size_t i = 0; i < eval_idx.size(); ++i) eval_idx[i] = static_cast<std::uint32_t>(i);
  Rng eval_rng(mix_seed(hyper.seed, "eval"));
  if (eval_idx.size() > hyper.eval_pairs) {
    eval_rng.shuffle(eval_idx);
    eval_idx.resize(hyper.eval_pairs);
  }
  std::vector<std::vector<std::uint32_t>> eval_negs(eval_idx.size());
  for (std::size_t i = 0; i < eval_idx.size(); ++i) {
    sampler.draw(pairs[eval_idx[i]].context, eval_rng, eval_negs[i]);
  }
  auto evaluate = [&] {
    if (eval_idx.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < eval_idx.size(); ++i) {
      const auto& p = pairs[eval_idx[i]];
      s += model.objective(p.center, p.context, eval_negs[i]);
    }
    return s / static_cast<double>(eval_idx.size());
  };

  SkipGramResult result;
  result.epoch_objective.push_back(evaluate());

  const double total_steps = static_cast<double>(hyper.epochs) * static_cast<double>(pairs.size());
  auto lr_at = [&](double done) {
    const double lr = hyper.initial_lr * (1.0 - done / total_steps);
    return static_cast<float>(std::max<double>(lr, hyper.min_lr));
  };

  std::vector<std::uint32_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  const bool parallel = hyper.mode == ExecutionMode::Parallel && hyper.threads > 1;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng order_rng(mix_seed(hyper.seed, {0x0e, epoch}));
    order_rng.shuffle(order);
    const double base = static_cast<double>(epoch) * static_cast<double>(pairs.size());
    if (!parallel) {
      Rng rng(mix_seed(hyper.seed, {0x7a, epoch}));
      std::vector<std::uint32_t> negs;
      for (std::size_t s = 0; s < order.size(); ++s) {
        const auto& p = pairs[order[s]];
        sampler.draw(p.context, rng, negs);
        model.step(p.center, p.context, negs, lr_at(base + static_cast<double>(s)));
        detail::check_finite_rows(model, p, negs, static_cast<std::size_t>(base) + s);
      }
    } else {
      const std::size_t threads = std::min(hyper.threads, order.size());
      const std::size_t chunk = (order.size() + threads - 1) / threads;
      std::vector<std::exception_ptr> errors(threads);
      {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
          pool.emplace_back([&, t] {
            try {
              Rng rng(mix_seed(hyper.seed, {0x7b, epoch, t}));
              std::vector<std::uint32_t> negs;
              std::vector<float> z, acc;
              const std::size_t b = t * chunk, e = std::min(order.size(), b + chunk);
              for (std::size_t s = b; s < e; ++s) {
                const auto& p = pairs[order[s]];
                sampler.draw(p.context, rng, negs);
                // Shards advance in lockstep, so progress ~ threads * local step.
                const double done = base + static_cast<double>((s - b) * threads);
                const double j = SkipGramModel::hogwild_step(model.center(), model.context(),
                                                             p.center, p.context, negs,
                                                             lr_at(done), z, acc);
                if (!std::isfinite(j)) {
                  throw StageError("skip-gram produced a non-finite update at step " +
                                   std::to_string(static_cast<std::size_t>(base) + s));
                }
              }
            } catch (...) {
              errors[t] = std::current_exception();
            }
          });
        }
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      if (!all_finite(model.center().data()) || !all_finite(model.context().data())) {
        throw StageError("skip-gram produced non-finite values in epoch " + std::to_string(epoch));
      }
    }
    result.epoch_objective.push_back(evaluate());
  }

  result.table = init;
  result.table.vectors = model.center();
  result.context = model.context();
  return result;
}

// Mean log p(context | center) under the full softmax over all context rows.
// Reference evaluator for tiny tables only.
inline double softmax_log_likelihood(const Matrix<float>& center, const Matrix<float>& context,
                                     std::span<const ContextPair> pairs) {
  if (context.rows() > 200) throw ConfigError("full softmax reference is limited to 200 rows");
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  std::vector<double> scores(context.rows());
  for (const auto& p : pairs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < context.rows(); ++u) {
      scores[u] = static_cast<double>(dot(center.row(p.center), context.row(u)));
      mx = std::max(mx, scores[u]);
    }
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    total += scores[p.context] - mx - std::log(z);
  }
  return total / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Initial vectors

struct InitParams {
  std::size_t epochs = 5;
  std::size_t negatives = 5;
  float initial_lr = 0.025f;
};

// Tokens describing one pub from the point of view of a meta-path's
// attribute type: co-author keys, org/venue words, year tag or title words.
inline std::vector<std::string> init_tokens(const PublicationRecord& rec, std::string_view block_key,
                                            NodeType type) {
  switch (type) {
    case NodeType::Author:
      return record_attributes(rec, block_key, NodeType::Author);
    case NodeType::Org: {
      std::vector<std::string> out;
      for (auto i : matching_authors(rec, block_key)) {
        for (auto& t : tokenize_text(rec.authors[i].org)) out.push_back(std::move(t));
      }
      return out;
    }
    case NodeType::Venue:
      return tokenize_text(rec.venue);
    case NodeType::Year:
      return record_attributes(rec, block_key, NodeType::Year);
    case NodeType::Word:
      return tokenize_text(rec.title, {}, rec.keywords);
    case NodeType::Pub:
      break;
  }
  return {};
}

inline void fill_uniform(std::span<float> row, Rng& rng, float half_width) {
  for (auto& x : row) x = static_cast<float>(rng.uniform(-half_width, half_width));
}

// z^0 per pub: mean of word2vec-style token vectors trained over the pubs'
// token bags. Pubs with no tokens get a seeded uniform vector in
// [-0.5/d, 0.5/d]^d keyed by their id.
inline EmbeddingTable init_vectors(const Block& block, const MetaPath& path, std::size_t dim,
                                   std::uint64_t seed, const InitParams& params = {}) {
  if (dim < 2) throw ConfigError("embedding dimension must be >= 2");
  const NodeType type = path.primary_attribute();
  const float half = 0.5f / static_cast<float>(dim);

  std::vector<std::vector<std::string>> bags(block.size());
  std::map<std::string, std::uint32_t> vocab;
  for (std::size_t i = 0; i < block.size(); ++i) {
    bags[i] = init_tokens(block.pubs[i], block.key, type);
    for (const auto& t : bags[i]) vocab.try_emplace(t, 0);
  }
  std::uint32_t next = 0;
  std::vector<std::string> token_ids;
  for (auto& [tok, idx] : vocab) {
    idx = next++;
    token_ids.push_back(tok);
  }

  EmbeddingTable tokens;
  tokens.tag = path.name() + ":tokens";
  tokens.ids = token_ids;
  tokens.vectors = Matrix<float>(vocab.size(), dim);
  {
    Rng rng(mix_seed(seed, "token-init"));
    fill_uniform(tokens.vectors.data(), rng, half);
  }

  std::vector<ContextPair> pairs;
  std::vector<std::uint64_t> freq(vocab.size(), 0);
  for (const auto& bag : bags) {
    for (std::size_t a = 0; a < bag.size(); ++a) {
      ++freq[vocab[bag[a]]];
      for (std::size_t b = 0; b < bag.size(); ++b) {
        if (a != b && bag[a] != bag[b]) pairs.push_back({vocab[bag[a]], vocab[bag[b]]});
      }
    }
  }
  if (!pairs.empty() && params.epochs > 0) {
    NegativeSampler sampler(freq, params.negatives);
    SkipGramHyper hyper;
    hyper.epochs = params.epochs;
    hyper.initial_lr = params.initial_lr;
    hyper.seed = mix_seed(seed, "token-train");
    hyper.eval_pairs = 0;
    tokens.vectors = train_skipgram(pairs, tokens, sampler, hyper).table.vectors;
  }

  EmbeddingTable out;
  out.tag = path.name();
  out.vectors = Matrix<float>(block.size(), dim);
  out.init = {seed, "word2vec:" + std::string(1, type_letter(type))};
  for (std::size_t i = 0; i < block.size(); ++i) {
    out.ids.push_back(block.pubs[i].id);
    auto row = out.vectors.row(i);
    if (bags[i].empty()) {
      Rng rng(mix_seed(seed, {fnv1a("fallback"), fnv1a(block.pubs[i].id)}));
      fill_uniform(row, rng, half);
      continue;
    }
    std::vector<double> acc(dim, 0.0);
    for (const auto& t : bags[i]) {
      auto v = tokens.vectors.row(vocab[t]);
      for (std::size_t k = 0; k < dim; ++k) acc[k] += v[k];
    }
    for (std::size_t k = 0; k < dim; ++k) {
      row[k] = static_cast<float>(acc[k] / static_cast<double>(bags[i].size()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary table format:
//   "NDVT" | u32 version | u64 count | u32 dim |
//   count x ( u32 id_len | id bytes | dim x f32 )
// All integers and floats little-endian.

inline constexpr char kTableMagic[4] = {'N', 'D', 'V', 'T'};
inline constexpr std::uint32_t kTableVersion = 1;

namespace detail {

template <typename U>
void write_le(std::ostream& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.put(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename U>
U read_le(std::istream& in) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw DataError("truncated vector table");
    value |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return value;
}

}  // namespace detail

inline void write_table(const EmbeddingTable& table, std::ostream& out) {
  out.write(kTableMagic, 4);
  detail::write_le<std::uint32_t>(out, kTableVersion);
  detail::write_le<std::uint64_t>(out, table.size());
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& id = table.ids.at(i);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float x : table.vectors.row(i)) detail::write_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
  }
}

inline EmbeddingTable read_table(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kTableMagic, 4) != 0) {
    throw DataError("not a vector table (bad magic)");
  }
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kTableVersion) throw DataError("unsupported vector table version " + std::to_string(version));
  const auto count = detail::read_le<std::uint64_t>(in);
  const auto dim = detail::read_le<std::uint32_t>(in);
  EmbeddingTable table;
  table.vectors = Matrix<float>(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    const auto len = detail::read_le<std::uint32_t>(in);
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw DataError("truncated vector table");
    table.ids.push_back(std::move(id));
    for (auto& x : table.vectors.row(i)) x = std::bit_cast<float>(detail::read_le<std::uint32_t>(in));
  }
  return table;
}

inline void save_table(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_table(table, out);
  if (!out) throw DataError("write to '" + path + "' failed");
}

inline EmbeddingTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_table(in);
}

}  // namespace namedis
