#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "hetnet.hpp"
#include "matrix.hpp"
#include "random.hpp"
#include "similarity.hpp"

namespace namedis {

// Meta-path level attention shared by all paths:
//   w_n = mean_i q . tanh(W z_n^i + b),  alpha = softmax(w)
struct AttentionParams {
  Matrix<double> W;  // hidden x dim
  std::vector<double> b;
  std::vector<double> q;

  std::size_t hidden() const { return W.rows(); }
  std::size_t dim() const { return W.cols(); }

  // W and q uniform in +-sqrt(6 / (dim + hidden)); b = 0.
  static AttentionParams initialize(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
    AttentionParams p{Matrix<double>(hidden, dim), std::vector<double>(hidden, 0.0),
                      std::vector<double>(hidden)};
    const double r = std::sqrt(6.0 / static_cast<double>(dim + hidden));
    Rng rng(mix_seed(seed, "attention-init"));
    for (auto& x : p.W.data()) x = rng.uniform(-r, r);
    for (auto& x : p.q) x = rng.uniform(-r, r);
    return p;
  }
};

// Binary symmetric adjacency with zero diagonal.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(std::size_t n = 0) : n_(n), bits_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }

  void connect(std::size_t i, std::size_t j) {
    if (i == j) return;
    bits_[i * n_ + j] = 1;
    bits_[j * n_ + i] = 1;
  }

  std::size_t edge_count() const {
    std::size_t c = 0;
    for (auto b : bits_) c += b;
    return c / 2;
  }

  bool operator==(const AdjacencyMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint8_t> bits_;
};

struct FusedEmbedding {
  Matrix<double> z;
  std::vector<double> alpha;
  std::vector<double> coefficients;
};

// A_ij = 1 iff pubs i and j share a co-author node (the ambiguous name is
// never an Author node).
inline AdjacencyMatrix build_coauthor_adjacency(const HetNet& net) {
  AdjacencyMatrix a(net.pub_count());
  for (std::size_t k = 0; k < net.attribute_count(); ++k) {
    const auto& node = net.attribute(k);
    if (node.type != NodeType::Author) continue;
    for (std::size_t x = 0; x < node.pubs.size(); ++x) {
      for (std::size_t y = x + 1; y < node.pubs.size(); ++y) a.connect(node.pubs[x], node.pubs[y]);
    }
  }
  return a;
}

// Supervised target: A_ij = 1 iff i and j belong to the same labelled entity.
inline AdjacencyMatrix build_label_adjacency(const Block& block,
                                             const std::vector<AuthorEntity>& entities) {
  AdjacencyMatrix a(block.size());
  for (const auto& e : entities) {
    std::vector<std::size_t> pos;
    for (const auto& id : e.pubs) {
      if (auto p = block.position(id)) pos.push_back(*p);
    }
    for (std::size_t x = 0; x < pos.size(); ++x) {
      for (std::size_t y = x + 1; y < pos.size(); ++y) a.connect(pos[x], pos[y]);
    }
  }
  return a;
}

namespace detail {

inline void check_tables(std::span<const Matrix<double>> tables, std::size_t dim) {
  if (tables.empty()) throw ConfigError("attention needs at least one embedding table");
  for (const auto& t : tables) {
    if (t.rows() != tables[0].rows() || t.cols() != tables[0].cols()) {
      throw ConfigError("embedding tables differ in shape");
    }
  }
  if (dim != tables[0].cols()) {
    throw ConfigError("attention parameters expect dimension " + std::to_string(dim) +
                      ", tables have " + std::to_string(tables[0].cols()));
  }
}

// tanh(W z + b) for every row of `table`, stored as rows x hidden.
inline Matrix<double> hidden_activations(const Matrix<double>& table, const AttentionParams& p) {
  Matrix<double> t(table.rows(), p.hidden());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    auto z = table.row(i);
    for (std::size_t h = 0; h < p.hidden(); ++h) {
      t(i, h) = std::tanh(dot(p.W.row(h), z) + p.b[h]);
    }
  }
  return t;
}

}  // namespace detail

inline std::vector<double> attention_coefficients(std::span<const Matrix<double>> tables,
                                                  const AttentionParams& params) {
  detail::check_tables(tables, params.dim());
  std::vector<double> w;
  for (const auto& table : tables) {
    const auto t = detail::hidden_activations(table, params);
    double s = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) s += dot(std::span<const double>(params.q), t.row(i));
    w.push_back(table.rows() ? s / static_cast<double>(table.rows()) : 0.0);
  }
  return w;
}

inline std::vector<double> attention_softmax(std::span<const double> w) {
  std::vector<double> a(w.size());
  if (w.empty()) return a;
  const double mx = *std::max_element(w.begin(), w.end());
  double z = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    a[n] = std::exp(w[n] - mx);
    z += a[n];
  }
  for (auto& x : a) x /= z;
  return a;
}

inline FusedEmbedding fuse_embeddings(std::span<const Matrix<double>> tables,
                                      std::span<const double> alpha) {
  if (tables.empty() || tables.size() != alpha.size()) {
    throw ConfigError("fusion needs one weight per embedding table");
  }
  detail::check_tables(tables, tables[0].cols());
  FusedEmbedding out{Matrix<double>(tables[0].rows(), tables[0].cols(), 0.0),
                     std::vector<double>(alpha.begin(), alpha.end()), {}};
  for (std::size_t n = 0; n < tables.size(); ++n) axpy(alpha[n], tables[n].data(), out.z.data());
  return out;
}

// Inner-product decoder: A^_ij = sigma(z_i . z_j). Diagonal left at 0.
inline Matrix<double> reconstruct_adjacency(const Matrix<double>& z) {
  const std::size_t n = z.rows();
  Matrix<double> a(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      a(i, j) = a(j, i) = sigmoid(dot(z.row(i), z.row(j)));
    }
  }
  return a;
}

struct LabeledPair {
  std::uint32_t i;
  std::uint32_t j;
  double target;  // A_ij
};

struct AttentionGradient {
  Matrix<double> W;
  std::vector<double> b;
  std::vector<double> q;
  std::vector<Matrix<double>> tables;  // filled only when requested
};

// Mean binary cross-entropy between sigma(z_i . z_j) and A_ij over `pairs`,
// where z is the attention-fused embedding. Optionally returns the gradient
// with respect to q, W, b (and the per-path tables).
inline double attention_loss(std::span<const Matrix<double>> tables, const AttentionParams& params,
                             std::span<const LabeledPair> pairs, AttentionGradient* grad = nullptr,
                             bool table_grads = false) {
  detail::check_tables(tables, params.dim());
  const std::size_t m = tables.size(), n = tables[0].rows(), d = params.dim(), h = params.hidden();
  if (pairs.empty()) throw ConfigError("attention loss needs at least one pair");

  std::vector<Matrix<double>> act;
  std::vector<double> w(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    act.push_back(detail::hidden_activations(tables[k], params));
    for (std::size_t i = 0; i < n; ++i) w[k] += dot(std::span<const double>(params.q), act[k].row(i));
    w[k] /= static_cast<double>(n);
  }
  const auto alpha = attention_softmax(w);
  const auto fused = fuse_embeddings(tables, alpha);

  const double scale = 1.0 / static_cast<double>(pairs.size());
  double loss = 0.0;
  Matrix<double> gz;
  if (grad) gz = Matrix<double>(n, d, 0.0);
  for (const auto& p : pairs) {
    const double s = dot(fused.z.row(p.i), fused.z.row(p.j));
    loss += p.target * softplus(-s) + (1.0 - p.target) * softplus(s);
    if (grad) {
      const double g = (sigmoid(s) - p.target) * scale;
      axpy(g, fused.z.row(p.j), gz.row(p.i));
      axpy(g, fused.z.row(p.i), gz.row(p.j));
    }
  }
  loss *= scale;
  if (!grad) return loss;

  std::vector<double> galpha(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) galpha[k] = dot(std::span<const double>(gz.data()), tables[k].data());
  double mean_g = 0.0;
  for (std::size_t k = 0; k < m; ++k) mean_g += alpha[k] * galpha[k];
  std::vector<double> gw(m);
  for (std::size_t k = 0; k < m; ++k) gw[k] = alpha[k] * (galpha[k] - mean_g);

  grad->W = Matrix<double>(h, d, 0.0);
  grad->b.assign(h, 0.0);
  grad->q.assign(h, 0.0);
  grad->tables.clear();
  std::vector<double> delta(h);
  for (std::size_t k = 0; k < m; ++k) {
    Matrix<double> gt;
    if (table_grads) {
      gt = Matrix<double>(n, d, 0.0);
      axpy(alpha[k], std::span<const double>(gz.data()), gt.data());
    }
    const double c = gw[k] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto t = act[k].row(i);
      auto z = tables[k].row(i);
      axpy(c, t, std::span<double>(grad->q));
      for (std::size_t x = 0; x < h; ++x) delta[x] = c * params.q[x] * (1.0 - t[x] * t[x]);
      for (std::size_t x = 0; x < h; ++x) {
        grad->b[x] += delta[x];
        axpy(delta[x], z, grad->W.row(x));
        if (table_grads) axpy(delta[x], params.W.row(x), gt.row(i));
      }
    }
    if (table_grads) grad->tables.push_back(std::move(gt));
  }
  return loss;
}

// All positive pairs of A (i < j) plus round(rho * |positives|) zero pairs
// drawn without replacement (all of them if fewer exist).
inline std::vector<LabeledPair> sample_training_pairs(const AdjacencyMatrix& a, double rho, Rng& rng) {
  const std::size_t n = a.size();
  std::vector<LabeledPair> pairs;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (a(i, j)) {
        pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 1.0});
      } else {
        ++zeros;
      }
    }
  }
  const auto want = static_cast<std::size_t>(std::llround(rho * static_cast<double>(pairs.size())));
  if (want >= zeros) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!a(i, j)) pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 0.0});
      }
    }
    return pairs;
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> chosen;
  while (chosen.size() < want) {
    auto i = static_cast<std::uint32_t>(rng.below(n));
    auto j = static_cast<std::uint32_t>(rng.below(n));
    if (i == j || a(i, j)) continue;
    if (i > j) std::swap(i, j);
    chosen.emplace(i, j);
  }
  for (auto [i, j] : chosen) pairs.push_back({i, j, 0.0});
  return pairs;
}

namespace detail {

class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void step(std::span<double> params, std::span<const double> grad) {
    if (m_.empty()) {
      m_.assign(params.size(), 0.0);
      v_.assign(params.size(), 0.0);
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double lr_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace detail

struct AttentionHyper {
  std::size_t epochs = 200;
  double learning_rate = 0.01;
  double negative_ratio = 1.0;  // rho
  bool fine_tune = false;
  std::size_t hidden = 128;
  std::uint64_t seed = 1;
};

struct AttentionResult {
  AttentionParams params;
  FusedEmbedding fused;
  // Loss on a fixed evaluation sample: [0] before training, [e] after epoch e.
  std::vector<double> epoch_loss;
  std::vector<Matrix<double>> tables;  // per-path tables after (optional) fine-tuning
};

// Minimizes the reconstruction loss with Adam, resampling zero pairs each
// epoch. Per-path tables are frozen unless `fine_tune` is set.
inline AttentionResult train_attention(std::vector<Matrix<double>> tables, const AdjacencyMatrix& a,
                                       const AttentionHyper& hyper,
                                       std::optional<AttentionParams> init = std::nullopt) {
  if (tables.empty()) throw ConfigError("attention needs at least one embedding table");
  if (a.size() != tables[0].rows()) throw ConfigError("adjacency size does not match tables");
  AttentionResult out;
  out.params = init ? *init : AttentionParams::initialize(tables[0].cols(), hyper.hidden, hyper.seed);
  detail::check_tables(tables, out.params.dim());

  const bool has_positive = a.edge_count() > 0;
  if (has_positive && hyper.epochs > 0) {
    detail::Adam opt_w(hyper.learning_rate), opt_b(hyper.learning_rate), opt_q(hyper.learning_rate);
    std::vector<detail::Adam> opt_t(tables.size(), detail::Adam(hyper.learning_rate));
    Rng rng(mix_seed(hyper.seed, "attention-pairs"));
    Rng eval_rng(mix_seed(hyper.seed, "attention-eval"));
    const auto eval_pairs = sample_training_pairs(a, hyper.negative_ratio, eval_rng);
    out.epoch_loss.push_back(attention_loss(tables, out.params, eval_pairs, nullptr, false));
    AttentionGradient grad;
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
      const auto pairs = sample_training_pairs(a, hyper.negative_ratio, rng);
      const double loss = attention_loss(tables, out.params, pairs, &grad, hyper.fine_tune);
      if (!std::isfinite(loss) || !all_finite(std::span<const double>(grad.W.data()))) {
        throw StageError("attention training diverged at epoch " + std::to_string(epoch));
      }
      opt_w.step(out.params.W.data(), grad.W.data());
      opt_b.step(out.params.b, grad.b);
      opt_q.step(out.params.q, grad.q);
      if (hyper.fine_tune) {
        for (std::size_t k = 0; k < tables.size(); ++k) opt_t[k].step(tables[k].data(), grad.tables[k].data());
      }
      out.epoch_loss.push_back(attention_loss(tables, out.params, eval_pairs, nullptr, false));
    }
  }
  const auto w = attention_coefficients(tables, out.params);
  out.fused = fuse_embeddings(tables, attention_softmax(w));
  out.fused.coefficients = w;
  out.tables = std::move(tables);
  return out;
}

inline SimilarityMatrix structural_similarity(const Matrix<double>& z) {
  return cosine_similarity(z, SimilarityRole::Structural);
}

}  // namespace namedis
