#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cluster.hpp"
#include "corpus.hpp"
#include "embed.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "fusion.hpp"
#include "hetnet.hpp"
#include "semantic.hpp"
#include "walker.hpp"

namespace namedis {

enum class AdjacencyTarget { Coauthor, Labels };

struct PipelineConfig {
  std::string pubs_path;
  std::string labels_path;
  std::string output_dir = "out";
  CorpusFormat format = CorpusFormat::WhoIsWhoJson;

  std::vector<std::string> metapaths = {"PAP", "POP", "PVP", "PWP"};
  WordFilter words;
  WalkParams walk;

  std::size_t dim = 100;
  std::size_t negatives = 5;
  std::size_t embed_epochs = 5;
  float initial_lr = 0.025f;
  float min_lr = 1e-4f;
  InitParams init;

  bool attention = true;
  AttentionHyper attention_hyper;
  AdjacencyTarget target = AdjacencyTarget::Coauthor;

  DocVectorConfig doc;

  double beta = 0.5;
  AdaptiveParams cluster;

  std::uint64_t seed = 1;
  std::size_t threads = 1;
  ExecutionMode mode = ExecutionMode::Deterministic;
  std::optional<double> f1_gate;
  bool cache = true;
};

// ---------------------------------------------------------------------------
// JSON config

namespace detail {

// Shortest decimal that reads back as the same float, so 0.025f prints as 0.025.
inline double short_float(float f) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, f);
  return std::strtod(std::string(buf, res.ptr).c_str(), nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  using nlohmann::json;
  json j;
  j["paths"] = {{"pubs", c.pubs_path},
                {"labels", c.labels_path},
                {"output_dir", c.output_dir},
                {"format", to_string(c.format)}};
  j["metapaths"] = c.metapaths;
  j["hetnet"] = {{"word_min_count", c.words.min_count}, {"word_max_fraction", c.words.max_fraction}};
  j["walk"] = {{"walks_per_node", c.walk.walks_per_node},
               {"walk_length", c.walk.walk_length},
               {"window", c.walk.window}};
  j["embed"] = {{"dim", c.dim},
                {"negatives", c.negatives},
                {"epochs", c.embed_epochs},
                {"initial_lr", detail::short_float(c.initial_lr)},
                {"min_lr", detail::short_float(c.min_lr)},
                {"init_epochs", c.init.epochs},
                {"init_negatives", c.init.negatives},
                {"init_lr", detail::short_float(c.init.initial_lr)}};
  j["attention"] = {{"enabled", c.attention},
                    {"epochs", c.attention_hyper.epochs},
                    {"learning_rate", c.attention_hyper.learning_rate},
                    {"negative_ratio", c.attention_hyper.negative_ratio},
                    {"fine_tune", c.attention_hyper.fine_tune},
                    {"hidden", c.attention_hyper.hidden},
                    {"target", c.target == AdjacencyTarget::Coauthor ? "coauthor" : "labels"}};
  j["semantic"] = {{"dim", c.doc.dim},
                   {"epochs", c.doc.epochs},
                   {"negatives", c.doc.negatives},
                   {"min_count", c.doc.min_count},
                   {"initial_lr", detail::short_float(c.doc.initial_lr)},
                   {"min_lr", detail::short_float(c.doc.min_lr)}};
  j["cluster"] = {{"beta", c.beta},
                  {"min_cluster_size", c.cluster.hdbscan.min_cluster_size},
                  {"min_samples", c.cluster.hdbscan.min_samples},
                  {"ap_damping", c.cluster.ap.damping},
                  {"ap_preference", c.cluster.ap.preference ? json(*c.cluster.ap.preference) : json(nullptr)},
                  {"ap_max_iter", c.cluster.ap.max_iter},
                  {"ap_convergence_iter", c.cluster.ap.convergence_iter},
                  {"noise_floor", c.cluster.noise_floor}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["mode"] = c.mode == ExecutionMode::Deterministic ? "deterministic" : "parallel";
  j["f1_gate"] = c.f1_gate ? json(*c.f1_gate) : json(nullptr);
  j["cache"] = c.cache;
  return j;
}

namespace detail {

// Rejects keys the default config does not know about.
inline void check_known_keys(const nlohmann::json& user, const nlohmann::json& schema,
                             const std::string& where) {
  if (!user.is_object()) throw ConfigError("config" + where + " must be an object");
  for (const auto& [k, v] : user.items()) {
    auto it = schema.find(k);
    if (it == schema.end()) throw ConfigError("unknown config key '" + where + (where.empty() ? "" : ".") + k + "'");
    if (it->is_object()) check_known_keys(v, *it, where.empty() ? k : where + "." + k);
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* section, const char* key, T& out) {
  const nlohmann::json* node = &j;
  if (section) {
    auto s = j.find(section);
    if (s == j.end()) return;
    node = &*s;
  }
  auto it = node->find(key);
  if (it == node->end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + (section ? std::string(section) + "." : "") + key +
                      "' has the wrong type");
  }
}

}  // namespace detail

inline void validate(const PipelineConfig& c) {
  if (c.metapaths.empty()) throw ConfigError("at least one meta-path is required");
  std::set<std::string> seen;
  for (const auto& p : c.metapaths) {
    if (!is_supported_metapath(p)) throw ConfigError("unsupported meta-path '" + p + "'");
    if (!seen.insert(p).second) throw ConfigError("meta-path '" + p + "' listed twice");
  }
  if (c.dim < 2 || c.doc.dim < 2) throw ConfigError("embedding dimensions must be >= 2");
  if (c.walk.walks_per_node == 0 || c.walk.walk_length == 0 || c.walk.window == 0) {
    throw ConfigError("walk parameters must be positive");
  }
  if (c.negatives == 0 || c.doc.negatives == 0) throw ConfigError("negatives must be positive");
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(c.cluster.ap.damping >= 0.5 && c.cluster.ap.damping < 1.0)) {
    throw ConfigError("ap_damping must lie in [0.5, 1)");
  }
  if (c.cluster.hdbscan.min_cluster_size < 2) throw ConfigError("min_cluster_size must be >= 2");
  if (c.cluster.hdbscan.min_samples < 1) throw ConfigError("min_samples must be >= 1");
  if (c.attention_hyper.hidden == 0) throw ConfigError("attention hidden size must be positive");
  if (c.attention_hyper.negative_ratio < 0.0) throw ConfigError("negative_ratio must be >= 0");
  if (c.threads == 0) throw ConfigError("threads must be >= 1");
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  detail::check_known_keys(j, to_json(c), "");
  using detail::read_field;
  read_field(j, "paths", "pubs", c.pubs_path);
  read_field(j, "paths", "labels", c.labels_path);
  read_field(j, "paths", "output_dir", c.output_dir);
  std::string s;
  read_field(j, "paths", "format", s);
  if (!s.empty()) c.format = parse_corpus_format(s);
  read_field(j, nullptr, "metapaths", c.metapaths);
  read_field(j, "hetnet", "word_min_count", c.words.min_count);
  read_field(j, "hetnet", "word_max_fraction", c.words.max_fraction);
  read_field(j, "walk", "walks_per_node", c.walk.walks_per_node);
  read_field(j, "walk", "walk_length", c.walk.walk_length);
  read_field(j, "walk", "window", c.walk.window);
  read_field(j, "embed", "dim", c.dim);
  read_field(j, "embed", "negatives", c.negatives);
  read_field(j, "embed", "epochs", c.embed_epochs);
  read_field(j, "embed", "initial_lr", c.initial_lr);
  read_field(j, "embed", "min_lr", c.min_lr);
  read_field(j, "embed", "init_epochs", c.init.epochs);
  read_field(j, "embed", "init_negatives", c.init.negatives);
  read_field(j, "embed", "init_lr", c.init.initial_lr);
  read_field(j, "attention", "enabled", c.attention);
  read_field(j, "attention", "epochs", c.attention_hyper.epochs);
  read_field(j, "attention", "learning_rate", c.attention_hyper.learning_rate);
  read_field(j, "attention", "negative_ratio", c.attention_hyper.negative_ratio);
  read_field(j, "attention", "fine_tune", c.attention_hyper.fine_tune);
  read_field(j, "attention", "hidden", c.attention_hyper.hidden);
  s.clear();
  read_field(j, "attention", "target", s);
  if (s == "labels") {
    c.target = AdjacencyTarget::Labels;
  } else if (!s.empty() && s != "coauthor") {
    throw ConfigError("attention.target must be 'coauthor' or 'labels'");
  }
  read_field(j, "semantic", "dim", c.doc.dim);
  read_field(j, "semantic", "epochs", c.doc.epochs);
  read_field(j, "semantic", "negatives", c.doc.negatives);
  read_field(j, "semantic", "min_count", c.doc.min_count);
  read_field(j, "semantic", "initial_lr", c.doc.initial_lr);
  read_field(j, "semantic", "min_lr", c.doc.min_lr);
  read_field(j, "cluster", "beta", c.beta);
  read_field(j, "cluster", "min_cluster_size", c.cluster.hdbscan.min_cluster_size);
  read_field(j, "cluster", "min_samples", c.cluster.hdbscan.min_samples);
  read_field(j, "cluster", "ap_damping", c.cluster.ap.damping);
  double pref = 0.0;
  if (j.contains("cluster") && j["cluster"].contains("ap_preference") && !j["cluster"]["ap_preference"].is_null()) {
    read_field(j, "cluster", "ap_preference", pref);
    c.cluster.ap.preference = pref;
  }
  read_field(j, "cluster", "ap_max_iter", c.cluster.ap.max_iter);
  read_field(j, "cluster", "ap_convergence_iter", c.cluster.ap.convergence_iter);
  read_field(j, "cluster", "noise_floor", c.cluster.noise_floor);
  read_field(j, nullptr, "seed", c.seed);
  read_field(j, nullptr, "threads", c.threads);
  s.clear();
  read_field(j, nullptr, "mode", s);
  if (s == "parallel") {
    c.mode = ExecutionMode::Parallel;
  } else if (!s.empty() && s != "deterministic") {
    throw ConfigError("mode must be 'deterministic' or 'parallel'");
  }
  if (j.contains("f1_gate") && !j["f1_gate"].is_null()) {
    double g = 0.0;
    read_field(j, nullptr, "f1_gate", g);
    c.f1_gate = g;
  }
  read_field(j, nullptr, "cache", c.cache);
  validate(c);
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config '" + path + "': " + e.what(), e.byte);
  }
  auto c = config_from_json(j);
  for (const auto* p : {&c.pubs_path, &c.labels_path}) {
    if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("config references missing file '" + *p + "'");
  }
  return c;
}

// Covers every field that can change results: output location, thread count
// and the cache switch are excluded.
inline std::uint64_t config_hash(const PipelineConfig& c) {
  auto j = to_json(c);
  j["paths"].erase("output_dir");
  j.erase("threads");
  j.erase("cache");
  j.erase("f1_gate");
  return fnv1a(j.dump());
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Stage cache

// Content-addressed files under one directory. Writes go through a temporary
// file and a rename, so concurrent names never see partial entries.
class StageCache {
 public:
  StageCache() = default;
  explicit StageCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path entry(const std::string& stage, std::uint64_t key) const {
    return dir_ / (stage + "-" + hex64(key) + ".bin");
  }

  std::optional<EmbeddingTable> get_table(const std::string& stage, std::uint64_t key) const {
    if (!enabled()) return std::nullopt;
    const auto path = entry(stage, key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
      return load_table(path.string());
    } catch (const Error&) {
      return std::nullopt;  // unreadable entries are recomputed
    }
  }

  void put_table(const std::string& stage, std::uint64_t key, const EmbeddingTable& t) const {
    if (!enabled()) return;
    std::filesystem::create_directories(dir_);
    const auto path = entry(stage, key);
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    save_table(t, tmp.string());
    std::filesystem::rename(tmp, path);
  }

 private:
  std::filesystem::path dir_;
};

inline std::filesystem::path default_cache_dir(const PipelineConfig& c) {
  if (const char* env = std::getenv("NAMEDIS_CACHE_DIR"); env && *env) return env;
  return std::filesystem::path(c.output_dir) / "cache";
}

// ---------------------------------------------------------------------------
// Stages

inline std::uint64_t name_seed(const PipelineConfig& c, const std::string& name) {
  return mix_seed(c.seed, name);
}

inline std::uint64_t block_fingerprint(const Block& block) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& rec : block.pubs) j.push_back(detail::record_to_json(rec));
  return mix_seed(fnv1a(j.dump()), block.key);
}

inline std::size_t inner_threads(const PipelineConfig& c) {
  return c.mode == ExecutionMode::Parallel ? c.threads : 1;
}

// Walks sampled on the projected graph of `path`.
inline WalkCorpus stage_walks(const HetNet& net, const MetaPath& path, const PipelineConfig& c,
                              std::uint64_t seed) {
  return sample_walks(net, path, c.walk, mix_seed(seed, "walks:" + path.name()), inner_threads(c));
}

// Initial vectors refined by skip-gram over the walks of `path`. A path
// with no usable context pairs keeps its initial vectors.
inline EmbeddingTable stage_embed(const Block& block, const HetNet& net, const MetaPath& path,
                                  const PipelineConfig& c, std::uint64_t seed, const StageCache& cache) {
  nlohmann::json key = {{"stage", "embed"},        {"path", path.name()},
                        {"walk", to_json(c)["walk"]}, {"embed", to_json(c)["embed"]},
                        {"hetnet", to_json(c)["hetnet"]}, {"seed", seed},
                        {"mode", to_json(c)["mode"]}, {"block", block_fingerprint(block)}};
  const auto h = fnv1a(key.dump());
  if (auto hit = cache.get_table("embed", h)) return *hit;

  const std::uint64_t path_seed = mix_seed(seed, path.name());
  auto table = init_vectors(block, path, c.dim, mix_seed(path_seed, "init"), c.init);
  const auto walks = stage_walks(net, path, c, seed);
  const auto pairs = context_pairs(walks, c.walk.window);
  if (!pairs.empty() && c.embed_epochs > 0) {
    const auto sampler = NegativeSampler::from_walks(walks, c.negatives);
    SkipGramHyper hyper;
    hyper.epochs = c.embed_epochs;
    hyper.initial_lr = c.initial_lr;
    hyper.min_lr = c.min_lr;
    hyper.seed = mix_seed(path_seed, "skipgram");
    hyper.threads = inner_threads(c);
    hyper.mode = c.mode;
    hyper.eval_pairs = 0;
    auto trained = train_skipgram(pairs, table, sampler, hyper);
    table.vectors = std::move(trained.table.vectors);
  }
  cache.put_table("embed", h, table);
  return table;
}

inline DocVectorTable stage_semantic(const Block& block, const PipelineConfig& c, std::uint64_t seed,
                                     const StageCache& cache) {
  auto cfg = c.doc;
  cfg.seed = mix_seed(seed, "semantic");
  cfg.threads = inner_threads(c);
  cfg.mode = c.mode;
  nlohmann::json key = {{"stage", "semantic"}, {"semantic", to_json(c)["semantic"]},
                        {"seed", cfg.seed},    {"mode", to_json(c)["mode"]},
                        {"block", block_fingerprint(block)}};
  const auto h = fnv1a(key.dump());
  std::vector<std::string> ids;
  for (const auto& rec : block.pubs) ids.push_back(rec.id);
  if (auto hit = cache.get_table("semantic", h)) {
    DocVectorTable t;
    t.vectors = std::move(hit->vectors);
    t.config = cfg;
    return t;
  }
  auto t = train_doc_vectors(build_doc_corpus(block), cfg, ids);
  EmbeddingTable stored;
  stored.tag = "doc";
  stored.ids = ids;
  stored.vectors = t.vectors;
  cache.put_table("semantic", h, stored);
  return t;
}

inline std::vector<double> uniform_alpha(std::size_t m) {
  return std::vector<double>(m, 1.0 / static_cast<double>(m));
}

struct FusionOutcome {
  FusedEmbedding fused;
  std::vector<double> epoch_loss;
};

inline FusionOutcome stage_fuse(std::vector<Matrix<double>> tables, const AdjacencyMatrix& a,
                                const PipelineConfig& c, std::uint64_t seed) {
  FusionOutcome out;
  if (!c.attention) {
    out.fused = fuse_embeddings(tables, uniform_alpha(tables.size()));
    return out;
  }
  auto hyper = c.attention_hyper;
  hyper.seed = mix_seed(seed, "attention");
  auto r = train_attention(std::move(tables), a, hyper);
  out.fused = std::move(r.fused);
  out.epoch_loss = std::move(r.epoch_loss);
  return out;
}

struct NameOutcome {
  std::string name;
  Block block;
  std::vector<std::string> paths;
  std::vector<double> alpha;
  std::vector<double> attention_loss;
  AdaptiveOutcome clustering;
  std::vector<std::vector<std::string>> clusters;
  std::optional<NameResult> eval;
};

inline std::optional<Block> block_for(const Corpus& corpus, const std::string& name) {
  return build_block(corpus, name);
}

// block -> hetnet -> per-path embeddings -> fusion -> M^st; doc vectors ->
// M^se; combine -> adaptive clustering.
inline NameOutcome process_name(const std::string& name, const Block& block,
                                const std::vector<AuthorEntity>* entities, const PipelineConfig& c,
                                const StageCache& cache) {
  NameOutcome out;
  out.name = name;
  out.block = block;
  out.paths = c.metapaths;
  const std::uint64_t seed = name_seed(c, name);

  const auto net = build_hetnet(block, c.words);
  std::vector<Matrix<double>> tables;
  for (const auto& p : c.metapaths) {
    tables.push_back(stage_embed(block, net, MetaPath::parse(p), c, seed, cache).vectors.cast<double>());
  }
  AdjacencyMatrix a;
  if (c.target == AdjacencyTarget::Labels) {
    if (!entities) throw DataError("label-supervised attention needs labels for '" + name + "'");
    a = build_label_adjacency(block, *entities);
  } else {
    a = build_coauthor_adjacency(net);
  }
  auto fusion = stage_fuse(std::move(tables), a, c, seed);
  out.alpha = fusion.fused.alpha;
  out.attention_loss = std::move(fusion.epoch_loss);

  const auto m_st = structural_similarity(fusion.fused.z);
  const auto m_se = semantic_similarity(stage_semantic(block, c, seed, cache));
  const auto m = combine_similarity(m_st, m_se, c.beta);
  out.clustering = adaptive_cluster_detailed(m, c.cluster);
  out.clusters = clusters_of(block, out.clustering.chosen);

  if (entities) {
    out.eval = evaluate_name(name, out.clusters, *entities);
    out.eval->method = to_string(out.clustering.chosen.method);
    out.eval->paths = out.paths;
    out.eval->alpha = out.alpha;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runs

using LogFn = std::function<void(const std::string&)>;

inline LogFn stderr_log() {
  return [](const std::string& msg) {
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << msg << '\n';
  };
}

struct PipelineResult {
  std::map<std::string, NameOutcome> names;
  std::vector<std::string> aborted;
  std::optional<EvalReport> report;
};

inline nlohmann::json config_echo(const PipelineConfig& c) {
  return {{"metapaths", c.metapaths},
          {"beta", c.beta},
          {"attention", c.attention},
          {"seed", c.seed},
          {"mode", c.mode == ExecutionMode::Deterministic ? "deterministic" : "parallel"},
          {"config_hash", hex64(config_hash(c))}};
}

// Names run concurrently up to `threads`; each name is independent, so the
// result does not depend on scheduling.
inline PipelineResult run_pipeline(const PipelineConfig& c, const Corpus& corpus,
                                   const GroundTruth* truth, const std::vector<std::string>& names,
                                   const StageCache& cache = {}, const LogFn& log = {}) {
  validate(c);
  std::vector<std::optional<NameOutcome>> slots(names.size());
  std::vector<std::string> errors(names.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < names.size(); i = next++) {
      const auto& name = names[i];
      try {
        auto block = block_for(corpus, name);
        if (!block) throw DataError("no publications match '" + name + "'");
        const std::vector<AuthorEntity>* entities = nullptr;
        if (truth) {
          auto it = truth->names.find(name);
          if (it != truth->names.end()) entities = &it->second;
        }
        slots[i] = process_name(name, *block, entities, c, cache);
      } catch (const Error& e) {
        errors[i] = e.what();
      } catch (const std::exception& e) {
        errors[i] = std::string("unexpected failure: ") + e.what();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(c.threads, names.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  PipelineResult out;
  std::vector<NameResult> scored;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!slots[i]) {
      out.aborted.push_back(names[i]);
      if (log) log("name '" + names[i] + "' aborted: " + errors[i]);
      continue;
    }
    if (slots[i]->eval) scored.push_back(*slots[i]->eval);
    if (log && slots[i]->eval && slots[i]->eval->dropped) {
      log("name '" + names[i] + "': " + std::to_string(slots[i]->eval->dropped) + " unlabeled pubs excluded");
    }
    out.names.emplace(names[i], std::move(*slots[i]));
  }
  if (truth) {
    EvalReport r;
    r.names = std::move(scored);
    r.aborted = out.aborted;
    r.config = config_echo(c);
    out.report = std::move(r);
  }
  return out;
}

// {name: [[pub ids of cluster 0], [cluster 1], ...]}
inline nlohmann::json assignments_json(const PipelineResult& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, o] : r.names) j[name] = o.clusters;
  return j;
}

// Names to process: explicit list, else every labeled name.
inline std::vector<std::string> resolve_names(const std::vector<std::string>& requested,
                                              const GroundTruth* truth) {
  if (!requested.empty()) return requested;
  std::vector<std::string> out;
  if (truth) {
    for (const auto& [name, e] : truth->names) out.push_back(name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationVariant {
  enum class Kind { Full, AddPath, RemovePath, NoAttention } kind = Kind::Full;
  std::string path;

  std::string label() const {
    switch (kind) {
      case Kind::Full: return "full";
      case Kind::AddPath: return "+" + path;
      case Kind::RemovePath: return "-" + path;
      case Kind::NoAttention: return "-att";
    }
    return "full";
  }
};

inline AblationVariant parse_variant(std::string_view s) {
  AblationVariant v;
  if (s == "full") return v;
  if (s == "-att") {
    v.kind = AblationVariant::Kind::NoAttention;
    return v;
  }
  if (s.size() > 1 && (s[0] == '+' || s[0] == '-')) {
    v.kind = s[0] == '+' ? AblationVariant::Kind::AddPath : AblationVariant::Kind::RemovePath;
    v.path = std::string(s.substr(1));
    if (!is_supported_metapath(v.path)) throw ConfigError("unsupported meta-path in variant '" + std::string(s) + "'");
    return v;
  }
  throw ConfigError("cannot parse ablation variant '" + std::string(s) + "'");
}

inline PipelineConfig apply_variant(PipelineConfig c, const AblationVariant& v) {
  auto& paths = c.metapaths;
  switch (v.kind) {
    case AblationVariant::Kind::Full:
      break;
    case AblationVariant::Kind::NoAttention:
      c.attention = false;
      break;
    case AblationVariant::Kind::AddPath:
      if (std::find(paths.begin(), paths.end(), v.path) != paths.end()) {
        throw ConfigError("variant " + v.label() + " adds a path already in the set");
      }
      paths.push_back(v.path);
      break;
    case AblationVariant::Kind::RemovePath: {
      auto it = std::find(paths.begin(), paths.end(), v.path);
      if (it == paths.end()) throw ConfigError("variant " + v.label() + " removes a path not in the set");
      paths.erase(it);
      if (paths.empty()) throw ConfigError("variant " + v.label() + " leaves no meta-paths");
      break;
    }
  }
  return c;
}

struct AblationRow {
  std::string variant;
  std::vector<std::string> paths;
  bool attention = true;
  double macro_f1 = 0.0;
  std::map<std::string, double> f1;
  std::vector<std::string> aborted;
};

// The full configuration always comes first; variants share seeds with it.
inline std::vector<AblationRow> run_ablation(const PipelineConfig& c, const Corpus& corpus,
                                             const GroundTruth& truth, const std::vector<std::string>& names,
                                             const std::vector<AblationVariant>& variants,
                                             const StageCache& cache = {}, const LogFn& log = {}) {
  std::vector<AblationVariant> all{AblationVariant{}};
  for (const auto& v : variants) {
    if (v.kind != AblationVariant::Kind::Full) all.push_back(v);
  }
  std::vector<PipelineConfig> configs;
  for (const auto& v : all) configs.push_back(apply_variant(c, v));  // validate everything first

  std::vector<AblationRow> rows;
  for (std::size_t k = 0; k < all.size(); ++k) {
    auto r = run_pipeline(configs[k], corpus, &truth, names, cache, log);
    AblationRow row;
    row.variant = all[k].label();
    row.paths = configs[k].metapaths;
    row.attention = configs[k].attention;
    row.aborted = r.aborted;
    for (const auto& n : r.report->names) row.f1[n.name] = n.scores.f1;
    row.macro_f1 = r.report->names.empty() ? 0.0 : r.report->macro_f1();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json to_json(const std::vector<AblationRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"variant", r.variant},
                 {"metapaths", r.paths},
                 {"attention", r.attention},
                 {"macro_pairwise_f1", r.macro_f1},
                 {"f1", r.f1},
                 {"aborted", r.aborted}});
  }
  return j;
}

}  // namespace namedis
