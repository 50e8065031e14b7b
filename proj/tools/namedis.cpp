// namedis: author name disambiguation over bibliographic records.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <namedis/namedis.hpp>

namespace fs = std::filesystem;
using namespace namedis;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kStage = 3, kGate = 4 };

struct Options {
  std::string config;
  std::vector<std::string> names;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool deterministic = false;
  std::string out;
  std::string pubs;
  std::string labels;
  std::string format;
  // eval
  std::string pred;
  // ablate
  std::vector<std::string> variants;
  // synth
  std::size_t authors = 5;
  std::size_t pubs_per_author = 10;
  std::size_t pool = 4;
  double noise = 0.0;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON configuration file");
  cmd->add_option("--name", o.names, "ambiguous name to process (repeatable)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_flag("--deterministic", o.deterministic, "force single-threaded deterministic mode");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--pubs", o.pubs, "publication records");
  cmd->add_option("--labels", o.labels, "ground-truth labels");
  cmd->add_option("--format", o.format, "whoiswho-json or jsonl");
}

PipelineConfig make_config(const Options& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (!o.pubs.empty()) c.pubs_path = o.pubs;
  if (!o.labels.empty()) c.labels_path = o.labels;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.format.empty()) c.format = parse_corpus_format(o.format);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.deterministic) c.mode = ExecutionMode::Deterministic;
  validate(c);
  return c;
}

struct Inputs {
  LoadedCorpus data;
  std::vector<std::string> names;
};

Inputs load_inputs(const PipelineConfig& c, const Options& o) {
  if (c.pubs_path.empty()) throw ConfigError("no publication file given (--pubs or paths.pubs)");
  Inputs in;
  std::optional<std::string> labels;
  if (!c.labels_path.empty()) labels = c.labels_path;
  in.data = load_corpus(c.pubs_path, c.format, labels);
  in.names = resolve_names(o.names, in.data.truth ? &*in.data.truth : nullptr);
  if (in.names.empty()) throw ConfigError("no names to process: pass --name or a labels file");
  return in;
}

std::string file_stem(const std::string& name) {
  std::string s;
  for (unsigned char ch : name) s += std::isalnum(ch) ? static_cast<char>(ch) : '_';
  return s.empty() ? "_" : s;
}

fs::path ensure_dir(const fs::path& p) {
  fs::create_directories(p);
  return p;
}

StageCache cache_for(const PipelineConfig& c) {
  return c.cache ? StageCache(default_cache_dir(c)) : StageCache{};
}

Block require_block(const Corpus& corpus, const std::string& name) {
  auto b = build_block(corpus, name);
  if (!b) throw DataError("no publications match '" + name + "'");
  return *b;
}

int cmd_ingest(const Options& o) {
  const auto c = make_config(o);
  const auto in = load_inputs(c, o);
  const fs::path out = ensure_dir(c.output_dir);
  save_corpus(in.data.corpus, (out / "corpus.json").string());
  if (in.data.truth) save_ground_truth(*in.data.truth, (out / "labels.json").string());
  nlohmann::json blocks = nlohmann::json::object();
  for (const auto& name : in.names) {
    auto b = build_block(in.data.corpus, name);
    nlohmann::json ids = nlohmann::json::array();
    if (b) {
      for (const auto& rec : b->pubs) ids.push_back(rec.id);
    }
    blocks[name] = ids;
  }
  write_json_file((out / "blocks.json").string(), blocks);
  std::cout << in.data.corpus.size() << " records, " << in.names.size() << " blocks\n";
  return kOk;
}

int cmd_walk(const Options& o) {
  const auto c = make_config(o);
  const auto in = load_inputs(c, o);
  for (const auto& name : in.names) {
    const auto block = require_block(in.data.corpus, name);
    const auto net = build_hetnet(block, c.words);
    const auto dir = ensure_dir(fs::path(c.output_dir) / "walks" / file_stem(name));
    for (const auto& p : c.metapaths) {
      const auto walks = stage_walks(net, MetaPath::parse(p), c, name_seed(c, name));
      std::ofstream f(dir / (p + ".tsv"));
      dump_walks(walks, net, f);
    }
  }
  return kOk;
}

int cmd_embed(const Options& o) {
  const auto c = make_config(o);
  const auto in = load_inputs(c, o);
  const auto cache = cache_for(c);
  for (const auto& name : in.names) {
    const auto block = require_block(in.data.corpus, name);
    const auto net = build_hetnet(block, c.words);
    const auto dir = ensure_dir(fs::path(c.output_dir) / "embed" / file_stem(name));
    for (const auto& p : c.metapaths) {
      const auto t = stage_embed(block, net, MetaPath::parse(p), c, name_seed(c, name), cache);
      save_table(t, (dir / (p + ".ndvt")).string());
    }
  }
  return kOk;
}

int cmd_fuse(const Options& o) {
  const auto c = make_config(o);
  const auto in = load_inputs(c, o);
  const auto cache = cache_for(c);
  const auto dir = ensure_dir(fs::path(c.output_dir) / "fuse");
  for (const auto& name : in.names) {
    const auto block = require_block(in.data.corpus, name);
    const auto net = build_hetnet(block, c.words);
    const auto seed = name_seed(c, name);
    std::vector<Matrix<double>> tables;
    for (const auto& p : c.metapaths) {
      tables.push_back(stage_embed(block, net, MetaPath::parse(p), c, seed, cache).vectors.cast<double>());
    }
    AdjacencyMatrix a = build_coauthor_adjacency(net);
    if (c.target == AdjacencyTarget::Labels) {
      const auto& truth = in.data.truth;
      if (!truth || !truth->names.contains(name)) throw DataError("no labels for '" + name + "'");
      a = build_label_adjacency(block, truth->names.at(name));
    }
    const auto r = stage_fuse(std::move(tables), a, c, seed);
    nlohmann::json alpha = nlohmann::json::object();
    for (std::size_t k = 0; k < c.metapaths.size(); ++k) alpha[c.metapaths[k]] = r.fused.alpha[k];
    write_json_file((dir / (file_stem(name) + ".json")).string(),
                    {{"alpha", alpha}, {"coefficients", r.fused.coefficients}, {"loss", r.epoch_loss}});
    EmbeddingTable z{"fused", {}, r.fused.z.cast<float>(), {seed, "attention"}};
    for (const auto& rec : block.pubs) z.ids.push_back(rec.id);
    save_table(z, (dir / (file_stem(name) + ".ndvt")).string());
  }
  return kOk;
}

int cmd_semantic(const Options& o) {
  const auto c = make_config(o);
  const auto in = load_inputs(c, o);
  const auto cache = cache_for(c);
  const auto dir = ensure_dir(fs::path(c.output_dir) / "semantic");
  for (const auto& name : in.names) {
    const auto block = require_block(in.data.corpus, name);
    const auto t = stage_semantic(block, c, name_seed(c, name), cache);
    EmbeddingTable out{"doc", {}, t.vectors, {name_seed(c, name), "pv-dbow"}};
    for (const auto& rec : block.pubs) out.ids.push_back(rec.id);
    save_table(out, (dir / (file_stem(name) + ".ndvt")).string());
  }
  return kOk;
}

nlohmann::json name_details(const NameOutcome& n) {
  nlohmann::json alpha = nlohmann::json::object();
  for (std::size_t k = 0; k < n.paths.size(); ++k) alpha[n.paths[k]] = n.alpha[k];
  return {{"alpha", alpha},
          {"method", to_string(n.clustering.chosen.method)},
          {"silhouette", {{"hdbscan", n.clustering.hdbscan_silhouette}, {"ap", n.clustering.ap_silhouette}}},
          {"ap_converged", n.clustering.ap.converged},
          {"clusters", n.clusters.size()},
          {"attention_loss", n.attention_loss}};
}

int gate(const PipelineConfig& c, const EvalReport& r) {
  if (c.f1_gate && !r.names.empty() && r.macro_f1() < *c.f1_gate) {
    std::cerr << "macro F1 " << r.macro_f1() << " is below the gate " << *c.f1_gate << '\n';
    return kGate;
  }
  return kOk;
}

int run_common(const Options& o, bool evaluate) {
  const auto c = make_config(o);
  const auto in = load_inputs(c, o);
  const fs::path out = ensure_dir(c.output_dir);
  const auto truth = evaluate && in.data.truth ? &*in.data.truth : nullptr;
  const auto r = run_pipeline(c, in.data.corpus, truth, in.names, cache_for(c), stderr_log());
  write_json_file((out / "assignments.json").string(), assignments_json(r));
  nlohmann::json details = nlohmann::json::object();
  for (const auto& [name, n] : r.names) details[name] = name_details(n);
  write_json_file((out / "details.json").string(), details);
  int code = kOk;
  if (r.report) {
    write_report(*r.report, (out / "report.json").string());
    if (!r.report->names.empty()) std::cout << "macro pairwise F1: " << r.report->macro_f1() << '\n';
    code = gate(c, *r.report);
  }
  if (!r.aborted.empty()) return kStage;
  return code;
}

int cmd_eval(const Options& o) {
  const auto c = make_config(o);
  if (o.pred.empty()) throw ConfigError("eval needs --pred <assignments.json>");
  if (c.labels_path.empty()) throw ConfigError("eval needs --labels");
  const auto truth = load_ground_truth(c.labels_path);
  nlohmann::json pred;
  try {
    pred = nlohmann::json::parse(detail::read_file(o.pred));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("assignments: ") + e.what(), e.byte);
  }
  EvalReport report;
  report.config = {{"assignments", o.pred}, {"labels", c.labels_path}};
  for (const auto& name : resolve_names(o.names, &truth)) {
    if (!truth.names.contains(name)) throw DataError("no labels for '" + name + "'");
    if (!pred.contains(name)) throw DataError("no assignment for '" + name + "'");
    std::vector<std::vector<std::string>> clusters;
    try {
      clusters = pred[name].get<std::vector<std::vector<std::string>>>();
    } catch (const nlohmann::json::exception&) {
      throw DataError("assignment for '" + name + "' is not a list of id lists");
    }
    report.names.push_back(evaluate_name(name, clusters, truth.names.at(name)));
  }
  const fs::path out = ensure_dir(c.output_dir);
  write_report(report, (out / "report.json").string());
  std::cout << "macro pairwise F1: " << report.macro_f1() << '\n';
  return gate(c, report);
}

int cmd_ablate(const Options& o) {
  const auto c = make_config(o);
  const auto in = load_inputs(c, o);
  if (!in.data.truth) throw ConfigError("ablation needs labels");
  std::vector<AblationVariant> variants;
  for (const auto& v : o.variants) variants.push_back(parse_variant(v));
  const auto rows = run_ablation(c, in.data.corpus, *in.data.truth, in.names, variants, cache_for(c), stderr_log());
  const fs::path out = ensure_dir(c.output_dir);
  write_json_file((out / "ablation.json").string(), to_json(rows));
  bool aborted = false;
  for (const auto& r : rows) {
    std::printf("%-10s %.4f\n", r.variant.c_str(), r.macro_f1);
    aborted = aborted || !r.aborted.empty();
  }
  return aborted ? kStage : kOk;
}

int cmd_synth(const Options& o) {
  const fs::path out = ensure_dir(o.out.empty() ? "synthetic" : o.out);
  const auto names = o.names.empty() ? std::vector<std::string>{"Wei Li"} : o.names;
  const std::uint64_t seed = o.seed.value_or(1);
  SyntheticParams p;
  p.n_authors = o.authors;
  p.pubs_per_author = o.pubs_per_author;
  p.coauthor_pool_per_author = o.pool;
  p.noise_rate = o.noise;
  const auto [corpus, truth] = generate_synthetic_corpus(p, names, seed);
  save_corpus(corpus, (out / "pubs.json").string());
  save_ground_truth(truth, (out / "labels.json").string());
  std::cout << corpus.size() << " records written to " << out.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Author name disambiguation"};
  app.require_subcommand(1);
  Options o;

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Sub subs[] = {
      {"ingest", "load records and labels, write normalized copies and blocks", cmd_ingest},
      {"walk", "sample meta-path walks", cmd_walk},
      {"embed", "train per-meta-path embeddings", cmd_embed},
      {"fuse", "attention fusion of per-path embeddings", cmd_fuse},
      {"semantic", "train document vectors", cmd_semantic},
      {"cluster", "full pipeline without evaluation", [](const Options& x) { return run_common(x, false); }},
      {"run", "full pipeline with evaluation when labels are present",
       [](const Options& x) { return run_common(x, true); }},
      {"eval", "score an assignments file against labels", cmd_eval},
      {"ablate", "compare meta-path and attention variants", cmd_ablate},
      {"synth", "generate a planted synthetic corpus", cmd_synth},
  };
  int (*chosen)(const Options&) = nullptr;
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, o);
    if (std::string_view(s.name) == "eval") cmd->add_option("--pred", o.pred, "assignments JSON");
    if (std::string_view(s.name) == "ablate") {
      cmd->add_option("--variants", o.variants, "variants such as -PAP +PYP -att")->delimiter(',');
    }
    if (std::string_view(s.name) == "synth") {
      cmd->add_option("--authors", o.authors, "planted entities per name");
      cmd->add_option("--pubs-per-author", o.pubs_per_author, "publications per entity");
      cmd->add_option("--pool", o.pool, "co-author pool per entity");
      cmd->add_option("--noise", o.noise, "probability of a foreign co-author");
    }
    cmd->callback([&chosen, run = s.run] { chosen = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  try {
    return chosen(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const StageError& e) {
    std::cerr << "stage failure: " << e.what() << '\n';
    return kStage;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
}
