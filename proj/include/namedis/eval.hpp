#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "cluster.hpp"
#include "corpus.hpp"
#include "error.hpp"

namespace namedis {

struct PairwiseScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t predicted_pairs = 0;
  std::uint64_t true_pairs = 0;
  std::uint64_t common_pairs = 0;
};

namespace detail {

inline std::uint64_t choose2(std::uint64_t n) { return n * (n - 1) / 2; }

inline PairwiseScores scores_from_counts(std::uint64_t pred, std::uint64_t truth, std::uint64_t common) {
  PairwiseScores s;
  s.predicted_pairs = pred;
  s.true_pairs = truth;
  s.common_pairs = common;
  if (pred == 0 && truth == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  if (pred == 0 || truth == 0) return s;
  s.precision = static_cast<double>(common) / static_cast<double>(pred);
  s.recall = static_cast<double>(common) / static_cast<double>(truth);
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace detail

// Pair counts from the contingency table of two labelings over the same items.
// Labels are arbitrary integers; negative labels are ordinary labels here.
inline PairwiseScores pairwise_prf(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw DataError("prediction and truth cover different item counts");
  std::map<std::pair<int, int>, std::uint64_t> cells;
  std::map<int, std::uint64_t> pred_sizes, true_sizes;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++cells[{pred[i], truth[i]}];
    ++pred_sizes[pred[i]];
    ++true_sizes[truth[i]];
  }
  std::uint64_t p = 0, t = 0, c = 0;
  for (const auto& [k, n] : pred_sizes) p += detail::choose2(n);
  for (const auto& [k, n] : true_sizes) t += detail::choose2(n);
  for (const auto& [k, n] : cells) c += detail::choose2(n);
  return detail::scores_from_counts(p, t, c);
}

struct AlignedLabels {
  std::vector<int> pred;
  std::vector<int> truth;
  std::size_t dropped = 0;  // predicted pubs absent from the truth
};

// Aligns predicted clusters (pub-id lists) with labeled entities. Pubs the
// truth does not mention are dropped; a labeled pub missing from the
// prediction is an error.
inline AlignedLabels align_clusters(const std::vector<std::vector<std::string>>& clusters,
                                    const std::vector<AuthorEntity>& entities) {
  std::unordered_map<std::string, int> truth_of;
  for (std::size_t e = 0; e < entities.size(); ++e) {
    for (const auto& id : entities[e].pubs) {
      if (!truth_of.emplace(id, static_cast<int>(e)).second) {
        throw DataError("pub '" + id + "' is labeled twice");
      }
    }
  }
  AlignedLabels out;
  std::unordered_map<std::string, bool> seen;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& id : clusters[c]) {
      if (!seen.emplace(id, true).second) throw DataError("pub '" + id + "' is predicted twice");
      auto it = truth_of.find(id);
      if (it == truth_of.end()) {
        ++out.dropped;
        continue;
      }
      out.pred.push_back(static_cast<int>(c));
      out.truth.push_back(it->second);
    }
  }
  for (const auto& [id, e] : truth_of) {
    if (!seen.count(id)) throw DataError("labeled pub '" + id + "' is missing from the prediction");
  }
  return out;
}

inline PairwiseScores pairwise_prf(const std::vector<std::vector<std::string>>& clusters,
                                   const std::vector<AuthorEntity>& entities) {
  const auto a = align_clusters(clusters, entities);
  return pairwise_prf(a.pred, a.truth);
}

// Cluster member lists (pub ids) from per-pub labels in block order.
inline std::vector<std::vector<std::string>> clusters_of(const Block& block,
                                                         const ClusterAssignment& c) {
  if (c.labels.size() != block.size()) throw DataError("assignment size does not match block");
  std::vector<std::vector<std::string>> out(c.cluster_count);
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (c.labels[i] < 0) throw DataError("assignment still contains noise labels");
    const auto l = static_cast<std::size_t>(c.labels[i]);
    if (l >= out.size()) out.resize(l + 1);
    out[l].push_back(block.id(i));
  }
  return out;
}

struct NameResult {
  std::string name;
  PairwiseScores scores;
  std::size_t n = 0;  // scored pubs
  std::size_t predicted_clusters = 0;
  std::size_t true_clusters = 0;
  std::size_t dropped = 0;
  std::string method;
  std::vector<std::string> paths;
  std::vector<double> alpha;
};

inline NameResult evaluate_name(const std::string& name,
                                const std::vector<std::vector<std::string>>& clusters,
                                const std::vector<AuthorEntity>& entities) {
  const auto a = align_clusters(clusters, entities);
  NameResult r;
  r.name = name;
  r.scores = pairwise_prf(a.pred, a.truth);
  r.n = a.pred.size();
  r.dropped = a.dropped;
  r.predicted_clusters = std::set<int>(a.pred.begin(), a.pred.end()).size();
  for (const auto& e : entities) r.true_clusters += !e.pubs.empty();
  return r;
}

inline double macro_pairwise_f1(const std::vector<NameResult>& results) {
  if (results.empty()) throw DataError("macro F1 needs at least one name");
  double s = 0.0;
  for (const auto& r : results) s += r.scores.f1;
  return s / static_cast<double>(results.size());
}

inline constexpr double kReferenceAminerF1 = 0.897;
inline constexpr double kReferenceCiteSeerXF1 = 0.719;

struct EvalReport {
  std::vector<NameResult> names;
  std::vector<std::string> aborted;
  nlohmann::json config;  // echo of the run configuration

  double macro_f1() const { return macro_pairwise_f1(names); }
};

inline nlohmann::json to_json(const NameResult& r) {
  nlohmann::json j;
  j["precision"] = r.scores.precision;
  j["recall"] = r.scores.recall;
  j["f1"] = r.scores.f1;
  j["n"] = r.n;
  j["s_pred"] = r.predicted_clusters;
  j["s_true"] = r.true_clusters;
  j["dropped_unlabeled"] = r.dropped;
  j["pairs"] = {{"predicted", r.scores.predicted_pairs},
                {"true", r.scores.true_pairs},
                {"common", r.scores.common_pairs}};
  if (!r.method.empty()) j["method"] = r.method;
  if (!r.paths.empty()) {
    nlohmann::json alpha = nlohmann::json::object();
    for (std::size_t k = 0; k < r.paths.size() && k < r.alpha.size(); ++k) alpha[r.paths[k]] = r.alpha[k];
    j["alpha"] = alpha;
  }
  return j;
}

// nlohmann::json objects keep keys sorted, so dump() is deterministic.
inline nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["names"] = nlohmann::json::object();
  for (const auto& r : report.names) j["names"][r.name] = to_json(r);
  j["macro_pairwise_f1"] = report.names.empty() ? nlohmann::json(nullptr) : nlohmann::json(report.macro_f1());
  j["aborted"] = report.aborted;
  j["config"] = report.config;
  j["reference_macro_f1"] = {{"aminer", kReferenceAminerF1}, {"citeseerx", kReferenceCiteSeerXF1}};
  return j;
}

inline void write_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write report to '" + path + "'");
  out << to_json(report).dump(2) << '\n';
  if (!out) throw DataError("failed writing report to '" + path + "'");
}

}  // namespace namedis
