#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "similarity.hpp"

namespace namedis {

enum class ClusterMethod { Hdbscan, AffinityPropagation, Adaptive };

inline std::string to_string(ClusterMethod m) {
  switch (m) {
    case ClusterMethod::Hdbscan: return "hdbscan";
    case ClusterMethod::AffinityPropagation: return "ap";
    case ClusterMethod::Adaptive: return "adaptive";
  }
  return "adaptive";
}

struct ClusterAssignment {
  std::vector<int> labels;  // -1 marks noise (HDBSCAN only, before reassignment)
  std::vector<bool> noise;
  std::size_t cluster_count = 0;
  ClusterMethod method = ClusterMethod::Adaptive;
  bool converged = true;
};

// Renumbers non-negative labels densely in order of first appearance.
inline std::size_t densify_labels(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (auto& l : labels) {
    if (l < 0) continue;
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return remap.size();
}

inline SimilarityMatrix combine_similarity(const SimilarityMatrix& structural,
                                           const SimilarityMatrix& semantic, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (structural.size() != semantic.size()) throw ConfigError("similarity matrices differ in shape");
  const std::size_t n = structural.size();
  SimilarityMatrix m{Matrix<double>(n, n), SimilarityRole::Combined};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m.values(i, j) = beta * structural(i, j) + (1.0 - beta) * semantic(i, j);
    }
  }
  return m;
}

// D = 1 - M, clamped at 0, zero diagonal.
inline Matrix<double> similarity_to_distance(const SimilarityMatrix& m) {
  const std::size_t n = m.size();
  Matrix<double> d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : std::max(0.0, 1.0 - m(i, j));
  }
  return d;
}

// ---------------------------------------------------------------------------
// HDBSCAN over a precomputed distance matrix

struct HdbscanParams {
  std::size_t min_cluster_size = 2;
  std::size_t min_samples = 2;
};

namespace hdbscan {

struct Edge {
  std::uint32_t a;
  std::uint32_t b;
  double weight;
};

// Distance to the min_samples-th nearest point, counting the point itself.
inline std::vector<double> core_distances(const Matrix<double>& d, std::size_t min_samples) {
  const std::size_t n = d.rows();
  std::vector<double> core(n, 0.0);
  if (n == 0) return core;
  const std::size_t k = std::min(std::max<std::size_t>(min_samples, 1), n) - 1;
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.assign(d.row(i).begin(), d.row(i).end());
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
    core[i] = row[k];
  }
  return core;
}

inline Matrix<double> mutual_reachability(const Matrix<double>& d, std::size_t min_samples) {
  const auto core = core_distances(d, min_samples);
  const std::size_t n = d.rows();
  Matrix<double> mr(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) mr(i, j) = std::max({core[i], core[j], d(i, j)});
    }
  }
  return mr;
}

// Prim's algorithm on a dense symmetric weight matrix.
inline std::vector<Edge> minimum_spanning_tree(const Matrix<double>& w) {
  const std::size_t n = w.rows();
  std::vector<Edge> edges;
  if (n < 2) return edges;
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> from(n, 0);
  std::size_t cur = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && w(cur, j) < best[j]) {
        best[j] = w(cur, j);
        from[j] = static_cast<std::uint32_t>(cur);
      }
    }
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (next == n || best[j] < best[next])) next = j;
    }
    in_tree[next] = true;
    edges.push_back({from[next], static_cast<std::uint32_t>(next), best[next]});
    cur = next;
  }
  return edges;
}

// Merge k creates node n + k from two existing nodes (points are 0..n-1).
struct Merge {
  std::size_t left;
  std::size_t right;
  double distance;
  std::size_t size;
};

inline std::vector<Merge> single_linkage(std::size_t n, std::vector<Edge> mst) {
  std::stable_sort(mst.begin(), mst.end(),
                   [](const Edge& x, const Edge& y) { return x.weight < y.weight; });
  std::vector<std::size_t> parent(2 * n), size(2 * n, 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<Merge> merges;
  std::size_t next = n;
  for (const auto& e : mst) {
    const std::size_t ra = find(e.a), rb = find(e.b);
    merges.push_back({ra, rb, e.weight, size[ra] + size[rb]});
    parent[ra] = parent[rb] = next;
    size[next] = size[ra] + size[rb];
    ++next;
  }
  return merges;
}

struct CondensedEdge {
  std::size_t parent;  // cluster label (>= n)
  std::size_t child;   // point (< n) or cluster label (>= n)
  double lambda;
  std::size_t size;
};

inline constexpr double kMaxLambda = 1e12;

inline double lambda_of(double distance) {
  return distance > 1.0 / kMaxLambda ? 1.0 / distance : kMaxLambda;
}

inline std::vector<CondensedEdge> condense_tree(const std::vector<Merge>& merges, std::size_t n,
                                                std::size_t min_cluster_size) {
  std::vector<CondensedEdge> out;
  if (n < 2) return out;
  const std::size_t root = 2 * n - 2;
  auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : merges[node - n].size; };
  auto subtree_points = [&](std::size_t node) {
    std::vector<std::size_t> pts, stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        pts.push_back(x);
      } else {
        stack.push_back(merges[x - n].right);
        stack.push_back(merges[x - n].left);
      }
    }
    return pts;
  };

  std::vector<std::size_t> relabel(2 * n - 1, 0);
  relabel[root] = n;
  std::size_t next_label = n + 1;
  std::deque<std::size_t> queue{root};
  while (!queue.empty()) {
    const std::size_t node = queue.front();
    queue.pop_front();
    if (node < n) continue;
    const auto& m = merges[node - n];
    const double lambda = lambda_of(m.distance);
    const std::size_t lc = node_size(m.left), rc = node_size(m.right);
    const std::size_t label = relabel[node];
    auto fall_out = [&](std::size_t child) {
      for (auto p : subtree_points(child)) out.push_back({label, p, lambda, 1});
    };
    if (lc >= min_cluster_size && rc >= min_cluster_size) {
      for (std::size_t child : {m.left, m.right}) {
        relabel[child] = next_label++;
        out.push_back({label, relabel[child], lambda, node_size(child)});
        queue.push_back(child);
      }
    } else if (lc < min_cluster_size && rc < min_cluster_size) {
      fall_out(m.left);
      fall_out(m.right);
    } else if (lc < min_cluster_size) {
      relabel[m.right] = label;
      fall_out(m.left);
      queue.push_back(m.right);
    } else {
      relabel[m.left] = label;
      fall_out(m.right);
      queue.push_back(m.left);
    }
  }
  return out;
}

// Excess-of-mass selection. Returns the selected cluster labels. The root is
// selected only when it never splits into two clusters.
inline std::vector<std::size_t> select_clusters(const std::vector<CondensedEdge>& tree,
                                                std::size_t n) {
  if (tree.empty()) return {};
  std::size_t max_label = n;
  for (const auto& e : tree) max_label = std::max({max_label, e.parent, e.child});
  const std::size_t count = max_label - n + 1;
  std::vector<double> birth(count, 0.0), stability(count, 0.0);
  std::vector<std::vector<std::size_t>> children(count);
  for (const auto& e : tree) {
    if (e.child >= n) {
      birth[e.child - n] = e.lambda;
      children[e.parent - n].push_back(e.child);
    }
  }
  for (const auto& e : tree) {
    stability[e.parent - n] += (e.lambda - birth[e.parent - n]) * static_cast<double>(e.size);
  }
  if (children[0].empty()) return {n};

  std::vector<bool> selected(count, false);
  std::function<void(std::size_t)> deselect = [&](std::size_t c) {
    for (auto ch : children[c - n]) {
      selected[ch - n] = false;
      deselect(ch);
    }
  };
  for (std::size_t c = max_label; c > n; --c) {
    double sub = 0.0;
    for (auto ch : children[c - n]) sub += stability[ch - n];
    if (!children[c - n].empty() && sub > stability[c - n]) {
      stability[c - n] = sub;
    } else {
      selected[c - n] = true;
      deselect(c);
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t c = n + 1; c <= max_label; ++c) {
    if (selected[c - n]) out.push_back(c);
  }
  return out;
}

}  // namespace hdbscan

inline ClusterAssignment hdbscan_cluster_distances(const Matrix<double>& d, const HdbscanParams& p) {
  if (p.min_cluster_size < 2) throw ConfigError("min_cluster_size must be >= 2");
  if (p.min_samples < 1) throw ConfigError("min_samples must be >= 1");
  const std::size_t n = d.rows();
  ClusterAssignment out;
  out.method = ClusterMethod::Hdbscan;
  out.labels.assign(n, -1);
  out.noise.assign(n, true);
  if (n < p.min_cluster_size || n < 2) return out;

  const auto mr = hdbscan::mutual_reachability(d, p.min_samples);
  const auto merges = hdbscan::single_linkage(n, hdbscan::minimum_spanning_tree(mr));
  const auto tree = hdbscan::condense_tree(merges, n, p.min_cluster_size);
  const auto chosen = hdbscan::select_clusters(tree, n);

  std::map<std::size_t, std::size_t> parent_cluster;  // cluster -> parent cluster
  std::vector<std::size_t> point_parent(n, n);
  for (const auto& e : tree) {
    if (e.child < n) {
      point_parent[e.child] = e.parent;
    } else {
      parent_cluster[e.child] = e.parent;
    }
  }
  std::map<std::size_t, int> chosen_label;
  for (auto c : chosen) chosen_label.emplace(c, static_cast<int>(chosen_label.size()));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = point_parent[i];
    while (true) {
      if (auto it = chosen_label.find(c); it != chosen_label.end()) {
        out.labels[i] = it->second;
        out.noise[i] = false;
        break;
      }
      auto up = parent_cluster.find(c);
      if (up == parent_cluster.end()) break;
      c = up->second;
    }
  }
  out.cluster_count = densify_labels(out.labels);
  return out;
}

inline ClusterAssignment hdbscan_cluster(const SimilarityMatrix& m, const HdbscanParams& p = {}) {
  return hdbscan_cluster_distances(similarity_to_distance(m), p);
}

// ---------------------------------------------------------------------------
// Affinity propagation

struct ApParams {
  double damping = 0.5;
  std::optional<double> preference;  // default: median off-diagonal similarity
  std::size_t max_iter = 200;
  std::size_t convergence_iter = 15;
};

inline double median_off_diagonal(const SimilarityMatrix& m) {
  std::vector<double> v;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (i != j) v.push_back(m(i, j));
    }
  }
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Assigns every point to its most similar exemplar; exemplars label themselves.
inline std::vector<int> assign_to_exemplars(const Matrix<double>& s,
                                            const std::vector<std::size_t>& exemplars) {
  const std::size_t n = s.rows();
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < exemplars.size(); ++k) {
      if (s(i, exemplars[k]) > s(i, exemplars[best])) best = k;
    }
    labels[i] = static_cast<int>(best);
  }
  for (std::size_t k = 0; k < exemplars.size(); ++k) labels[exemplars[k]] = static_cast<int>(k);
  return labels;
}

inline ClusterAssignment ap_cluster(const SimilarityMatrix& m, const ApParams& p = {}) {
  if (!(p.damping >= 0.5 && p.damping < 1.0)) throw ConfigError("AP damping must lie in [0.5, 1)");
  if (p.convergence_iter < 1) throw ConfigError("AP convergence_iter must be >= 1");
  const std::size_t n = m.size();
  ClusterAssignment out;
  out.method = ClusterMethod::AffinityPropagation;
  out.noise.assign(n, false);
  if (n == 0) return out;
  const double pref = p.preference.value_or(median_off_diagonal(m));

  Matrix<double> s = m.values;
  for (std::size_t i = 0; i < n; ++i) s(i, i) = pref;

  // Every similarity and the preference equal: the updates are symmetric and
  // never break ties, so decide directly.
  bool all_equal = true;
  for (double x : s.data()) all_equal = all_equal && x == s(0, 0);
  if (n == 1 || all_equal) {
    out.labels.assign(n, 0);
    out.cluster_count = 1;
    // No message passing ran; a fully tied n > 1 never settles on an exemplar.
    out.converged = n == 1;
    return out;
  }

  Matrix<double> r(n, n, 0.0), a(n, n, 0.0);
  std::vector<bool> exemplar(n, false), previous(n, false);
  std::size_t unchanged = 0;
  bool converged = false;
  for (std::size_t it = 0; it < p.max_iter; ++it) {
    // Responsibilities.
    for (std::size_t i = 0; i < n; ++i) {
      double first = -std::numeric_limits<double>::infinity(), second = first;
      std::size_t arg = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = a(i, k) + s(i, k);
        if (v > first) {
          second = first;
          first = v;
          arg = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double fresh = s(i, k) - (k == arg ? second : first);
        r(i, k) = p.damping * r(i, k) + (1.0 - p.damping) * fresh;
      }
    }
    // Availabilities.
    for (std::size_t k = 0; k < n; ++k) {
      double col = 0.0;
      for (std::size_t i = 0; i < n; ++i) col += i == k ? r(k, k) : std::max(0.0, r(i, k));
      for (std::size_t i = 0; i < n; ++i) {
        double fresh;
        if (i == k) {
          fresh = col - r(k, k);
        } else {
          fresh = std::min(0.0, col - std::max(0.0, r(i, k)));
        }
        a(i, k) = p.damping * a(i, k) + (1.0 - p.damping) * fresh;
      }
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      exemplar[i] = a(i, i) + r(i, i) > 0.0;
      count += exemplar[i];
    }
    unchanged = (it > 0 && exemplar == previous) ? unchanged + 1 : 1;
    previous = exemplar;
    if (unchanged >= p.convergence_iter && count > 0) {
      converged = true;
      break;
    }
  }

  std::vector<std::size_t> exemplars;
  for (std::size_t i = 0; i < n; ++i) {
    if (exemplar[i]) exemplars.push_back(i);
  }
  if (exemplars.empty()) {
    // No positive self-evidence anywhere: fall back to the single strongest point.
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (a(i, i) + r(i, i) > a(best, best) + r(best, best)) best = i;
    }
    exemplars.push_back(best);
    converged = false;
  }
  out.labels = assign_to_exemplars(s, exemplars);
  out.cluster_count = densify_labels(out.labels);
  out.converged = converged;
  return out;
}

// ---------------------------------------------------------------------------
// Silhouette and adaptive selection

// Mean silhouette over all points; singleton clusters score 0, and a
// partition with fewer than two clusters scores 0.
inline double silhouette_score(const Matrix<double>& d, const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  if (n == 0) return 0.0;
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  if (k < 2) return 0.0;
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] < 2) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(labels[j])] += d(i, j);
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

struct AdaptiveParams {
  HdbscanParams hdbscan;
  ApParams ap;
  double noise_floor = 0.1;  // tau
};

struct AdaptiveOutcome {
  ClusterAssignment chosen;
  ClusterAssignment hdbscan;  // after noise reassignment
  ClusterAssignment ap;
  double hdbscan_silhouette = 0.0;
  double ap_silhouette = 0.0;
};

// Moves each noise point into the cluster with the highest mean similarity
// when that mean reaches `floor`; otherwise it becomes a singleton.
inline void reassign_noise(const SimilarityMatrix& m, ClusterAssignment& c, double floor) {
  const std::size_t n = c.labels.size();
  const auto k = static_cast<std::size_t>(c.cluster_count);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (c.labels[i] >= 0) members[static_cast<std::size_t>(c.labels[i])].push_back(i);
  }
  int next = static_cast<int>(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (c.labels[i] >= 0) continue;
    int best = -1;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (std::size_t cl = 0; cl < k; ++cl) {
      double s = 0.0;
      for (auto j : members[cl]) s += m(i, j);
      const double mean = s / static_cast<double>(members[cl].size());
      if (mean > best_mean) {
        best_mean = mean;
        best = static_cast<int>(cl);
      }
    }
    c.labels[i] = (best >= 0 && best_mean >= floor) ? best : next++;
  }
  c.cluster_count = densify_labels(c.labels);
}

inline AdaptiveOutcome adaptive_cluster_detailed(const SimilarityMatrix& m,
                                                 const AdaptiveParams& p = {}) {
  AdaptiveOutcome out;
  const auto d = similarity_to_distance(m);
  out.hdbscan = hdbscan_cluster_distances(d, p.hdbscan);
  reassign_noise(m, out.hdbscan, p.noise_floor);
  out.ap = ap_cluster(m, p.ap);
  out.hdbscan_silhouette = silhouette_score(d, out.hdbscan.labels);
  out.ap_silhouette = silhouette_score(d, out.ap.labels);
  out.chosen = out.ap_silhouette > out.hdbscan_silhouette ? out.ap : out.hdbscan;
  return out;
}

inline ClusterAssignment adaptive_cluster(const SimilarityMatrix& m, const AdaptiveParams& p = {}) {
  return adaptive_cluster_detailed(m, p).chosen;
}

}  // namespace namedis
