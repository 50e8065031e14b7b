#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"

namespace namedis {

enum class NodeType : std::uint8_t { Pub = 0, Author, Org, Venue, Year, Word };

inline constexpr std::size_t kNodeTypeCount = 6;

inline char type_letter(NodeType t) {
  static constexpr std::array<char, kNodeTypeCount> letters = {'P', 'A', 'O', 'V', 'Y', 'W'};
  return letters[static_cast<std::size_t>(t)];
}

inline std::optional<NodeType> type_from_letter(char c) {
  switch (c) {
    case 'P': return NodeType::Pub;
    case 'A': return NodeType::Author;
    case 'O': return NodeType::Org;
    case 'V': return NodeType::Venue;
    case 'Y': return NodeType::Year;
    case 'W': return NodeType::Word;
    default: return std::nullopt;
  }
}

// A symmetric schema alternating Pub and attribute types, e.g. P-A-P or
// P-A-P-A-P. Named by its letters ("PAP").
class MetaPath {
 public:
  static MetaPath parse(std::string_view name) {
    std::string letters;
    for (char c : name) {
      if (c == '-' || c == ' ') continue;
      letters.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    MetaPath path;
    path.name_ = letters;
    for (char c : letters) {
      auto t = type_from_letter(c);
      if (!t) throw ConfigError("meta-path '" + std::string(name) + "': unknown node type '" + c + "'");
      path.schema_.push_back(*t);
    }
    const auto& s = path.schema_;
    if (s.size() < 3 || s.size() % 2 == 0) {
      throw ConfigError("meta-path '" + letters + "' must have odd length >= 3");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool pub_slot = i % 2 == 0;
      if (pub_slot != (s[i] == NodeType::Pub)) {
        throw ConfigError("meta-path '" + letters + "' must alternate Pub and attribute types");
      }
      if (s[i] != s[s.size() - 1 - i]) {
        throw ConfigError("meta-path '" + letters + "' is not symmetric");
      }
    }
    return path;
  }

  const std::string& name() const { return name_; }
  std::span<const NodeType> schema() const { return schema_; }
  std::size_t hops() const { return schema_.size() - 1; }
  // Attribute type of the first hop; drives initialization token bags.
  NodeType primary_attribute() const { return schema_[1]; }

  bool operator==(const MetaPath& o) const { return name_ == o.name_; }

 private:
  std::string name_;
  std::vector<NodeType> schema_;
};

inline std::vector<MetaPath> default_metapaths() {
  return {MetaPath::parse("PAP"), MetaPath::parse("POP"), MetaPath::parse("PVP"),
          MetaPath::parse("PWP")};
}

inline bool is_supported_metapath(std::string_view name) {
  static constexpr std::array<std::string_view, 6> supported = {"PAP", "POP", "PVP",
                                                                "PWP", "PYP", "PAPAP"};
  for (auto s : supported) {
    if (s == name) return true;
  }
  return false;
}

struct WordFilter {
  std::size_t min_count = 2;
  double max_fraction = 0.2;
};

struct AttributeNode {
  NodeType type;
  std::string label;
  std::vector<std::uint32_t> pubs;  // sorted, unique
};

// Bipartite pub <-> attribute graph for one block.
class HetNet {
 public:
  std::uint32_t add_pub(std::string id) {
    pub_ids_.push_back(std::move(id));
    pub_attrs_.emplace_back();
    return static_cast<std::uint32_t>(pub_ids_.size() - 1);
  }

  // Idempotent: repeated (pub, type, label) edges collapse to one.
  void add_edge(std::uint32_t pub, NodeType type, const std::string& label) {
    if (type == NodeType::Pub) throw ConfigError("pub-pub edges are not allowed");
    auto [it, inserted] = lookup_.try_emplace({type, label},
                                              static_cast<std::uint32_t>(attrs_.size()));
    if (inserted) attrs_.push_back({type, label, {}});
    const std::uint32_t a = it->second;
    auto& pubs = attrs_[a].pubs;
    auto pos = std::lower_bound(pubs.begin(), pubs.end(), pub);
    if (pos != pubs.end() && *pos == pub) return;
    pubs.insert(pos, pub);
    auto& mine = pub_attrs_.at(pub)[static_cast<std::size_t>(type)];
    mine.insert(std::lower_bound(mine.begin(), mine.end(), a), a);
  }

  std::size_t pub_count() const { return pub_ids_.size(); }
  std::size_t attribute_count() const { return attrs_.size(); }
  const std::string& pub_id(std::size_t i) const { return pub_ids_[i]; }
  const AttributeNode& attribute(std::size_t a) const { return attrs_[a]; }

  std::span<const std::uint32_t> attributes_of(std::size_t pub, NodeType type) const {
    return pub_attrs_[pub][static_cast<std::size_t>(type)];
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& a : attrs_) n += a.pubs.size();
    return n;
  }

  std::optional<std::uint32_t> find_attribute(NodeType type, const std::string& label) const {
    auto it = lookup_.find({type, label});
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> pub_ids_;
  std::vector<std::array<std::vector<std::uint32_t>, kNodeTypeCount>> pub_attrs_;
  std::vector<AttributeNode> attrs_;
  std::map<std::pair<NodeType, std::string>, std::uint32_t> lookup_;
};

// Attribute labels a record contributes for one attribute type. Word labels
// are returned unfiltered (document-frequency bounds are applied per block).
inline std::vector<std::string> record_attributes(const PublicationRecord& rec,
                                                  std::string_view block_key, NodeType type) {
  std::vector<std::string> out;
  switch (type) {
    case NodeType::Author: {
      for (const auto& a : rec.authors) {
        auto k = author_name_key(a.name);
        if (k && *k != block_key) out.push_back(*k);
      }
      break;
    }
    case NodeType::Org: {
      for (auto i : matching_authors(rec, block_key)) {
        auto org = normalize_attribute(rec.authors[i].org);
        if (!org.empty()) out.push_back(std::move(org));
      }
      break;
    }
    case NodeType::Venue: {
      auto v = normalize_attribute(rec.venue);
      if (!v.empty()) out.push_back(std::move(v));
      break;
    }
    case NodeType::Year:
      if (rec.year) out.push_back("y" + std::to_string(*rec.year));
      break;
    case NodeType::Word:
      out = tokenize_text(rec.title, {}, rec.keywords);
      break;
    case NodeType::Pub:
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline HetNet build_hetnet(const Block& block, const WordFilter& words = {}) {
  if (block.empty()) throw DataError("cannot build a network for an empty block");
  HetNet net;
  for (const auto& rec : block.pubs) net.add_pub(rec.id);

  std::vector<std::vector<std::string>> pub_words(block.size());
  std::map<std::string, std::size_t> df;
  for (std::uint32_t i = 0; i < block.size(); ++i) {
    const auto& rec = block.pubs[i];
    for (NodeType t : {NodeType::Author, NodeType::Org, NodeType::Venue, NodeType::Year}) {
      for (const auto& label : record_attributes(rec, block.key, t)) net.add_edge(i, t, label);
    }
    pub_words[i] = record_attributes(rec, block.key, NodeType::Word);
    for (const auto& w : pub_words[i]) ++df[w];
  }
  const double max_df = words.max_fraction * static_cast<double>(block.size());
  for (std::uint32_t i = 0; i < block.size(); ++i) {
    for (const auto& w : pub_words[i]) {
      const std::size_t n = df[w];
      if (n >= words.min_count && static_cast<double>(n) <= max_df) {
        net.add_edge(i, NodeType::Word, w);
      }
    }
  }
  return net;
}

// Pub-pub graph induced by a meta-path. weight(i, j) counts the distinct
// schema-conforming walks from i to j, i.e. distinct interior realizations.
class ProjectedGraph {
 public:
  struct Neighbor {
    std::uint32_t pub;
    std::uint64_t weight;
    bool operator==(const Neighbor&) const = default;
  };

  explicit ProjectedGraph(std::size_t n = 0) : adjacency_(n) {}

  std::size_t pub_count() const { return adjacency_.size(); }
  std::span<const Neighbor> neighbors(std::size_t i) const { return adjacency_[i]; }

  std::uint64_t weight(std::size_t i, std::size_t j) const {
    const auto& row = adjacency_[i];
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const Neighbor& n, std::size_t p) { return n.pub < p; });
    return (it != row.end() && it->pub == j) ? it->weight : 0;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& row : adjacency_) n += row.size();
    return n / 2;
  }

  std::vector<Neighbor>& row(std::size_t i) { return adjacency_[i]; }

 private:
  std::vector<std::vector<Neighbor>> adjacency_;
};

inline ProjectedGraph project_metapath(const HetNet& net, const MetaPath& path) {
  const std::size_t n = net.pub_count();
  ProjectedGraph graph(n);
  const auto schema = path.schema();
  std::vector<std::uint64_t> pub_count(n), attr_count(net.attribute_count());
  std::vector<std::uint32_t> pubs_live, attrs_live;

  for (std::uint32_t start = 0; start < n; ++start) {
    pubs_live.assign(1, start);
    pub_count[start] = 1;
    for (std::size_t step = 1; step < schema.size(); step += 2) {
      // pub -> attribute
      attrs_live.clear();
      for (auto p : pubs_live) {
        for (auto a : net.attributes_of(p, schema[step])) {
          if (attr_count[a] == 0) attrs_live.push_back(a);
          attr_count[a] += pub_count[p];
        }
        pub_count[p] = 0;
      }
      // attribute -> pub
      pubs_live.clear();
      for (auto a : attrs_live) {
        for (auto p : net.attribute(a).pubs) {
          if (pub_count[p] == 0) pubs_live.push_back(p);
          pub_count[p] += attr_count[a];
        }
        attr_count[a] = 0;
      }
    }
    std::sort(pubs_live.begin(), pubs_live.end());
    auto& row = graph.row(start);
    for (auto p : pubs_live) {
      if (p != start) row.push_back({p, pub_count[p]});
      pub_count[p] = 0;
    }
  }
  return graph;
}

// Tab-separated edge lists with type-prefixed node ids, for debugging.
inline void dump_hetnet(const HetNet& net, std::ostream& out) {
  for (std::size_t a = 0; a < net.attribute_count(); ++a) {
    const auto& node = net.attribute(a);
    for (auto p : node.pubs) {
      out << "P:" << net.pub_id(p) << '\t' << type_letter(node.type) << ':' << node.label << '\n';
    }
  }
}

inline void dump_projection(const HetNet& net, const ProjectedGraph& graph, std::ostream& out) {
  for (std::size_t i = 0; i < graph.pub_count(); ++i) {
    for (const auto& nb : graph.neighbors(i)) {
      if (nb.pub > i) {
        out << "P:" << net.pub_id(i) << "\tP:" << net.pub_id(nb.pub) << '\t' << nb.weight << '\n';
      }
    }
  }
}

}  // namespace namedis
