#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "stopwords.hpp"

namespace namedis {

struct Author {
  std::string name;
  std::string org;

  bool operator==(const Author&) const = default;
};

struct PublicationRecord {
  std::string id;
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;
  std::vector<Author> authors;
  std::string venue;
  std::optional<int> year;

  bool operator==(const PublicationRecord&) const = default;
};

// Records keyed (and therefore ordered) by id.
using Corpus = std::map<std::string, PublicationRecord>;

struct AuthorEntity {
  std::string id;
  std::vector<std::string> pubs;

  bool operator==(const AuthorEntity&) const = default;
};

// Labelled author entities per ambiguous name, keyed by the name as written
// in the labels file.
struct GroundTruth {
  std::map<std::string, std::vector<AuthorEntity>> names;

  bool operator==(const GroundTruth&) const = default;
};

enum class CorpusFormat { WhoIsWhoJson, JsonLines };

inline CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "whoiswho-json" || s == "whoiswho") return CorpusFormat::WhoIsWhoJson;
  if (s == "jsonl") return CorpusFormat::JsonLines;
  throw ConfigError("unknown corpus format '" + std::string(s) +
                    "' (expected whoiswho-json or jsonl)");
}

inline std::string to_string(CorpusFormat f) {
  return f == CorpusFormat::WhoIsWhoJson ? "whoiswho-json" : "jsonl";
}

// ---------------------------------------------------------------------------
// Text normalization

namespace detail {

// Bytes >= 0x80 belong to UTF-8 sequences and are kept as word characters.
inline bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

inline std::vector<std::string> split_words(std::string_view raw) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : raw) {
    if (is_word_byte(c)) {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                             : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace detail

// Lowercases, maps every non-alphanumeric run to one space and trims.
// Returns nullopt when nothing usable remains.
inline std::optional<std::string> normalize_author_name(std::string_view raw) {
  auto tokens = detail::split_words(raw);
  if (tokens.empty()) return std::nullopt;
  return detail::join(tokens);
}

// Order-insensitive blocking key: the normalized tokens, sorted.
inline std::optional<std::string> author_name_key(std::string_view raw) {
  auto tokens = detail::split_words(raw);
  if (tokens.empty()) return std::nullopt;
  std::sort(tokens.begin(), tokens.end());
  return detail::join(tokens);
}

// Normalization for free-text attribute values (orgs, venues).
inline std::string normalize_attribute(std::string_view raw) {
  return detail::join(detail::split_words(raw));
}

inline std::vector<std::string> tokenize_text(
    std::string_view title, std::string_view abstract = {},
    const std::vector<std::string>& keywords = {}) {
  std::vector<std::string> out;
  auto take = [&out](std::string_view text) {
    for (auto& tok : detail::split_words(text)) {
      if (tok.size() < 2 || is_stopword(tok)) continue;
      out.push_back(std::move(tok));
    }
  };
  take(title);
  take(abstract);
  for (const auto& k : keywords) take(k);
  return out;
}

// ---------------------------------------------------------------------------
// Blocks

struct Block {
  std::string name;  // canonical ambiguous name
  std::string key;   // order-insensitive key used for matching
  std::vector<PublicationRecord> pubs;

  std::size_t size() const { return pubs.size(); }
  bool empty() const { return pubs.empty(); }

  std::optional<std::size_t> position(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& id(std::size_t pos) const { return pubs.at(pos).id; }

  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < pubs.size(); ++i) index_.emplace(pubs[i].id, i);
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

// Indices of the authors on `rec` whose key matches the block key.
inline std::vector<std::size_t> matching_authors(const PublicationRecord& rec,
                                                 std::string_view key) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rec.authors.size(); ++i) {
    auto k = author_name_key(rec.authors[i].name);
    if (k && *k == key) out.push_back(i);
  }
  return out;
}

// All records listing an author that matches `name` under the
// order-insensitive key, ordered by id. nullopt signals an empty block.
template <typename Records>
std::optional<Block> build_block(const Records& records, std::string_view name) {
  auto canonical = normalize_author_name(name);
  if (!canonical) return std::nullopt;
  Block block;
  block.name = *canonical;
  block.key = *author_name_key(name);
  for (const auto& entry : records) {
    const PublicationRecord& rec = [&]() -> const PublicationRecord& {
      if constexpr (requires { entry.second; }) {
        return entry.second;
      } else {
        return entry;
      }
    }();
    if (!matching_authors(rec, block.key).empty()) block.pubs.push_back(rec);
  }
  if (block.pubs.empty()) return std::nullopt;
  std::sort(block.pubs.begin(), block.pubs.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  block.reindex();
  return block;
}

// ---------------------------------------------------------------------------
// JSON I/O

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string json_string(const nlohmann::json& j, const char* field,
                               const std::string& id) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) {
    throw DataError("record '" + id + "': field '" + field + "' is not a string");
  }
  return it->get<std::string>();
}

inline PublicationRecord record_from_json(const nlohmann::json& j, std::string id) {
  if (!j.is_object()) throw DataError("record '" + id + "' is not an object");
  PublicationRecord rec;
  rec.id = std::move(id);
  rec.title = json_string(j, "title", rec.id);
  rec.abstract = json_string(j, "abstract", rec.id);
  rec.venue = json_string(j, "venue", rec.id);
  if (auto it = j.find("keywords"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError("record '" + rec.id + "': keywords is not an array");
    for (const auto& k : *it) {
      if (k.is_string()) rec.keywords.push_back(k.get<std::string>());
    }
  }
  if (auto it = j.find("authors"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError("record '" + rec.id + "': authors is not an array");
    for (const auto& a : *it) {
      if (!a.is_object()) continue;
      rec.authors.push_back({json_string(a, "name", rec.id), json_string(a, "org", rec.id)});
    }
  }
  if (auto it = j.find("year"); it != j.end() && !it->is_null()) {
    // WhoIsWho dumps use ints, strings and 0/"" for unknown years.
    if (it->is_number_integer()) {
      rec.year = it->get<int>();
    } else if (it->is_number()) {
      rec.year = static_cast<int>(it->get<double>());
    } else if (it->is_string()) {
      const auto s = it->get<std::string>();
      if (!s.empty()) {
        try {
          rec.year = std::stoi(s);
        } catch (const std::exception&) {
          throw DataError("record '" + rec.id + "': unparseable year '" + s + "'");
        }
      }
    }
    if (rec.year && *rec.year <= 0) rec.year.reset();
  }
  return rec;
}

inline nlohmann::json record_to_json(const PublicationRecord& rec) {
  nlohmann::json j;
  j["title"] = rec.title;
  j["abstract"] = rec.abstract;
  j["keywords"] = rec.keywords;
  j["venue"] = rec.venue;
  auto authors = nlohmann::json::array();
  for (const auto& a : rec.authors) authors.push_back({{"name", a.name}, {"org", a.org}});
  j["authors"] = std::move(authors);
  if (rec.year) j["year"] = *rec.year;
  return j;
}

// Parses `text`, rejecting duplicate keys in the top-level object.
inline nlohmann::json parse_unique_keys(const std::string& text, std::size_t base_offset,
                                        bool top_level_keys_are_ids) {
  std::set<std::string> seen;
  nlohmann::json::parser_callback_t cb =
      [&](int depth, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
        if (top_level_keys_are_ids && depth == 1 &&
            event == nlohmann::json::parse_event_t::key) {
          auto key = parsed.get<std::string>();
          if (!seen.insert(key).second) throw DataError("duplicate publication id '" + key + "'");
        }
        return true;
      };
  try {
    return nlohmann::json::parse(text, cb);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t offset = base_offset + (e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("JSON parse error at byte " + std::to_string(offset) + ": " + e.what(),
                     offset);
  }
}

}  // namespace detail

inline GroundTruth load_ground_truth(const std::string& path) {
  const auto text = detail::read_file(path);
  const auto j = detail::parse_unique_keys(text, 0, false);
  if (!j.is_object()) throw DataError("labels file '" + path + "' is not a JSON object");
  GroundTruth truth;
  for (const auto& [name, entities] : j.items()) {
    if (!entities.is_object()) {
      throw DataError("labels for '" + name + "' must map entity ids to pub-id lists");
    }
    std::set<std::string> seen;
    auto& list = truth.names[name];
    for (const auto& [entity, pubs] : entities.items()) {
      AuthorEntity e{entity, {}};
      for (const auto& p : pubs) {
        auto id = p.get<std::string>();
        if (!seen.insert(id).second) {
          throw DataError("labels for '" + name + "': pub '" + id +
                          "' belongs to more than one entity");
        }
        e.pubs.push_back(std::move(id));
      }
      list.push_back(std::move(e));
    }
  }
  return truth;
}

struct LoadedCorpus {
  Corpus corpus;
  std::optional<GroundTruth> truth;
};

inline LoadedCorpus load_corpus(const std::string& path, CorpusFormat format,
                                const std::optional<std::string>& labels_path = std::nullopt) {
  LoadedCorpus out;
  const auto text = detail::read_file(path);
  if (format == CorpusFormat::WhoIsWhoJson) {
    const auto j = detail::parse_unique_keys(text, 0, true);
    if (!j.is_object()) throw DataError("'" + path + "' is not a JSON object of records");
    for (const auto& [id, rec] : j.items()) {
      if (id.empty()) throw DataError("empty publication id in '" + path + "'");
      out.corpus.emplace(id, detail::record_from_json(rec, id));
    }
  } else {
    std::size_t offset = 0;
    while (offset < text.size()) {
      std::size_t end = text.find('\n', offset);
      if (end == std::string::npos) end = text.size();
      const std::string line = text.substr(offset, end - offset);
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        const auto j = detail::parse_unique_keys(line, offset, false);
        if (!j.is_object()) throw DataError("line at byte " + std::to_string(offset) + " is not an object");
        auto it = j.find("id");
        if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
          throw DataError("record at byte " + std::to_string(offset) + " has no id");
        }
        auto id = it->get<std::string>();
        if (out.corpus.contains(id)) throw DataError("duplicate publication id '" + id + "'");
        out.corpus.emplace(id, detail::record_from_json(j, id));
      }
      offset = end + 1;
    }
  }
  if (labels_path) {
    out.truth = load_ground_truth(*labels_path);
    for (const auto& [name, entities] : out.truth->names) {
      for (const auto& e : entities) {
        for (const auto& id : e.pubs) {
          if (!out.corpus.contains(id)) {
            throw DataError("labels for '" + name + "' reference unknown pub '" + id + "'");
          }
        }
      }
    }
  }
  return out;
}

inline nlohmann::json corpus_to_json(const Corpus& corpus) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, rec] : corpus) j[id] = detail::record_to_json(rec);
  return j;
}

inline nlohmann::json ground_truth_to_json(const GroundTruth& truth) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, entities] : truth.names) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& e : entities) m[e.id] = e.pubs;
    j[name] = std::move(m);
  }
  return j;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
  if (!out) throw DataError("write to '" + path + "' failed");
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
  write_json_file(path, corpus_to_json(corpus));
}

inline void save_ground_truth(const GroundTruth& truth, const std::string& path) {
  write_json_file(path, ground_truth_to_json(truth));
}

}  // namespace namedis
