#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "random.hpp"

namespace namedis {

struct SyntheticParams {
  std::size_t n_authors = 5;
  std::size_t pubs_per_author = 10;
  std::size_t coauthor_pool_per_author = 4;
  std::size_t vocab_topics = 12;  // topic words per planted author
  double noise_rate = 0.0;
  std::string name = "Wei Li";
};

// A planted block plus the generator's own bookkeeping, which tests use as
// an oracle.
struct SyntheticBlock {
  Corpus corpus;
  Block block;
  GroundTruth truth;
  std::vector<std::vector<std::string>> coauthor_pools;  // author keys per entity
  std::vector<std::size_t> entity_of;                    // per block position
};

namespace detail {

// Unique pronounceable word for an index: base-(15*5) consonant/vowel pairs.
inline std::string pseudo_word(std::size_t index, std::size_t min_syllables = 3) {
  static constexpr std::string_view consonants = "bdfgklmnprstvxz";
  static constexpr std::string_view vowels = "aeiou";
  const std::size_t base = consonants.size() * vowels.size();
  std::string out;
  std::size_t syllables = 0;
  do {
    const std::size_t digit = index % base;
    out.push_back(consonants[digit / vowels.size()]);
    out.push_back(vowels[digit % vowels.size()]);
    index /= base;
    ++syllables;
  } while (index > 0 || syllables < min_syllables);
  return out;
}

inline std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace detail

inline SyntheticBlock generate_synthetic_block(const SyntheticParams& params, std::uint64_t seed) {
  if (params.n_authors < 1) throw ConfigError("synthetic block needs n_authors >= 1");
  if (params.pubs_per_author < 1) throw ConfigError("synthetic block needs pubs_per_author >= 1");
  if (params.coauthor_pool_per_author < 1) {
    throw ConfigError("synthetic block needs coauthor_pool_per_author >= 1");
  }
  if (params.vocab_topics < 1) throw ConfigError("synthetic block needs vocab_topics >= 1");
  if (!(params.noise_rate >= 0.0 && params.noise_rate <= 1.0)) {
    throw ConfigError("synthetic noise_rate must lie in [0, 1]");
  }
  if (!author_name_key(params.name)) throw ConfigError("synthetic name has no usable characters");

  Rng rng(mix_seed(seed, "synthetic"));
  const std::size_t n_ent = params.n_authors;
  const std::size_t pool = params.coauthor_pool_per_author;

  // Word index space: [0, common) shared words, then per-entity topic words,
  // then names for people/places. Disjoint ranges keep every string unique.
  static const std::vector<std::string> common_words = {
      "method", "analysis", "model", "approach", "system", "results", "study", "framework"};
  auto topic_word = [&](std::size_t e, std::size_t k) {
    return detail::pseudo_word(1000 + e * params.vocab_topics + k);
  };
  const std::size_t name_base = 1000 + n_ent * params.vocab_topics + 100;

  std::vector<std::vector<std::string>> pools(n_ent);
  std::vector<std::string> all_coauthors;
  for (std::size_t e = 0; e < n_ent; ++e) {
    for (std::size_t k = 0; k < pool; ++k) {
      const std::size_t idx = name_base + 2 * (e * pool + k);
      std::string person = detail::capitalize(detail::pseudo_word(idx, 2)) + " " +
                           detail::capitalize(detail::pseudo_word(idx + 1, 3));
      pools[e].push_back(person);
      all_coauthors.push_back(person);
    }
  }
  const std::size_t place_base = name_base + 2 * n_ent * pool + 10;
  std::vector<std::string> orgs, venues;
  for (std::size_t e = 0; e < n_ent; ++e) {
    orgs.push_back("University of " + detail::capitalize(detail::pseudo_word(place_base + e)));
    venues.push_back("Journal of " +
                     detail::capitalize(detail::pseudo_word(place_base + n_ent + e)) + " " +
                     detail::capitalize(detail::pseudo_word(place_base + 2 * n_ent + e)));
  }
  std::vector<std::string> all_words = common_words;
  for (std::size_t e = 0; e < n_ent; ++e) {
    for (std::size_t k = 0; k < params.vocab_topics; ++k) all_words.push_back(topic_word(e, k));
  }

  auto noisy = [&](const std::string& planted, const std::vector<std::string>& universe) {
    if (params.noise_rate > 0.0 && rng.bernoulli(params.noise_rate)) {
      return universe[rng.below(universe.size())];
    }
    return planted;
  };
  auto topic_words = [&](std::size_t e, std::size_t n_topic, std::size_t n_common) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n_topic; ++i) {
      words.push_back(noisy(topic_word(e, rng.below(params.vocab_topics)), all_words));
    }
    for (std::size_t i = 0; i < n_common; ++i) {
      words.push_back(noisy(common_words[rng.below(common_words.size())], all_words));
    }
    rng.shuffle(words);
    return words;
  };
  auto join_words = [](const std::vector<std::string>& w) {
    std::string s;
    for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
    return s;
  };

  // More than half of the pool per paper: any two subsets intersect, so
  // same-entity pubs always share a co-author when noise is off.
  const std::size_t coauthors_per_pub = pool / 2 + 1;

  struct Draft {
    PublicationRecord rec;
    std::size_t entity;
  };
  std::vector<Draft> drafts;
  for (std::size_t e = 0; e < n_ent; ++e) {
    for (std::size_t p = 0; p < params.pubs_per_author; ++p) {
      PublicationRecord rec;
      std::vector<std::size_t> members(pool);
      for (std::size_t k = 0; k < pool; ++k) members[k] = k;
      rng.shuffle(members);
      std::vector<Author> authors;
      for (std::size_t k = 0; k < coauthors_per_pub; ++k) {
        std::string person = noisy(pools[e][members[k]], all_coauthors);
        authors.push_back({person, "Institute " + detail::capitalize(detail::pseudo_word(
                                                      fnv1a(person) % 5000 + 20000))});
      }
      const std::size_t self_pos = rng.below(authors.size() + 1);
      authors.insert(authors.begin() + static_cast<std::ptrdiff_t>(self_pos),
                     Author{params.name, noisy(orgs[e], orgs)});
      rec.authors = std::move(authors);
      rec.venue = noisy(venues[e], venues);
      rec.year = 2000 + static_cast<int>(rng.below(20));
      rec.title = detail::capitalize(join_words(topic_words(e, 4, 2)));
      rec.abstract = detail::capitalize(join_words(topic_words(e, 15, 10))) + ".";
      for (const auto& w : topic_words(e, 3, 0)) rec.keywords.push_back(w);
      drafts.push_back({std::move(rec), e});
    }
  }
  rng.shuffle(drafts);

  SyntheticBlock out;
  const std::size_t width = std::to_string(drafts.size()).size();
  std::vector<std::vector<std::string>> members(n_ent);
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    std::string id = std::to_string(i);
    id = "p" + std::string(width - id.size(), '0') + id;
    drafts[i].rec.id = id;
    members[drafts[i].entity].push_back(id);
    out.corpus.emplace(id, drafts[i].rec);
  }
  auto& entities = out.truth.names[params.name];
  for (std::size_t e = 0; e < n_ent; ++e) {
    entities.push_back({"e" + std::to_string(e), members[e]});
  }
  out.block = *build_block(out.corpus, params.name);
  out.entity_of.resize(out.block.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    out.entity_of[*out.block.position(drafts[i].rec.id)] = drafts[i].entity;
  }
  for (auto& p : pools) {
    for (auto& person : p) person = *author_name_key(person);
  }
  out.coauthor_pools = std::move(pools);
  return out;
}

struct SyntheticCorpus {
  Corpus corpus;
  GroundTruth truth;
};

// One planted block per name, merged into one corpus. With several names the
// ids are prefixed "n<k>-" so blocks never collide; the block seed is
// mix_seed(seed, name).
inline SyntheticCorpus generate_synthetic_corpus(SyntheticParams params, const std::vector<std::string>& names,
                                                 std::uint64_t seed) {
  SyntheticCorpus out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    params.name = names[k];
    auto s = generate_synthetic_block(params, mix_seed(seed, names[k]));
    const std::string prefix = names.size() > 1 ? "n" + std::to_string(k) + "-" : "";
    for (auto& [id, rec] : s.corpus) {
      rec.id = prefix + id;
      if (!out.corpus.emplace(rec.id, rec).second) throw DataError("synthetic id clash on '" + rec.id + "'");
    }
    auto& entities = out.truth.names[names[k]];
    for (auto e : s.truth.names.begin()->second) {
      for (auto& id : e.pubs) id = prefix + id;
      entities.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace namedis
