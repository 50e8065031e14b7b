#pragma once

#include <array>
#include <string_view>
#include <unordered_set>

namespace namedis {

// Fixed English stopword list. Bump the version whenever the list changes;
// it is echoed into reports so tokenization is reproducible.
inline constexpr std::string_view kStopwordsVersion = "en-1";

inline constexpr auto kStopwords = std::to_array<std::string_view>({
    "about",   "above",   "after",   "again",  "against", "all",
    "am",      "an",      "and",     "any",    "are",     "as",
    "at",      "be",      "because", "been",   "before",  "being",
    "below",   "between", "both",    "but",    "by",      "can",
    "did",     "do",      "does",    "doing",  "down",    "during",
    "each",    "few",     "for",     "from",   "further", "had",
    "has",     "have",    "having",  "he",     "her",     "here",
    "hers",    "herself", "him",     "himself", "his",    "how",
    "if",      "in",      "into",    "is",     "it",      "its",
    "itself",  "just",    "me",      "more",   "most",    "my",
    "myself",  "no",      "nor",     "not",    "now",     "of",
    "off",     "on",      "once",    "only",   "or",      "other",
    "our",     "ours",    "ourselves", "out",  "over",    "own",
    "same",    "she",     "should",  "so",     "some",    "such",
    "than",    "that",    "the",     "their",  "theirs",  "them",
    "themselves", "then", "there",   "these",  "they",    "this",
    "those",   "through", "to",      "too",    "under",   "until",
    "up",      "very",    "was",     "we",     "were",    "what",
    "when",    "where",   "which",   "while",  "who",     "whom",
    "why",     "will",    "with",    "you",    "your",    "yours",
    "yourself", "yourselves", "via", "using",  "based",   "within",
    "upon",
});

inline bool is_stopword(std::string_view token) {
  static const std::unordered_set<std::string_view> set(kStopwords.begin(),
                                                        kStopwords.end());
  return set.contains(token);
}

}  // namespace namedis
