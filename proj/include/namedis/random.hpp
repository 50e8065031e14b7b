#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace namedis {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives a child seed from a parent seed and a path of discriminators.
inline std::uint64_t mix_seed(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(seed);
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  return mix_seed(seed, {fnv1a(tag)});
}

// mt19937_64 with hand-rolled conversions so draws are identical across
// standard library implementations (the std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
};

// Draws indices proportionally to non-negative weights via inverse CDF.
class DiscreteSampler {
 public:
  DiscreteSampler() = default;

  explicit DiscreteSampler(std::span<const double> weights) {
    cumulative_.reserve(weights.size());
    double total = 0.0;
    for (double w : weights) {
      total += std::max(w, 0.0);
      cumulative_.push_back(total);
    }
    total_ = total;
  }

  bool empty() const { return total_ <= 0.0; }
  std::size_t size() const { return cumulative_.size(); }
  double total() const { return total_; }

  double probability(std::size_t i) const {
    const double lo = i == 0 ? 0.0 : cumulative_[i - 1];
    return (cumulative_[i] - lo) / total_;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform() * total_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it != cumulative_.end()) {
      return static_cast<std::size_t>(it - cumulative_.begin());
    }
    // u landed on the total through rounding; take the last live bucket.
    std::size_t idx = cumulative_.size() - 1;
    while (idx > 0 && probability(idx) == 0.0) --idx;
    return idx;
  }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

}  // namespace namedis
