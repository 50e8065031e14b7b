#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "matrix.hpp"

namespace namedis {

enum class SimilarityRole { Structural, Semantic, Combined };

// Symmetric N x N similarity with unit diagonal and entries in [-1, 1].
struct SimilarityMatrix {
  Matrix<double> values;
  SimilarityRole role = SimilarityRole::Combined;

  std::size_t size() const { return values.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

// Cosine similarity of every pair of rows. Zero rows are similar to nothing
// (0), the diagonal is exactly 1.
template <typename T>
SimilarityMatrix cosine_similarity(const Matrix<T>& rows, SimilarityRole role) {
  const std::size_t n = rows.rows();
  SimilarityMatrix m{Matrix<double>(n, n, 0.0), role};
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (T x : rows.row(i)) s += static_cast<double>(x) * static_cast<double>(x);
    norms[i] = std::sqrt(s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    m.values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double c = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        double s = 0.0;
        auto a = rows.row(i);
        auto b = rows.row(j);
        for (std::size_t k = 0; k < a.size(); ++k) {
          s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
        }
        c = std::clamp(s / (norms[i] * norms[j]), -1.0, 1.0);
      }
      m.values(i, j) = c;
      m.values(j, i) = c;
    }
  }
  return m;
}

inline std::string to_string(SimilarityRole r) {
  switch (r) {
    case SimilarityRole::Structural: return "structural";
    case SimilarityRole::Semantic: return "semantic";
    case SimilarityRole::Combined: return "combined";
  }
  return "combined";
}

}  // namespace namedis
