#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <ranges>
#include <type_traits>
#include <span>
#include <vector>

namespace namedis {

// Dense row-major matrix. Rows are handed out as spans.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out.data()[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename A, typename B>
auto dot(const A& a, const B& b) {
  using T = std::remove_cv_t<std::ranges::range_value_t<A>>;
  assert(std::ranges::size(a) == std::ranges::size(b));
  T s{};
  auto ib = std::ranges::begin(b);
  for (auto ia = std::ranges::begin(a); ia != std::ranges::end(a); ++ia, ++ib) s += *ia * *ib;
  return s;
}

// y += alpha * x
template <typename T, typename X, typename Y>
void axpy(T alpha, const X& x, Y&& y) {
  assert(std::ranges::size(x) == std::ranges::size(y));
  auto iy = std::ranges::begin(y);
  for (auto ix = std::ranges::begin(x); ix != std::ranges::end(x); ++ix, ++iy) *iy += alpha * *ix;
}

template <typename A>
auto norm2(const A& a) {
  return std::sqrt(dot(a, a));
}

template <typename A>
bool all_finite(const A& v) {
  for (auto x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Numerically stable logistic function.
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log sigma(x) = -softplus(-x)
inline double log_sigmoid(double x) { return -softplus(-x); }

}  // namespace namedis
