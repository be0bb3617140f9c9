#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lsketch/errors.hpp"

namespace lsketch {

/// Dense row-major real matrix.
///
/// A zero-sized matrix (0 rows or 0 columns) is allowed as the empty result of
/// rank-zero factorizations; everything read from disk has positive extents.
template <std::floating_point T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " does not match shape " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }
  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged initializer list");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static BasicMatrix zeros(std::size_t r, std::size_t c) { return BasicMatrix(r, c); }
  static BasicMatrix ones(std::size_t r, std::size_t c) { return BasicMatrix(r, c, T(1)); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  std::string shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

  bool same_shape(const BasicMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

  BasicMatrix& operator+=(const BasicMatrix& o) {
    require_same_shape(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  BasicMatrix& operator-=(const BasicMatrix& o) {
    require_same_shape(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  BasicMatrix& operator*=(T s) noexcept {
    for (auto& x : data_) x *= s;
    return *this;
  }

  friend BasicMatrix operator+(BasicMatrix a, const BasicMatrix& b) { return a += b; }
  friend BasicMatrix operator-(BasicMatrix a, const BasicMatrix& b) { return a -= b; }
  friend BasicMatrix operator*(BasicMatrix a, T s) { return a *= s; }
  friend BasicMatrix operator*(T s, BasicMatrix a) { return a *= s; }

  void require_same_shape(const BasicMatrix& o, const char* what) const {
    if (!same_shape(o)) {
      throw DimensionError(std::string(what) + ": shape mismatch " + shape_string() + " vs " +
                           o.shape_string());
    }
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;

template <std::floating_point T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a) {
  BasicMatrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// a * b
template <std::floating_point T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  BasicMatrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const T aip = a(i, p);
      if (aip == T(0)) continue;
      auto bp = b.row(p);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

/// aᵀ * b
template <std::floating_point T>
BasicMatrix<T> matmul_tn(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: cannot multiply transpose of " + a.shape_string() + " by " +
                         b.shape_string());
  }
  BasicMatrix<T> c(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.rows(); ++p) {
    auto ap = a.row(p);
    auto bp = b.row(p);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T v = ap[i];
      if (v == T(0)) continue;
      auto ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += v * bp[j];
    }
  }
  return c;
}

/// a * bᵀ
template <std::floating_point T>
BasicMatrix<T> matmul_nt(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: cannot multiply " + a.shape_string() + " by transpose of " +
                         b.shape_string());
  }
  BasicMatrix<T> c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto bj = b.row(j);
      T s = 0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += ai[p] * bj[p];
      c(i, j) = s;
    }
  }
  return c;
}

template <std::floating_point T>
BasicMatrix<T> hadamard(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  a.require_same_shape(b, "hadamard");
  BasicMatrix<T> c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] *= bd[i];
  return c;
}

template <std::floating_point T>
T frobenius_norm_sq(const BasicMatrix<T>& a) noexcept {
  T s = 0;
  for (T x : a.data()) s += x * x;
  return s;
}

template <std::floating_point T>
T frobenius_norm(const BasicMatrix<T>& a) noexcept {
  // Scaled accumulation so huge or tiny entries do not overflow/underflow.
  T scale = 0;
  for (T x : a.data()) scale = std::max(scale, std::abs(x));
  if (scale == T(0)) return T(0);
  T s = 0;
  for (T x : a.data()) {
    const T y = x / scale;
    s += y * y;
  }
  return scale * std::sqrt(s);
}

template <std::floating_point T>
T max_abs(const BasicMatrix<T>& a) noexcept {
  T m = 0;
  for (T x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

template <std::floating_point T>
bool all_finite(const BasicMatrix<T>& a) noexcept {
  return std::all_of(a.data().begin(), a.data().end(), [](T x) { return std::isfinite(x); });
}

/// Columns [first, first + count) of a.
template <std::floating_point T>
BasicMatrix<T> take_cols(const BasicMatrix<T>& a, std::size_t first, std::size_t count) {
  if (first + count > a.cols()) throw DimensionError("take_cols: range exceeds " + a.shape_string());
  BasicMatrix<T> out(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = a(i, first + j);
  return out;
}

/// a * diag(d)
template <std::floating_point T>
BasicMatrix<T> scale_cols(BasicMatrix<T> a, std::span<const T> d) {
  if (d.size() != a.cols()) throw DimensionError("scale_cols: length mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= d[j];
  return a;
}

template <std::floating_point T>
std::string to_string(const BasicMatrix<T>& a) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    os << (i == 0 ? "[[" : " [");
    for (std::size_t j = 0; j < a.cols(); ++j) os << (j ? ", " : "") << a(i, j);
    os << (i + 1 == a.rows() ? "]]" : "]\n");
  }
  return os.str();
}

}  // namespace lsketch
