// Copyright 2026 The relkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "relkd/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace relkd {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: value count " +
                                std::to_string(values_.size()) +
                                " does not match shape " +
                                std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

Matrix Matrix::from_rows(const std::vector<Vector> &rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_same_dim(rows[r].size(), cols, "Matrix::from_rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix &Matrix::operator+=(const Matrix &other) {
  add_scaled(other, 1.0);
  return *this;
}

Matrix &Matrix::operator*=(double scale) {
  for (double &v : values_) v *= scale;
  return *this;
}

void Matrix::add_scaled(const Matrix &other, double scale) {
  if (other.rows_ != rows_ || other.cols_ != cols_) {
    throw std::invalid_argument("Matrix::add_scaled: shape mismatch");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += scale * other.values_[i];
  }
}

Matrix matmul(const Matrix &x, const Matrix &w) {
  require_same_dim(x.cols(), w.rows(), "matmul");
  Matrix y(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto out = y.row(i);
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double a = x(i, k);
      auto wr = w.row(k);
      for (std::size_t j = 0; j < w.cols(); ++j) out[j] += a * wr[j];
    }
  }
  return y;
}

Matrix matmul_tn(const Matrix &x, const Matrix &g) {
  require_same_dim(x.rows(), g.rows(), "matmul_tn");
  Matrix y(x.cols(), g.cols());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    auto gr = g.row(n);
    for (std::size_t i = 0; i < x.cols(); ++i) {
      const double a = x(n, i);
      auto out = y.row(i);
      for (std::size_t j = 0; j < g.cols(); ++j) out[j] += a * gr[j];
    }
  }
  return y;
}

Matrix matmul_nt(const Matrix &g, const Matrix &w) {
  require_same_dim(g.cols(), w.cols(), "matmul_nt");
  Matrix y(g.rows(), w.rows());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = 0; j < w.rows(); ++j) {
      y(i, j) = dot(g.row(i), w.row(j));
    }
  }
  return y;
}

double dot(std::span<const double> x, std::span<const double> y) {
  require_same_dim(x.size(), y.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double squared_norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

double norm(std::span<const double> x) { return std::sqrt(squared_norm(x)); }

void require_same_dim(std::size_t a, std::size_t b, const char *what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

std::uint64_t RngStream::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("RngStream::below: bound is 0");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

RngStream seeded_rng(std::uint64_t seed) { return RngStream(seed); }

Matrix random_normal(RngStream &rng, std::size_t rows, std::size_t cols,
                     double stddev) {
  Matrix m(rows, cols);
  for (double &v : m.data()) v = stddev * rng.normal();
  return m;
}

Vector finite_diff_grad(const ScalarFunction &f, std::span<const double> x,
                        double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  Vector probe(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double plus = f(probe);
    probe[i] = saved - h;
    const double minus = f(probe);
    probe[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw std::domain_error("finite_diff_grad: non-finite function value at "
                              "coordinate " + std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(std::span<const double> analytic,
                          std::span<const double> reference, double floor) {
  require_same_dim(analytic.size(), reference.size(), "max_relative_error");
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - reference[i]));
    scale = std::max(scale, std::abs(reference[i]));
  }
  return diff / std::max(scale, floor);
}

}  // namespace relkd
