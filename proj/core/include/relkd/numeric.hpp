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
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace relkd {

using Vector = std::vector<double>;

//! Dense row-major matrix of doubles. Rows of an embedding batch are agents.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Matrix from_rows(const std::vector<Vector> &rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return values_.empty(); }

  double &operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> data() { return values_; }
  std::span<const double> data() const { return values_; }

  bool all_finite() const;

  Matrix &operator+=(const Matrix &other);
  Matrix &operator*=(double scale);
  //! this += scale * other
  void add_scaled(const Matrix &other, double scale);

  friend bool operator==(const Matrix &, const Matrix &) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

//! Y = X * W (no bias). Inner dimensions must agree.
Matrix matmul(const Matrix &x, const Matrix &w);
//! Y = X^T * G
Matrix matmul_tn(const Matrix &x, const Matrix &g);
//! Y = G * W^T
Matrix matmul_nt(const Matrix &g, const Matrix &w);

double dot(std::span<const double> x, std::span<const double> y);
double norm(std::span<const double> x);
double squared_norm(std::span<const double> x);

//! Throws std::invalid_argument naming `what` when sizes differ.
void require_same_dim(std::size_t a, std::size_t b, const char *what);

// -----------------------------------------------------------------------------
// Random numbers
//
// RngStream is SplitMix64 (Steele, Lea & Flood 2014): the state advances by the
// golden-ratio increment 0x9E3779B97F4A7C15 and each output is the state passed
// through the murmur3-style finalizer (shifts 30/27/31, multipliers
// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB).
//
//   uniform()  = (next_u64() >> 11) * 2^-53          in [0, 1)
//   normal()   = Box-Muller on u1 = 1 - uniform(), u2 = uniform():
//                sqrt(-2 ln u1) * cos(2 pi u2), the paired sin() value is
//                cached and returned by the following call.
//
// The integer stream is bit-exact everywhere. normal() additionally depends on
// the platform's log/cos/sin.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  //! Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

RngStream seeded_rng(std::uint64_t seed);

//! Fills a rows x cols matrix with N(0, stddev^2) draws in row-major order.
Matrix random_normal(RngStream &rng, std::size_t rows, std::size_t cols,
                     double stddev = 1.0);

// -----------------------------------------------------------------------------
// Gradient checking

inline constexpr double kDefaultFiniteDiffStep = 1e-5;

using ScalarFunction = std::function<double(std::span<const double>)>;

//! Central differences: g_i = (f(x + h e_i) - f(x - h e_i)) / 2h.
//! Throws std::domain_error if f returns a non-finite value.
Vector finite_diff_grad(const ScalarFunction &f, std::span<const double> x,
                        double h = kDefaultFiniteDiffStep);

//! max_i |a_i - b_i| / max(max_i |b_i|, floor). Used for all gradient checks.
double max_relative_error(std::span<const double> analytic,
                          std::span<const double> reference,
                          double floor = 1e-12);

}  // namespace relkd
