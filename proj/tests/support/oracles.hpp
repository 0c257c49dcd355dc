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

// Test-only reference implementations. These deliberately avoid the library's
// code paths: the hyperbolic distance uses the arcosh closed form instead of
// Mobius addition, losses are evaluated term by term without gradients, and
// recall is computed by counting strictly-better database rows per positive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "relkd/losses.hpp"
#include "relkd/metrics.hpp"
#include "relkd/numeric.hpp"

namespace relkd::oracle {

using Vec = std::vector<double>;

inline Vec row(const Matrix &m, std::size_t i) {
  return Vec(m.row(i).begin(), m.row(i).end());
}

inline double l2(const Vec &x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double euc(const Vec &x, const Vec &y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

inline double cosr(const Vec &x, const Vec &y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s / (l2(x) * l2(y));
}

//! Poincare-ball distance through arcosh(1 + 2c|p-q|^2 / ((1-c|p|^2)(1-c|q|^2))),
//! capped where the artanh form hits its argument clamp.
inline double hyp(const Vec &p, const Vec &q, double c) {
  const double np = l2(p), nq = l2(q), d = euc(p, q);
  const double k = std::sqrt(c);
  const double raw =
      std::acosh(1.0 + 2.0 * c * d * d / ((1.0 - c * np * np) * (1.0 - c * nq * nq))) / k;
  return std::min(raw, 2.0 / k * std::atanh(1.0 - 1e-7));
}

inline double mobius_1d(double a, double b, double c) {
  return (a + b) / (1.0 + c * a * b);
}

inline Vec embed(const Vec &x, double c, double prescale) {
  Vec v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = prescale * x[i];
  const double n = l2(v);
  if (n <= 1e-12) return Vec(x.size(), 0.0);
  const double k = std::sqrt(c);
  double r = std::tanh(k * n) / k;             // norm after exp_0
  r = std::min(r, (1.0 - 1e-5) / k);           // ball margin
  for (double &e : v) e *= r / n;
  return v;
}

inline double huber(double a, double b, double delta) {
  const double e = std::fabs(a - b);
  return e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
}

inline double relation(Manifold m, const Vec &x, const Vec &y,
                       const DistillConfig &cfg) {
  switch (m) {
    case Manifold::Euclidean: return euc(x, y);
    case Manifold::Cosine: return cosr(x, y);
    case Manifold::Hyperbolic: {
      const double c = cfg.curvature.value();
      return hyp(embed(x, c, cfg.hyp_prescale), embed(y, c, cfg.hyp_prescale), c);
    }
  }
  return 0.0;
}

//! Term-by-term loss evaluation, no normalisation support.
inline double scheme_loss(const Matrix &t, const Matrix &s, Scheme scheme,
                          Manifold m, const DistillConfig &cfg) {
  double total = 0.0;
  std::size_t terms = 0;
  const std::size_t n = t.rows();
  if (scheme == Scheme::DIRECT) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < t.cols(); ++k, ++terms)
        total += huber(t(i, k), s(i, k), cfg.huber_delta);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j && !cfg.include_diagonal) continue;
        const double tt = relation(m, row(t, i), row(t, j), cfg);
        const double ss = relation(m, row(s, i), row(s, j), cfg);
        const double ts = relation(m, row(t, i), row(s, j), cfg);
        double a = tt, b = ss;
        if (scheme == Scheme::TS_SS) a = ts;
        if (scheme == Scheme::TT_TS) b = ts;
        total += huber(a, b, cfg.huber_delta);
        ++terms;
      }
    }
  }
  return cfg.reduction == Reduction::Mean ? total / static_cast<double>(terms) : total;
}

//! Recall@k by counting, for each positive, the database rows ranked ahead of
//! it (strictly closer, or equally close with a lower index).
inline double recall_at_k(const Matrix &q, const Matrix &db,
                          const GroundTruth &truth, std::size_t k) {
  std::size_t evaluated = 0, hits = 0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    if (truth.positives[i].empty()) continue;
    ++evaluated;
    bool hit = false;
    for (std::size_t p : truth.positives[i]) {
      const double dp = euc(row(q, i), row(db, p));
      std::size_t ahead = 0;
      for (std::size_t j = 0; j < db.rows(); ++j) {
        const double dj = euc(row(q, i), row(db, j));
        if (dj < dp || (dj == dp && j < p)) ++ahead;
      }
      if (ahead < k) hit = true;
    }
    hits += hit;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(evaluated);
}

//! Random orthogonal matrix: a product of random Givens rotations, then a random
//! sign flip per axis.
inline Matrix random_orthogonal(RngStream &rng, std::size_t dim) {
  Matrix q(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) q(i, i) = 1.0;
  for (std::size_t round = 0; round < 4; ++round) {
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = a + 1; b < dim; ++b) {
        const double th = rng.uniform(0.0, 6.283185307179586);
        const double c = std::cos(th), s = std::sin(th);
        for (std::size_t r = 0; r < dim; ++r) {
          const double x = q(r, a), y = q(r, b);
          q(r, a) = c * x - s * y;
          q(r, b) = s * x + c * y;
        }
      }
    }
  }
  for (std::size_t a = 0; a < dim; ++a) {
    if (rng.uniform() < 0.5)
      for (std::size_t r = 0; r < dim; ++r) q(r, a) = -q(r, a);
  }
  return q;
}

//! Plain triple-loop product.
inline Matrix matmul(const Matrix &a, const Matrix &b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline Matrix permute_rows(const Matrix &m, const std::vector<std::size_t> &perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t k = 0; k < m.cols(); ++k) out(i, k) = m(perm[i], k);
  return out;
}

inline std::vector<std::size_t> random_permutation(RngStream &rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

}  // namespace relkd::oracle
