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
#include "relkd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "relkd/geometry.hpp"

namespace relkd {

namespace {

struct Hinge {
  std::size_t anchor, positive, negative;
  double d_ap, d_an;
};

void add_hinge_grad(const EmbeddingBatch &x, const Hinge &h, double weight,
                    Matrix &grad) {
  // d(a,p) - d(a,n): gradients of each distance are unit difference vectors,
  // zero at coincident points.
  if (h.d_ap > 0.0) {
    const double s = weight / h.d_ap;
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double g = s * (x(h.anchor, k) - x(h.positive, k));
      grad(h.anchor, k) += g;
      grad(h.positive, k) -= g;
    }
  }
  if (h.d_an > 0.0) {
    const double s = weight / h.d_an;
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double g = s * (x(h.anchor, k) - x(h.negative, k));
      grad(h.anchor, k) -= g;
      grad(h.negative, k) += g;
    }
  }
}

void check_retrieval_inputs(const EmbeddingBatch &queries,
                            const EmbeddingBatch &database,
                            const GroundTruth &truth) {
  if (database.rows() == 0) throw std::invalid_argument("recall: empty database");
  if (queries.rows() == 0) throw std::invalid_argument("recall: no queries");
  require_same_dim(queries.cols(), database.cols(), "recall");
  if (truth.positives.size() != queries.rows()) {
    throw std::invalid_argument("recall: ground truth has " +
                                std::to_string(truth.positives.size()) +
                                " entries for " + std::to_string(queries.rows()) +
                                " queries");
  }
  for (std::size_t q = 0; q < truth.positives.size(); ++q) {
    for (std::size_t idx : truth.positives[q]) {
      if (idx >= database.rows()) {
        throw std::invalid_argument("recall: query " + std::to_string(q) +
                                    " lists database index " +
                                    std::to_string(idx) + " out of range");
      }
    }
  }
}

// Rank (0-based) of the best-ranked positive for each evaluable query, under
// ordering by (distance, index). Queries without positives get no entry.
struct Ranks {
  std::vector<std::size_t> first_hit;
  std::size_t skipped = 0;
};

Ranks first_hit_ranks(const EmbeddingBatch &queries,
                      const EmbeddingBatch &database, const GroundTruth &truth) {
  Ranks out;
  std::vector<double> dist(database.rows());
  std::vector<std::size_t> order(database.rows());
  std::vector<char> is_positive(database.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    if (truth.positives[q].empty()) {
      ++out.skipped;
      continue;
    }
    for (std::size_t j = 0; j < database.rows(); ++j) {
      dist[j] = euclidean_distance(queries.row(q), database.row(j));
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    std::fill(is_positive.begin(), is_positive.end(), 0);
    for (std::size_t idx : truth.positives[q]) is_positive[idx] = 1;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (is_positive[order[r]]) {
        out.first_hit.push_back(r);
        break;
      }
    }
  }
  if (out.first_hit.empty()) {
    throw std::invalid_argument("recall: no query has a true positive");
  }
  return out;
}

double percent_within(const Ranks &ranks, std::size_t k) {
  const auto hits = std::count_if(ranks.first_hit.begin(), ranks.first_hit.end(),
                                  [k](std::size_t r) { return r < k; });
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(ranks.first_hit.size());
}

}  // namespace

LossResult triplet_loss(const EmbeddingBatch &batch,
                        const std::vector<std::int64_t> &labels,
                        const TripletConfig &cfg) {
  if (labels.size() != batch.rows()) {
    throw std::invalid_argument("triplet_loss: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(batch.rows()) +
                                " rows");
  }
  if (!(cfg.margin >= 0.0) || !std::isfinite(cfg.margin)) {
    throw std::invalid_argument("triplet_loss: margin must be finite and >= 0");
  }
  const std::size_t n = batch.rows();
  Matrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist(i, j) = dist(j, i) = euclidean_distance(batch.row(i), batch.row(j));

  std::vector<Hinge> active;
  std::size_t terms = 0;
  double total = 0.0;
  auto consider = [&](const Hinge &h) {
    ++terms;
    const double v = h.d_ap - h.d_an + cfg.margin;
    if (v > 0.0) {
      total += v;
      active.push_back(h);
    }
  };

  for (std::size_t a = 0; a < n; ++a) {
    if (cfg.mining == Mining::BatchHard) {
      std::size_t pos = n, neg = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == a) continue;
        if (labels[j] == labels[a]) {
          if (pos == n || dist(a, j) > dist(a, pos)) pos = j;
        } else {
          if (neg == n || dist(a, j) < dist(a, neg)) neg = j;
        }
      }
      if (pos == n || neg == n) continue;
      consider({a, pos, neg, dist(a, pos), dist(a, neg)});
    } else {
      for (std::size_t p = 0; p < n; ++p) {
        if (p == a || labels[p] != labels[a]) continue;
        for (std::size_t q = 0; q < n; ++q) {
          if (labels[q] == labels[a]) continue;
          consider({a, p, q, dist(a, p), dist(a, q)});
        }
      }
    }
  }
  if (terms == 0) {
    throw std::invalid_argument("triplet_loss: batch has no valid triplet");
  }

  const double weight = 1.0 / static_cast<double>(terms);
  LossResult out{total * weight, Matrix(n, batch.cols())};
  for (const Hinge &h : active) add_hinge_grad(batch, h, weight, out.grad);
  return out;
}

double recall_at_k(const EmbeddingBatch &queries, const EmbeddingBatch &database,
                   const GroundTruth &truth, std::size_t k) {
  check_retrieval_inputs(queries, database, truth);
  if (k < 1 || k > database.rows()) {
    throw std::invalid_argument("recall_at_k: k=" + std::to_string(k) +
                                " outside [1, " + std::to_string(database.rows()) +
                                "]");
  }
  return percent_within(first_hit_ranks(queries, database, truth), k);
}

std::size_t one_percent_k(std::size_t database_size) {
  if (database_size == 0) throw std::invalid_argument("one_percent_k: empty database");
  const auto k = static_cast<std::size_t>(
      std::llround(0.01 * static_cast<double>(database_size)));
  return std::max<std::size_t>(1, k);
}

double ar_at_one_percent(const EmbeddingBatch &queries,
                         const EmbeddingBatch &database,
                         const GroundTruth &truth) {
  if (database.rows() == 0) throw std::invalid_argument("recall: empty database");
  return recall_at_k(queries, database, truth, one_percent_k(database.rows()));
}

RecallReport evaluate_recall(const EmbeddingBatch &queries,
                             const EmbeddingBatch &database,
                             const GroundTruth &truth, std::size_t k_max) {
  check_retrieval_inputs(queries, database, truth);
  if (k_max == 0) k_max = std::min<std::size_t>(25, database.rows());
  k_max = std::min(k_max, database.rows());
  const Ranks ranks = first_hit_ranks(queries, database, truth);

  RecallReport report;
  report.num_queries_evaluated = ranks.first_hit.size();
  report.num_queries_skipped = ranks.skipped;
  report.curve.reserve(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    report.curve.push_back(percent_within(ranks, k));
  }
  report.ar_at_1 = percent_within(ranks, 1);
  report.ar_at_1pct = percent_within(ranks, one_percent_k(database.rows()));
  return report;
}

}  // namespace relkd
