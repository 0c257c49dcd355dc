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
#include <vector>

#include "relkd/losses.hpp"

namespace relkd {

enum class Mining { BatchHard, AllPairs };

struct TripletConfig {
  double margin = 0.2;
  Mining mining = Mining::BatchHard;
};

//! Batch triplet loss with Euclidean distances.
//!
//! BatchHard: mean over anchors that have both a positive and a negative of
//!   max(0, d(a, farthest positive) - d(a, closest negative) + margin).
//!   Ties pick the lower row index.
//! AllPairs: mean of the hinge over every valid (anchor, positive, negative).
//!
//! Throws std::invalid_argument when the batch has no valid triplet.
LossResult triplet_loss(const EmbeddingBatch &batch,
                        const std::vector<std::int64_t> &labels,
                        const TripletConfig &cfg = {});

//! positives[q] lists the database rows that match query q. Empty lists are
//! allowed; such queries are left out of every recall denominator.
struct GroundTruth {
  std::vector<std::vector<std::size_t>> positives;
};

struct RecallReport {
  double ar_at_1 = 0.0;      // percent
  double ar_at_1pct = 0.0;   // percent
  std::vector<double> curve; // curve[k-1] = Recall@k, percent
  std::size_t num_queries_evaluated = 0;
  std::size_t num_queries_skipped = 0;
};

//! Percentage of evaluable queries whose k nearest database rows (Euclidean,
//! ties to the lower index) contain a true positive.
double recall_at_k(const EmbeddingBatch &queries, const EmbeddingBatch &database,
                   const GroundTruth &truth, std::size_t k);

//! k used by AR@1%: max(1, round(0.01 * database size)), half away from zero.
std::size_t one_percent_k(std::size_t database_size);

double ar_at_one_percent(const EmbeddingBatch &queries,
                         const EmbeddingBatch &database,
                         const GroundTruth &truth);

//! Full report with Recall@1..k_max. k_max = 0 selects min(25, database size).
RecallReport evaluate_recall(const EmbeddingBatch &queries,
                             const EmbeddingBatch &database,
                             const GroundTruth &truth, std::size_t k_max = 0);

}  // namespace relkd
