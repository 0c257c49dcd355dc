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

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "relkd/metrics.hpp"
#include "support/oracles.hpp"

using namespace relkd;

TEST_CASE("batch-hard triplet, one-dimensional fixtures") {
  // labels: anchor/positive share a class, the negative does not
  const std::vector<std::int64_t> labels{0, 0, 1};
  TripletConfig cfg;
  cfg.margin = 0.5;
  // d(a,p)=1, d(a,n)=3: inactive for the anchor; the positive and negative
  // rows also contribute (p: d=1 vs 2; n has no positive).
  const Matrix easy(3, 1, {0, 1, 3});
  CHECK(triplet_loss(easy, labels, cfg).value == doctest::Approx(0.0));

  cfg.margin = 0.2;
  // a=0, p=2, n=1: anchor term 2 - 1 + 0.2 = 1.2; positive row: d(p,a)=2,
  // d(p,n)=1 -> 1.2 as well.
  const Matrix hard(3, 1, {0, 2, 1});
  const LossResult r = triplet_loss(hard, labels, cfg);
  CHECK(r.value == doctest::Approx(1.2).epsilon(1e-14));

  const Vector fd = finite_diff_grad(
      [&](std::span<const double> x) {
        return triplet_loss(Matrix(3, 1, Vector(x.begin(), x.end())), labels, cfg).value;
      },
      hard.data());
  CHECK(max_relative_error(r.grad.data(), fd) < 1e-6);
}

TEST_CASE("triplet loss with identical embeddings equals the margin") {
  const Matrix same(6, 3, 0.5);
  const std::vector<std::int64_t> labels{0, 0, 1, 1, 2, 2};
  for (Mining m : {Mining::BatchHard, Mining::AllPairs}) {
    TripletConfig cfg;
    cfg.mining = m;
    CHECK(triplet_loss(same, labels, cfg).value == doctest::Approx(0.2).epsilon(1e-14));
  }
}

TEST_CASE("triplet loss gradients") {
  RngStream rng(21);
  const std::vector<std::int64_t> labels{0, 0, 0, 1, 1, 2, 2, 2};
  for (Mining m : {Mining::BatchHard, Mining::AllPairs}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix x = random_normal(rng, labels.size(), 4);
      TripletConfig cfg;
      cfg.mining = m;
      cfg.margin = 0.3;
      const LossResult r = triplet_loss(x, labels, cfg);
      const Vector fd = finite_diff_grad(
          [&](std::span<const double> v) {
            return triplet_loss(Matrix(x.rows(), x.cols(), Vector(v.begin(), v.end())), labels, cfg).value;
          },
          x.data());
      CHECK(max_relative_error(r.grad.data(), fd) < 1e-5);
    }
  }
}

TEST_CASE("triplet loss errors") {
  CHECK_THROWS_AS(triplet_loss(Matrix(3, 2, 1.0), {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(triplet_loss(Matrix(3, 2, 1.0), {0, 0, 0}), std::invalid_argument);
  TripletConfig bad;
  bad.margin = -1.0;
  CHECK_THROWS_AS(triplet_loss(Matrix(2, 1, {0, 1}), {0, 1}, bad), std::invalid_argument);
}

TEST_CASE("recall fixtures") {
  const Matrix db(4, 1, {0, 1, 2, 3});
  const Matrix q(2, 1, {0.1, 2.9});
  GroundTruth truth{{{1}, {3}}};
  // query 0 ranks db 0 first, then 1; query 1 ranks db 3 first.
  CHECK(recall_at_k(q, db, truth, 1) == 50.0);
  CHECK(recall_at_k(q, db, truth, 2) == 100.0);

  SUBCASE("ties resolve toward the lower index") {
    const Matrix tie_q(1, 1, {1.5});
    CHECK(recall_at_k(tie_q, db, GroundTruth{{{1}}}, 1) == 100.0);
    CHECK(recall_at_k(tie_q, db, GroundTruth{{{2}}}, 1) == 0.0);
    CHECK(recall_at_k(tie_q, db, GroundTruth{{{2}}}, 2) == 100.0);
  }
  SUBCASE("queries without positives are skipped") {
    const RecallReport r = evaluate_recall(q, db, GroundTruth{{{}, {3}}});
    CHECK(r.num_queries_evaluated == 1);
    CHECK(r.num_queries_skipped == 1);
    CHECK(r.ar_at_1 == 100.0);
    CHECK(r.curve.size() == 4);
    CHECK_THROWS_AS(evaluate_recall(q, db, GroundTruth{{{}, {}}}), std::invalid_argument);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(recall_at_k(q, db, GroundTruth{{{1}}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(recall_at_k(q, db, GroundTruth{{{1}, {9}}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(recall_at_k(q, db, truth, 0), std::invalid_argument);
    CHECK_THROWS_AS(recall_at_k(q, Matrix(4, 2), truth, 1), std::invalid_argument);
  }
}

TEST_CASE("one-percent k rule") {
  CHECK(one_percent_k(200) == 2);
  CHECK(one_percent_k(100) == 1);
  CHECK(one_percent_k(50) == 1);
  CHECK(one_percent_k(1) == 1);
  CHECK(one_percent_k(149) == 1);
  CHECK(one_percent_k(150) == 2);
  CHECK(one_percent_k(1000) == 10);
  CHECK_THROWS(one_percent_k(0));
}

TEST_CASE("recall agrees with the counting oracle on random instances") {
  RngStream rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nq = 1 + rng.below(20), ndb = 1 + rng.below(200), dim = 1 + rng.below(4);
    // Coarse coordinates make exact distance ties common.
    Matrix q(nq, dim), db(ndb, dim);
    for (double &v : q.data()) v = static_cast<double>(rng.below(4));
    for (double &v : db.data()) v = static_cast<double>(rng.below(4));
    GroundTruth truth;
    truth.positives.resize(nq);
    for (auto &p : truth.positives) {
      const std::size_t count = rng.below(4);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = rng.below(ndb);
        if (std::find(p.begin(), p.end(), idx) == p.end()) p.push_back(idx);
      }
    }
    truth.positives[0].push_back(rng.below(ndb));
    std::sort(truth.positives[0].begin(), truth.positives[0].end());
    truth.positives[0].erase(std::unique(truth.positives[0].begin(), truth.positives[0].end()),
                             truth.positives[0].end());

    const RecallReport report = evaluate_recall(q, db, truth, ndb);
    for (std::size_t k = 1; k <= ndb; ++k)
      CHECK(report.curve[k - 1] == doctest::Approx(oracle::recall_at_k(q, db, truth, k)).epsilon(1e-12));
    CHECK(report.ar_at_1pct ==
          doctest::Approx(oracle::recall_at_k(q, db, truth, one_percent_k(ndb))).epsilon(1e-12));
    for (std::size_t k = 1; k < ndb; ++k) CHECK(report.curve[k - 1] <= report.curve[k]);
    CHECK(report.curve.back() == 100.0);
  }
}
