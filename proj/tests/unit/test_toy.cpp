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
#include <set>
#include <stdexcept>

#include "relkd/toy.hpp"
#include "support/oracles.hpp"

using namespace relkd;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.scene.num_places = 12;
  cfg.scene.samples_per_place = 4;
  cfg.scene.modality_a_dim = 8;
  cfg.scene.modality_b_dim = 8;
  cfg.scene.teacher_dim = 6;
  cfg.epochs = 15;
  cfg.hidden_dim = 10;
  cfg.seeds = {1, 2};
  return cfg;
}

}  // namespace

TEST_CASE("split roles and scene layout") {
  CHECK(split_role(0) == SplitRole::Train);
  CHECK(split_role(1) == SplitRole::Database);
  CHECK(split_role(2) == SplitRole::Train);
  CHECK(split_role(3) == SplitRole::Query);
  CHECK(split_role(7) == SplitRole::Query);

  SceneConfig cfg;
  cfg.num_places = 8;
  cfg.samples_per_place = 4;
  const SyntheticScene s = gen_scene(cfg);
  CHECK(s.train.size() == 16);
  CHECK(s.database.size() == 8);
  CHECK(s.query.size() == 8);
  CHECK(s.latents.rows() == 32);
  CHECK(s.modality_a.cols() == cfg.modality_a_dim);
  CHECK(s.modality_b.cols() == cfg.modality_b_dim);
  CHECK(s.teacher.cols() == cfg.teacher_dim);
  CHECK(s.labels.size() == 32);

  std::set<std::size_t> all;
  for (const auto *part : {&s.train, &s.database, &s.query})
    for (std::size_t i : *part) CHECK(all.insert(i).second);
  CHECK(all.size() == 32);

  const GroundTruth truth = scene_ground_truth(s);
  REQUIRE(truth.positives.size() == s.query.size());
  for (std::size_t qi = 0; qi < s.query.size(); ++qi) {
    REQUIRE(truth.positives[qi].size() == 1);
    CHECK(s.labels[s.database[truth.positives[qi][0]]] == s.labels[s.query[qi]]);
  }
}

TEST_CASE("scene generation is deterministic and noise-free views are clean") {
  SceneConfig cfg;
  cfg.num_places = 6;
  const SyntheticScene a = gen_scene(cfg), b = gen_scene(cfg);
  CHECK(a.modality_a == b.modality_a);
  CHECK(a.teacher == b.teacher);
  cfg.seed = 2;
  CHECK_FALSE(gen_scene(cfg).modality_a == a.modality_a);

  cfg.noise_sigma = 0.0;
  const SyntheticScene clean = gen_scene(cfg);
  CHECK(clean.modality_a == clean.clean_a);
  CHECK(clean.modality_b == clean.clean_b);

  SceneConfig bad;
  bad.num_places = 0;
  CHECK_THROWS_AS(gen_scene(bad), std::invalid_argument);
  bad = SceneConfig{};
  bad.noise_sigma = -0.1;
  CHECK_THROWS_AS(gen_scene(bad), std::invalid_argument);
}

TEST_CASE("student forward on a 1x1x1 network") {
  StudentModel m;
  m.w1 = Matrix(1, 1, 1.0);
  m.b1 = Matrix(1, 1, 0.0);
  m.w2 = Matrix(1, 1, 1.0);
  m.b2 = Matrix(1, 1, 0.0);
  const StudentActivations a = student_forward(m, Matrix(1, 1, 0.5));
  CHECK(a.output(0, 0) == doctest::Approx(0.4621171572600097585).epsilon(1e-15));
}

TEST_CASE("zero weights give bias rows; zero adaptor gives bias rows") {
  RngStream rng(3);
  StudentModel m = StudentModel::zeros_like(StudentModel::init(rng, 3, 4, 2));
  m.b2 = Matrix(1, 2, {0.5, -1.5});
  const Matrix out = student_forward(m, random_normal(rng, 5, 3)).output;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(out(i, 0) == 0.5);
    CHECK(out(i, 1) == -1.5);
  }
  Adaptor a{Matrix(2, 3), Matrix(1, 3, {1, 2, 3})};
  CHECK(apply_adaptor(a, random_normal(rng, 4, 2)) == Matrix(4, 3, {1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3}));
  CHECK_THROWS_AS(apply_adaptor(a, Matrix(4, 3)), std::invalid_argument);
  CHECK_THROWS_AS(student_forward(m, Matrix(2, 5)), std::invalid_argument);
}

TEST_CASE("student backward matches finite differences") {
  RngStream rng(4);
  const StudentModel m = StudentModel::init(rng, 3, 5, 2);
  const Matrix x = random_normal(rng, 4, 3);
  const Matrix w = random_normal(rng, 4, 2);  // loss = sum(w .* out)
  const StudentActivations acts = student_forward(m, x);
  Matrix grad_in;
  const StudentModel g = student_backward(m, x, acts, w, &grad_in);

  auto loss_of = [&](const StudentModel &mm, const Matrix &xx) {
    const Matrix out = student_forward(mm, xx).output;
    double s = 0.0;
    for (std::size_t i = 0; i < out.data().size(); ++i) s += out.data()[i] * w.data()[i];
    return s;
  };
  auto check_param = [&](Matrix StudentModel::*field, const Matrix &analytic) {
    const Vector fd = finite_diff_grad(
        [&](std::span<const double> v) {
          StudentModel mm = m;
          std::copy(v.begin(), v.end(), (mm.*field).data().begin());
          return loss_of(mm, x);
        },
        (m.*field).data());
    CHECK(max_relative_error(analytic.data(), fd) < 1e-7);
  };
  check_param(&StudentModel::w1, g.w1);
  check_param(&StudentModel::b1, g.b1);
  check_param(&StudentModel::w2, g.w2);
  check_param(&StudentModel::b2, g.b2);
  const Vector fd_x = finite_diff_grad(
      [&](std::span<const double> v) { return loss_of(m, Matrix(4, 3, Vector(v.begin(), v.end()))); },
      x.data());
  CHECK(max_relative_error(grad_in.data(), fd_x) < 1e-7);
}

TEST_CASE("adaptor") {
  RngStream rng(5);
  const Adaptor a = Adaptor::random(rng, 3, 2);
  const Matrix x = random_normal(rng, 4, 3);
  const Matrix y = apply_adaptor(a, x);
  const Matrix ref = oracle::matmul(x, a.weight);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(y(i, j) == doctest::Approx(ref(i, j) + a.bias(0, j)));
  CHECK(apply_adaptor(Adaptor::identity(3), x) == x);

  const Matrix w = random_normal(rng, 4, 2);
  const AdaptorGrad g = adaptor_backward(a, x, w);
  const Vector fd = finite_diff_grad(
      [&](std::span<const double> v) {
        Adaptor aa = a;
        std::copy(v.begin(), v.end(), aa.weight.data().begin());
        const Matrix out = apply_adaptor(aa, x);
        double s = 0.0;
        for (std::size_t i = 0; i < out.data().size(); ++i) s += out.data()[i] * w.data()[i];
        return s;
      },
      a.weight.data());
  CHECK(max_relative_error(g.params.weight.data(), fd) < 1e-8);
}

TEST_CASE("teacher-side adaptor pre-fit lowers the relational mismatch") {
  RngStream rng(6);
  const Matrix t = random_normal(rng, 10, 6);
  auto mismatch = [&](const Adaptor &a) {
    const Matrix y = apply_adaptor(a, t);
    double acc = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t j = 0; j < t.rows(); ++j)
        if (i != j)
          acc += oracle::huber(euclidean_distance(y.row(i), y.row(j)),
                               euclidean_distance(t.row(i), t.row(j)), 1.0);
    return acc;
  };
  RngStream r0(11), r1(11);
  const Adaptor initial = Adaptor::random(r0, 6, 3);
  const Adaptor fitted = prefit_teacher_adaptor(t, 3, r1);
  CHECK(mismatch(fitted) < 0.5 * mismatch(initial));
}

TEST_CASE("training runs") {
  const ExperimentConfig cfg = small_config();
  const SyntheticScene scene = gen_scene(cfg.scene);

  SUBCASE("deterministic") {
    const RunResult a = run_single(cfg, scene, Objective::SelfCross, 3);
    const RunResult b = run_single(cfg, scene, Objective::SelfCross, 3);
    CHECK(a.model == b.model);
    CHECK(a.recall.curve == b.recall.curve);
    const RunResult c = run_single(cfg, scene, Objective::SelfCross, 4);
    CHECK_FALSE(c.model == a.model);
  }
  SUBCASE("zero weights reproduce the task-only run bit for bit") {
    ExperimentConfig zero = cfg;
    zero.record_trajectory = true;
    zero.distill.lambda_s = zero.distill.lambda_c = 0.0;
    const RunResult base = run_single(zero, scene, Objective::TaskOnly, 1);
    for (Objective o : {Objective::Self, Objective::Cross, Objective::SelfCross}) {
      const RunResult r = run_single(zero, scene, o, 1);
      CHECK(r.trajectory == base.trajectory);
      CHECK(r.model == base.model);
      CHECK(r.recall.curve == base.recall.curve);
    }
  }
  SUBCASE("zero epochs leaves the initial model") {
    ExperimentConfig none = cfg;
    none.epochs = 0;
    const RunResult r = run_single(none, scene, Objective::SelfCross, 1);
    CHECK(r.epochs.size() == 1);
    const RunResult again = run_single(none, scene, Objective::TaskOnly, 1);
    CHECK(r.model == again.model);
  }
  SUBCASE("teacher stays frozen") {
    const RunResult r = run_single(cfg, scene, Objective::SelfCross, 2);
    CHECK(r.teacher_before == r.teacher_after);
    CHECK(r.teacher_before == scene.teacher);
  }
  SUBCASE("objective decreases") {
    for (Objective o : {Objective::TaskOnly, Objective::SelfCross}) {
      const RunResult r = run_single(cfg, scene, o, 1);
      REQUIRE(r.epochs.size() == cfg.epochs + 1);
      CHECK(r.epochs.back().objective < r.epochs.front().objective);
    }
  }
  SUBCASE("adaptors") {
    ExperimentConfig narrow = cfg;
    narrow.student_dim = 3;
    CHECK_THROWS_AS(run_single(narrow, scene, Objective::Self, 1), std::invalid_argument);
    for (AdaptorSide side : {AdaptorSide::Teacher, AdaptorSide::Student}) {
      narrow.adaptor = side;
      const RunResult r = run_single(narrow, scene, Objective::SelfCross, 1);
      CHECK(r.epochs.back().objective < r.epochs.front().objective);
      CHECK(r.model.output_dim() == 3);
    }
  }
  SUBCASE("divergence is reported") {
    ExperimentConfig wild = cfg;
    wild.learning_rate = 1e300;
    CHECK_THROWS_AS(run_single(wild, scene, Objective::SelfCross, 1), std::runtime_error);
  }
}

TEST_CASE("experiment summary") {
  ExperimentConfig cfg = small_config();
  cfg.variants = {Objective::TaskOnly, Objective::SelfCross};
  const ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.runs.size() == 4);
  REQUIRE(rep.summary.size() == 2);
  for (std::size_t v = 0; v < 2; ++v) {
    const double a = rep.runs[2 * v].recall.ar_at_1, b = rep.runs[2 * v + 1].recall.ar_at_1;
    CHECK(rep.summary[v].mean_ar1 == doctest::Approx((a + b) / 2));
    CHECK(rep.summary[v].std_ar1 == doctest::Approx(std::abs(a - b) / std::sqrt(2.0)));
  }
  cfg.seeds.clear();
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("default configuration learns") {
  const ExperimentConfig cfg;
  const SyntheticScene scene = gen_scene(cfg.scene);
  for (Objective o : cfg.variants) {
    for (std::uint64_t seed : cfg.seeds) {
      const RunResult r = run_single(cfg, scene, o, seed);
      CAPTURE(std::string(to_string(o)));
      CAPTURE(seed);
      for (std::size_t e = 1; e <= 10; ++e) CHECK(r.epochs[e].objective < r.epochs[e - 1].objective);
      CHECK(r.epochs.back().task_loss < r.epochs.front().task_loss);
    }
  }
}
