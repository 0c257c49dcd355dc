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

// Desk-scale cross-modal distillation experiment.
//
// Places are points in a low-dimensional latent space. Each sample observes its
// place through two modalities, each a fixed random-Fourier-feature map of the
// latent position plus modality noise. The fusion teacher is a fixed random
// linear map of both noise-free modality features; the student is a one
// hidden-layer tanh perceptron that only sees the noisy first modality.

#include <cstdint>
#include <string>
#include <vector>

#include "relkd/losses.hpp"
#include "relkd/metrics.hpp"
#include "relkd/numeric.hpp"

namespace relkd {

struct SceneConfig {
  std::size_t num_places = 32;
  std::size_t samples_per_place = 8;
  std::size_t latent_dim = 2;
  std::size_t modality_a_dim = 16;
  std::size_t modality_b_dim = 16;
  std::size_t teacher_dim = 16;
  double noise_sigma = 0.12;
  double place_jitter = 0.02;  // latent spread of samples around a place
  double lengthscale = 0.25;   // latent lengthscale of the feature maps
  std::uint64_t seed = 1;

  void validate() const;
};

enum class SplitRole { Train, Database, Query };

//! Role of the k-th sample of a place. Cycles train, database, train, query,
//! so every four samples of a place split 50/25/25.
SplitRole split_role(std::size_t sample_in_place);

struct SyntheticScene {
  Matrix latents;      // one row per sample
  Matrix clean_a, clean_b;
  Matrix modality_a, modality_b;  // noisy views
  Matrix teacher;      // fusion teacher descriptors
  std::vector<std::int64_t> labels;
  std::vector<std::size_t> train, database, query;
};

SyntheticScene gen_scene(const SceneConfig &cfg);

Matrix gather_rows(const Matrix &m, const std::vector<std::size_t> &idx);
//! Positives of each query are the database samples of the same place.
GroundTruth scene_ground_truth(const SyntheticScene &scene);

struct StudentModel {
  Matrix w1;  // in x hidden
  Matrix b1;  // 1 x hidden
  Matrix w2;  // hidden x out
  Matrix b2;  // 1 x out

  static StudentModel init(RngStream &rng, std::size_t in, std::size_t hidden,
                           std::size_t out);
  static StudentModel zeros_like(const StudentModel &m);
  std::size_t input_dim() const { return w1.rows(); }
  std::size_t output_dim() const { return w2.cols(); }
  void add_scaled(const StudentModel &g, double scale);
  bool all_finite() const;
  friend bool operator==(const StudentModel &, const StudentModel &) = default;
};

struct StudentActivations {
  Matrix hidden;  // tanh(X W1 + b1)
  Matrix output;
};

StudentActivations student_forward(const StudentModel &model, const Matrix &x);

//! Parameter gradient for dL/dY = grad_out. Writes dL/dX into grad_in if given.
StudentModel student_backward(const StudentModel &model, const Matrix &x,
                              const StudentActivations &acts,
                              const Matrix &grad_out, Matrix *grad_in = nullptr);

//! Affine channel adaptor Y = X A + b.
struct Adaptor {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out

  static Adaptor identity(std::size_t dim);
  static Adaptor random(RngStream &rng, std::size_t in, std::size_t out);
  friend bool operator==(const Adaptor &, const Adaptor &) = default;
};

Matrix apply_adaptor(const Adaptor &a, const Matrix &x);

struct AdaptorGrad {
  Adaptor params;
  Matrix input;
};
AdaptorGrad adaptor_backward(const Adaptor &a, const Matrix &x,
                             const Matrix &grad_out);

//! Fits a teacher-side adaptor from `in` to `out_dim` channels that preserves
//! the Euclidean relation structure of the teacher (minimises the self-agent
//! Euclidean loss between the teacher and its adapted copy), then is frozen.
Adaptor prefit_teacher_adaptor(const Matrix &teacher, std::size_t out_dim,
                               RngStream &rng, std::size_t steps = 200,
                               double learning_rate = 0.1);

enum class AdaptorSide { None, Teacher, Student };

struct ExperimentConfig {
  SceneConfig scene;
  DistillConfig distill;
  TripletConfig triplet;
  std::vector<Objective> variants{Objective::TaskOnly, Objective::Self,
                                  Objective::Cross, Objective::SelfCross};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t epochs = 60;
  double learning_rate = 0.05;
  std::size_t hidden_dim = 32;
  std::size_t student_dim = 0;  // 0: same as the teacher
  AdaptorSide adaptor = AdaptorSide::None;
  bool record_trajectory = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double task_loss = 0.0;
  double kd_s = 0.0;
  double kd_c = 0.0;
  double objective = 0.0;  // the loss actually minimised by this variant
};

struct RunResult {
  Objective variant = Objective::TaskOnly;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;  // epoch 0 is the untrained student
  RecallReport recall;              // after the final epoch
  StudentModel model;
  std::vector<StudentModel> trajectory;  // only with record_trajectory
  Matrix teacher_before, teacher_after;  // frozen-teacher check
};

struct VariantSummary {
  Objective variant = Objective::TaskOnly;
  double mean_ar1 = 0.0, std_ar1 = 0.0;
  double mean_ar1pct = 0.0, std_ar1pct = 0.0;
};

struct ExperimentReport {
  std::vector<RunResult> runs;
  std::vector<VariantSummary> summary;
};

//! One training run: full-batch gradient descent on the train split.
//! Throws std::runtime_error naming the epoch on a non-finite loss.
RunResult run_single(const ExperimentConfig &cfg, const SyntheticScene &scene,
                     Objective variant, std::uint64_t seed);

ExperimentReport run_experiment(const ExperimentConfig &cfg);

std::vector<VariantSummary> summarize(const std::vector<RunResult> &runs,
                                      const std::vector<Objective> &variants);

}  // namespace relkd
