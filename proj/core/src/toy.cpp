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
#include "relkd/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace relkd {

namespace {

// Stream domains so that scene, student and adaptor draws never share a
// sequence even when their seeds coincide.
constexpr std::uint64_t kStudentStream = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kAdaptorStream = 0x8CB92BA72F3D8DD7ULL;

Matrix fourier_features(const Matrix &latents, const Matrix &freq,
                        const Matrix &phase) {
  Matrix out = matmul(latents, freq);
  const double amp = std::sqrt(2.0 / static_cast<double>(freq.cols()));
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out(i, j) = amp * std::cos(out(i, j) + phase(0, j));
  return out;
}

Matrix add_bias(Matrix x, const Matrix &bias) {
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) += bias(0, j);
  return x;
}

Matrix column_sums(const Matrix &g) {
  Matrix out(1, g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) out(0, j) += g(i, j);
  return out;
}

Matrix hstack(const Matrix &a, const Matrix &b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), out.row(i).begin());
    std::copy(b.row(i).begin(), b.row(i).end(), out.row(i).begin() + a.cols());
  }
  return out;
}

bool finite_record(const EpochRecord &r) {
  return std::isfinite(r.task_loss) && std::isfinite(r.kd_s) &&
         std::isfinite(r.kd_c) && std::isfinite(r.objective);
}

}  // namespace

void SceneConfig::validate() const {
  if (num_places < 4) throw std::invalid_argument("SceneConfig: num_places must be >= 4");
  if (samples_per_place < 2) throw std::invalid_argument("SceneConfig: samples_per_place must be >= 2");
  if (latent_dim < 1 || modality_a_dim < 1 || modality_b_dim < 1 || teacher_dim < 1) {
    throw std::invalid_argument("SceneConfig: dimensions must be >= 1");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw std::invalid_argument("SceneConfig: noise_sigma must be finite and >= 0");
  if (!(place_jitter >= 0.0) || !std::isfinite(place_jitter)) throw std::invalid_argument("SceneConfig: place_jitter must be finite and >= 0");
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) throw std::invalid_argument("SceneConfig: lengthscale must be finite and > 0");
}

SplitRole split_role(std::size_t sample_in_place) {
  switch (sample_in_place % 4) {
    case 1: return SplitRole::Database;
    case 3: return SplitRole::Query;
    default: return SplitRole::Train;
  }
}

SyntheticScene gen_scene(const SceneConfig &cfg) {
  cfg.validate();
  RngStream rng = seeded_rng(cfg.seed);
  const std::size_t n = cfg.num_places * cfg.samples_per_place;

  // Draw order is part of the determinism contract; do not reorder.
  Matrix centers(cfg.num_places, cfg.latent_dim);
  for (double &v : centers.data()) v = rng.uniform();

  SyntheticScene scene;
  scene.latents = Matrix(n, cfg.latent_dim);
  scene.labels.resize(n);
  for (std::size_t p = 0; p < cfg.num_places; ++p) {
    for (std::size_t k = 0; k < cfg.samples_per_place; ++k) {
      const std::size_t i = p * cfg.samples_per_place + k;
      scene.labels[i] = static_cast<std::int64_t>(p);
      for (std::size_t d = 0; d < cfg.latent_dim; ++d) {
        scene.latents(i, d) = centers(p, d) + cfg.place_jitter * rng.normal();
      }
      switch (split_role(k)) {
        case SplitRole::Train: scene.train.push_back(i); break;
        case SplitRole::Database: scene.database.push_back(i); break;
        case SplitRole::Query: scene.query.push_back(i); break;
      }
    }
  }

  auto feature_map = [&](std::size_t dim) {
    Matrix freq = random_normal(rng, cfg.latent_dim, dim, 1.0 / cfg.lengthscale);
    Matrix phase(1, dim);
    for (double &v : phase.data()) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return std::pair{std::move(freq), std::move(phase)};
  };
  const auto [freq_a, phase_a] = feature_map(cfg.modality_a_dim);
  const auto [freq_b, phase_b] = feature_map(cfg.modality_b_dim);
  const std::size_t fused = cfg.modality_a_dim + cfg.modality_b_dim;
  const Matrix teacher_map = random_normal(
      rng, fused, cfg.teacher_dim, 1.0 / std::sqrt(static_cast<double>(fused)));

  scene.clean_a = fourier_features(scene.latents, freq_a, phase_a);
  scene.clean_b = fourier_features(scene.latents, freq_b, phase_b);
  scene.modality_a = scene.clean_a;
  for (double &v : scene.modality_a.data()) v += cfg.noise_sigma * rng.normal();
  scene.modality_b = scene.clean_b;
  for (double &v : scene.modality_b.data()) v += cfg.noise_sigma * rng.normal();
  scene.teacher = matmul(hstack(scene.clean_a, scene.clean_b), teacher_map);
  return scene;
}

Matrix gather_rows(const Matrix &m, const std::vector<std::size_t> &idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= m.rows()) throw std::out_of_range("gather_rows: index out of range");
    std::copy(m.row(idx[r]).begin(), m.row(idx[r]).end(), out.row(r).begin());
  }
  return out;
}

GroundTruth scene_ground_truth(const SyntheticScene &scene) {
  GroundTruth truth;
  truth.positives.resize(scene.query.size());
  for (std::size_t q = 0; q < scene.query.size(); ++q) {
    const auto label = scene.labels[scene.query[q]];
    for (std::size_t d = 0; d < scene.database.size(); ++d) {
      if (scene.labels[scene.database[d]] == label) truth.positives[q].push_back(d);
    }
  }
  return truth;
}

StudentModel StudentModel::init(RngStream &rng, std::size_t in,
                                std::size_t hidden, std::size_t out) {
  StudentModel m;
  m.w1 = random_normal(rng, in, hidden, 1.0 / std::sqrt(static_cast<double>(in)));
  m.b1 = Matrix(1, hidden);
  m.w2 = random_normal(rng, hidden, out, 1.0 / std::sqrt(static_cast<double>(hidden)));
  m.b2 = Matrix(1, out);
  return m;
}

StudentModel StudentModel::zeros_like(const StudentModel &m) {
  return {Matrix(m.w1.rows(), m.w1.cols()), Matrix(1, m.b1.cols()),
          Matrix(m.w2.rows(), m.w2.cols()), Matrix(1, m.b2.cols())};
}

void StudentModel::add_scaled(const StudentModel &g, double scale) {
  w1.add_scaled(g.w1, scale);
  b1.add_scaled(g.b1, scale);
  w2.add_scaled(g.w2, scale);
  b2.add_scaled(g.b2, scale);
}

bool StudentModel::all_finite() const {
  return w1.all_finite() && b1.all_finite() && w2.all_finite() && b2.all_finite();
}

StudentActivations student_forward(const StudentModel &model, const Matrix &x) {
  require_same_dim(x.cols(), model.input_dim(), "student_forward");
  StudentActivations acts;
  acts.hidden = add_bias(matmul(x, model.w1), model.b1);
  for (double &v : acts.hidden.data()) v = std::tanh(v);
  acts.output = add_bias(matmul(acts.hidden, model.w2), model.b2);
  return acts;
}

StudentModel student_backward(const StudentModel &model, const Matrix &x,
                              const StudentActivations &acts,
                              const Matrix &grad_out, Matrix *grad_in) {
  require_same_dim(grad_out.cols(), model.output_dim(), "student_backward");
  require_same_dim(grad_out.rows(), x.rows(), "student_backward");
  StudentModel g;
  g.w2 = matmul_tn(acts.hidden, grad_out);
  g.b2 = column_sums(grad_out);
  Matrix grad_pre = matmul_nt(grad_out, model.w2);
  for (std::size_t i = 0; i < grad_pre.rows(); ++i)
    for (std::size_t j = 0; j < grad_pre.cols(); ++j) {
      const double h = acts.hidden(i, j);
      grad_pre(i, j) *= 1.0 - h * h;
    }
  g.w1 = matmul_tn(x, grad_pre);
  g.b1 = column_sums(grad_pre);
  if (grad_in != nullptr) *grad_in = matmul_nt(grad_pre, model.w1);
  return g;
}

Adaptor Adaptor::identity(std::size_t dim) {
  Adaptor a{Matrix(dim, dim), Matrix(1, dim)};
  for (std::size_t i = 0; i < dim; ++i) a.weight(i, i) = 1.0;
  return a;
}

Adaptor Adaptor::random(RngStream &rng, std::size_t in, std::size_t out) {
  return {random_normal(rng, in, out, 1.0 / std::sqrt(static_cast<double>(out))),
          Matrix(1, out)};
}

Matrix apply_adaptor(const Adaptor &a, const Matrix &x) {
  require_same_dim(x.cols(), a.weight.rows(), "apply_adaptor");
  require_same_dim(a.bias.cols(), a.weight.cols(), "apply_adaptor bias");
  return add_bias(matmul(x, a.weight), a.bias);
}

AdaptorGrad adaptor_backward(const Adaptor &a, const Matrix &x,
                             const Matrix &grad_out) {
  require_same_dim(grad_out.cols(), a.weight.cols(), "adaptor_backward");
  return {{matmul_tn(x, grad_out), column_sums(grad_out)},
          matmul_nt(grad_out, a.weight)};
}

Adaptor prefit_teacher_adaptor(const Matrix &teacher, std::size_t out_dim,
                               RngStream &rng, std::size_t steps,
                               double learning_rate) {
  Adaptor a = Adaptor::random(rng, teacher.cols(), out_dim);
  if (out_dim == teacher.cols()) return a;
  // Target: Euclidean relations of the raw teacher rows. The adapted rows have
  // a different width, so the loss is assembled here rather than via
  // scheme_loss, which requires equal widths.
  DistillConfig cfg;
  cfg.manifold_set = {Manifold::Euclidean};
  const RelationMatrix target =
      relation_matrix(teacher, teacher, DistanceKind::euclidean(), cfg);
  const std::size_t n = teacher.rows();
  const double weight = 1.0 / static_cast<double>(n * n);
  for (std::size_t step = 0; step < steps; ++step) {
    const Matrix y = apply_adaptor(a, teacher);
    Matrix grad_y(n, out_dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double d = euclidean_distance(y.row(i), y.row(j));
        const double g = weight * huber_grad(d, target.values(i, j), cfg.huber_delta);
        euclidean_distance_grad(y.row(i), y.row(j), g, grad_y.row(i), grad_y.row(j));
      }
    }
    const AdaptorGrad ag = adaptor_backward(a, teacher, grad_y);
    a.weight.add_scaled(ag.params.weight, -learning_rate);
    a.bias.add_scaled(ag.params.bias, -learning_rate);
  }
  return a;
}

RunResult run_single(const ExperimentConfig &cfg, const SyntheticScene &scene,
                     Objective variant, std::uint64_t seed) {
  cfg.distill.validate();
  const std::size_t teacher_dim = scene.teacher.cols();
  const std::size_t student_dim = cfg.student_dim == 0 ? teacher_dim : cfg.student_dim;
  if (student_dim != teacher_dim && cfg.adaptor == AdaptorSide::None) {
    throw std::invalid_argument("run_single: student dim " + std::to_string(student_dim) +
                                " differs from teacher dim " + std::to_string(teacher_dim) +
                                "; choose an adaptor side");
  }
  if (scene.query.empty() || scene.database.empty()) {
    throw std::invalid_argument("run_single: scene has no query/database split (samples_per_place < 4?)");
  }

  RunResult run;
  run.variant = variant;
  run.seed = seed;
  run.teacher_before = scene.teacher;

  RngStream init_rng = seeded_rng(seed ^ kStudentStream);
  run.model = StudentModel::init(init_rng, scene.modality_a.cols(), cfg.hidden_dim,
                                 student_dim);

  const Matrix x_train = gather_rows(scene.modality_a, scene.train);
  std::vector<std::int64_t> labels;
  labels.reserve(scene.train.size());
  for (std::size_t i : scene.train) labels.push_back(scene.labels[i]);

  Matrix targets = gather_rows(scene.teacher, scene.train);
  Adaptor student_adaptor;
  const bool student_side = cfg.adaptor == AdaptorSide::Student;
  if (cfg.adaptor == AdaptorSide::Teacher) {
    RngStream adaptor_rng = seeded_rng(seed ^ kAdaptorStream);
    const Adaptor frozen = prefit_teacher_adaptor(targets, student_dim, adaptor_rng);
    targets = apply_adaptor(frozen, targets);
  } else if (student_side) {
    RngStream adaptor_rng = seeded_rng(seed ^ kAdaptorStream);
    student_adaptor = Adaptor::random(adaptor_rng, student_dim, teacher_dim);
  }

  // Student descriptor: model output, followed by the adaptor when the adaptor
  // is part of the student.
  auto describe = [&](const StudentModel &model, const Matrix &x,
                      StudentActivations *acts) {
    StudentActivations a = student_forward(model, x);
    Matrix out = student_side ? apply_adaptor(student_adaptor, a.output) : a.output;
    if (acts != nullptr) *acts = std::move(a);
    return out;
  };

  auto diverged = [&](std::size_t epoch) {
    throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                             " (variant " + std::string(to_string(variant)) +
                             ", seed " + std::to_string(seed) + ")");
  };

  for (std::size_t epoch = 0; epoch <= cfg.epochs; ++epoch) {
    StudentActivations acts;
    const Matrix z = describe(run.model, x_train, &acts);
    if (!z.all_finite()) diverged(epoch);
    LossResult task, kd_s, kd_c;
    try {
      task = triplet_loss(z, labels, cfg.triplet);
      kd_s = kd_s_loss(targets, z, cfg.distill);
      kd_c = kd_c_loss(targets, z, cfg.distill);
    } catch (const std::domain_error &) {
      // Overflowing relations once training is under way mean divergence; at
      // epoch 0 the error describes the input and is passed on.
      if (epoch == 0) throw;
      diverged(epoch);
    }
    const LossResult total = combine_objective(task, kd_s, kd_c, cfg.distill, variant);

    const EpochRecord rec{epoch, task.value, kd_s.value, kd_c.value, total.value};
    if (!finite_record(rec) || !total.grad.all_finite()) diverged(epoch);
    run.epochs.push_back(rec);
    if (epoch == cfg.epochs) break;

    Matrix grad_y = total.grad;
    if (student_side) {
      const AdaptorGrad ag = adaptor_backward(student_adaptor, acts.output, total.grad);
      student_adaptor.weight.add_scaled(ag.params.weight, -cfg.learning_rate);
      student_adaptor.bias.add_scaled(ag.params.bias, -cfg.learning_rate);
      grad_y = ag.input;
    }
    const StudentModel g = student_backward(run.model, x_train, acts, grad_y);
    run.model.add_scaled(g, -cfg.learning_rate);
    if (!run.model.all_finite() ||
        (student_side && !(student_adaptor.weight.all_finite() && student_adaptor.bias.all_finite()))) {
      diverged(epoch + 1);
    }
    if (cfg.record_trajectory) run.trajectory.push_back(run.model);
  }

  const Matrix db = describe(run.model, gather_rows(scene.modality_a, scene.database), nullptr);
  const Matrix queries = describe(run.model, gather_rows(scene.modality_a, scene.query), nullptr);
  run.recall = evaluate_recall(queries, db, scene_ground_truth(scene));
  run.teacher_after = scene.teacher;
  return run;
}

std::vector<VariantSummary> summarize(const std::vector<RunResult> &runs,
                                      const std::vector<Objective> &variants) {
  std::vector<VariantSummary> out;
  for (Objective v : variants) {
    std::vector<double> ar1, ar1pct;
    for (const RunResult &r : runs) {
      if (r.variant != v) continue;
      ar1.push_back(r.recall.ar_at_1);
      ar1pct.push_back(r.recall.ar_at_1pct);
    }
    auto mean = [](const std::vector<double> &xs) {
      double acc = 0.0;
      for (double x : xs) acc += x;
      return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
    };
    // Sample standard deviation; zero for a single seed.
    auto spread = [&](const std::vector<double> &xs) {
      if (xs.size() < 2) return 0.0;
      const double m = mean(xs);
      double acc = 0.0;
      for (double x : xs) acc += (x - m) * (x - m);
      return std::sqrt(acc / static_cast<double>(xs.size() - 1));
    };
    out.push_back({v, mean(ar1), spread(ar1), mean(ar1pct), spread(ar1pct)});
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig &cfg) {
  if (cfg.variants.empty()) throw std::invalid_argument("run_experiment: no variants");
  if (cfg.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
  const SyntheticScene scene = gen_scene(cfg.scene);
  ExperimentReport report;
  for (Objective v : cfg.variants) {
    for (std::uint64_t seed : cfg.seeds) {
      report.runs.push_back(run_single(cfg, scene, v, seed));
    }
  }
  report.summary = summarize(report.runs, cfg.variants);
  return report;
}

}  // namespace relkd
