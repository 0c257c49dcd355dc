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
#include "relkd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace relkd {

namespace {

std::string at(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

void check_batches(const EmbeddingBatch &t, const EmbeddingBatch &s,
                   const char *what) {
  if (t.rows() != s.rows()) {
    throw std::invalid_argument(std::string(what) + ": batch size mismatch (" +
                                std::to_string(t.rows()) + " vs " +
                                std::to_string(s.rows()) + ")");
  }
  if (t.rows() < 2) {
    throw std::invalid_argument(std::string(what) + ": batch needs at least 2 rows");
  }
  if (t.cols() != s.cols()) {
    throw std::invalid_argument(std::string(what) +
                                ": embedding dims differ (" +
                                std::to_string(t.cols()) + " vs " +
                                std::to_string(s.cols()) +
                                "); attach an adaptor first");
  }
  if (!t.all_finite()) throw std::invalid_argument(std::string(what) + ": teacher batch has non-finite entries");
  if (!s.all_finite()) throw std::invalid_argument(std::string(what) + ": student batch has non-finite entries");
}

// Rows expressed in the space where the relation function is evaluated: raw
// rows for Euclidean/Cosine, ball coordinates for Hyperbolic.
Matrix prepare(const EmbeddingBatch &x, Manifold m, const DistillConfig &cfg) {
  if (m == Manifold::Cosine) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (norm(x.row(i)) <= kNormEpsilon) {
        throw std::domain_error("cosine relation: row " + std::to_string(i) +
                                " has zero norm");
      }
    }
  }
  if (m != Manifold::Hyperbolic) return x;
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vector p = embed_in_ball(x.row(i), cfg.curvature, cfg.hyp_prescale);
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

double relation(Manifold m, std::span<const double> x, std::span<const double> y,
                Curvature c) {
  switch (m) {
    case Manifold::Euclidean: return euclidean_distance(x, y);
    case Manifold::Cosine: return cosine_relation(x, y);
    case Manifold::Hyperbolic: return hyperbolic_distance_coords(x, y, c);
  }
  return 0.0;
}

double relation_grad(Manifold m, std::span<const double> x,
                     std::span<const double> y, Curvature c, double scale,
                     std::span<double> gx, std::span<double> gy) {
  switch (m) {
    case Manifold::Euclidean: return euclidean_distance_grad(x, y, scale, gx, gy);
    case Manifold::Cosine: return cosine_relation_grad(x, y, scale, gx, gy);
    case Manifold::Hyperbolic: return hyperbolic_distance_grad(x, y, c, scale, gx, gy);
  }
  return 0.0;
}

double off_diagonal_mean(const Matrix &r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j)
      if (i != j) acc += r(i, j);
  return acc / static_cast<double>(r.rows() * (r.rows() - 1));
}

Matrix raw_relations(const Matrix &a, const Matrix &b, Manifold m, Curvature c) {
  Matrix r(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      r(i, j) = relation(m, a.row(i), b.row(j), c);
      if (!std::isfinite(r(i, j))) {
        throw std::domain_error("relation " + std::string(to_string(m)) +
                                " is non-finite at " + at(i, j));
      }
    }
  }
  return r;
}

RelationMatrix build_relation(const Matrix &pa, const Matrix &pb, Manifold m,
                              const DistillConfig &cfg, AgentPair pair) {
  RelationMatrix out{raw_relations(pa, pb, m, cfg.curvature), cfg.kind(m), pair, 1.0};
  if (cfg.rkd_normalize) {
    const double mu = off_diagonal_mean(out.values);
    if (!(mu >= 1e-12)) {
      throw std::domain_error("relation normalisation: off-diagonal mean " +
                              std::to_string(mu) + " is below 1e-12");
    }
    out.normalizer = mu;
    out.values *= 1.0 / mu;
  }
  return out;
}

// Maps dL/dR_hat to dL/dR for R_hat = R / mean_offdiag(R).
Matrix normalize_backward(const Matrix &g_hat, const RelationMatrix &rel) {
  const double mu = rel.normalizer;
  const std::size_t n = g_hat.rows();
  double inner = 0.0;  // sum_ij G_hat_ij * R_hat_ij
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) inner += g_hat(i, j) * rel.values(i, j);
  const double shift = inner / (mu * static_cast<double>(n * (n - 1)));
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      g(i, j) = g_hat(i, j) / mu - (i != j ? shift : 0.0);
  return g;
}

// Accumulates dL/dA and dL/dB for R = r(A_i, B_j) given dL/dR.
void relation_backward(const Matrix &pa, const Matrix &pb, Manifold m,
                       Curvature c, const Matrix &g, Matrix &grad_a,
                       Matrix &grad_b) {
  for (std::size_t i = 0; i < pa.rows(); ++i) {
    for (std::size_t j = 0; j < pb.rows(); ++j) {
      if (g(i, j) == 0.0) continue;
      relation_grad(m, pa.row(i), pb.row(j), c, g(i, j), grad_a.row(i),
                    grad_b.row(j));
    }
  }
}

struct SchemeSides {
  AgentPair left;
  AgentPair right;
};

SchemeSides sides_of(Scheme s) {
  switch (s) {
    case Scheme::TT_SS: return {AgentPair::TT, AgentPair::SS};
    case Scheme::TS_SS: return {AgentPair::TS, AgentPair::SS};
    case Scheme::TT_TS: return {AgentPair::TT, AgentPair::TS};
    case Scheme::DIRECT: break;
  }
  throw std::logic_error("sides_of: DIRECT has no relation pair");
}

LossResult direct_loss(const EmbeddingBatch &t, const EmbeddingBatch &s,
                       const DistillConfig &cfg) {
  const double weight =
      cfg.reduction == Reduction::Mean
          ? 1.0 / static_cast<double>(term_count(Scheme::DIRECT, t.rows(), t.cols(), true))
          : 1.0;
  LossResult out{0.0, Matrix(s.rows(), s.cols())};
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t k = 0; k < t.cols(); ++k) {
      out.value += huber(t(i, k), s(i, k), cfg.huber_delta);
      out.grad(i, k) = -weight * huber_grad(t(i, k), s(i, k), cfg.huber_delta);
    }
  }
  out.value *= weight;
  return out;
}

}  // namespace

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::TT_SS: return "tt_ss";
    case Scheme::TS_SS: return "ts_ss";
    case Scheme::TT_TS: return "tt_ts";
    case Scheme::DIRECT: return "direct";
  }
  return "?";
}

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::TaskOnly: return "none";
    case Objective::Self: return "s";
    case Objective::Cross: return "c";
    case Objective::SelfCross: return "sc";
  }
  return "?";
}

Objective parse_objective(std::string_view name) {
  if (name == "none") return Objective::TaskOnly;
  if (name == "s" || name == "S") return Objective::Self;
  if (name == "c" || name == "C") return Objective::Cross;
  if (name == "sc" || name == "SC") return Objective::SelfCross;
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected none, s, c, sc)");
}

void DistillConfig::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(lambda_s)) throw std::invalid_argument("DistillConfig: lambda_s must be finite and >= 0");
  if (!finite_nonneg(lambda_c)) throw std::invalid_argument("DistillConfig: lambda_c must be finite and >= 0");
  if (!(huber_delta > 0.0) || !std::isfinite(huber_delta)) throw std::invalid_argument("DistillConfig: huber_delta must be finite and > 0");
  if (!(hyp_prescale > 0.0) || !std::isfinite(hyp_prescale)) throw std::invalid_argument("DistillConfig: hyp_prescale must be finite and > 0");
  if (manifold_set.empty()) throw std::invalid_argument("DistillConfig: manifold_set is empty");
  for (std::size_t i = 0; i < manifold_set.size(); ++i)
    for (std::size_t j = i + 1; j < manifold_set.size(); ++j)
      if (manifold_set[i] == manifold_set[j])
        throw std::invalid_argument("DistillConfig: manifold_set has duplicates");
}

double huber(double a, double b, double delta) {
  const double d = std::abs(a - b);
  if (d <= delta) return 0.5 * d * d;
  return delta * (d - 0.5 * delta);
}

double huber_grad(double a, double b, double delta) {
  const double d = a - b;
  if (std::abs(d) <= delta) return d;
  return d > 0.0 ? delta : -delta;
}

std::size_t term_count(Scheme scheme, std::size_t n, std::size_t dim,
                       bool include_diagonal) {
  if (scheme == Scheme::DIRECT) return n * dim;
  return include_diagonal ? n * n : n * (n - 1);
}

RelationMatrix relation_matrix(const EmbeddingBatch &a, const EmbeddingBatch &b,
                               DistanceKind kind, const DistillConfig &cfg,
                               AgentPair pair) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("relation_matrix: batch size mismatch (" +
                                std::to_string(a.rows()) + " vs " +
                                std::to_string(b.rows()) + ")");
  }
  require_same_dim(a.cols(), b.cols(), "relation_matrix");
  DistillConfig local = cfg;
  local.curvature = kind.curvature;
  return build_relation(prepare(a, kind.manifold, local),
                        prepare(b, kind.manifold, local), kind.manifold, local,
                        pair);
}

LossResult scheme_loss(const EmbeddingBatch &teacher,
                       const EmbeddingBatch &student, Scheme scheme,
                       Manifold manifold, const DistillConfig &cfg) {
  cfg.validate();
  check_batches(teacher, student, "scheme_loss");
  if (scheme == Scheme::DIRECT) return direct_loss(teacher, student, cfg);

  const std::size_t n = teacher.rows();
  const Matrix pt = prepare(teacher, manifold, cfg);
  const Matrix ps = prepare(student, manifold, cfg);

  auto operands = [&](AgentPair p) -> std::pair<const Matrix *, const Matrix *> {
    switch (p) {
      case AgentPair::TT: return {&pt, &pt};
      case AgentPair::SS: return {&ps, &ps};
      case AgentPair::TS: return {&pt, &ps};
    }
    return {nullptr, nullptr};
  };

  const SchemeSides sides = sides_of(scheme);
  const auto [la, lb] = operands(sides.left);
  const auto [ra, rb] = operands(sides.right);
  const RelationMatrix left = build_relation(*la, *lb, manifold, cfg, sides.left);
  const RelationMatrix right = build_relation(*ra, *rb, manifold, cfg, sides.right);

  const double weight =
      cfg.reduction == Reduction::Mean
          ? 1.0 / static_cast<double>(term_count(scheme, n, teacher.cols(), cfg.include_diagonal))
          : 1.0;

  LossResult out{0.0, Matrix(n, student.cols())};
  Matrix g_left(n, n), g_right(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j && !cfg.include_diagonal) continue;
      const double a = left.values(i, j);
      const double b = right.values(i, j);
      const double term = huber(a, b, cfg.huber_delta);
      if (!std::isfinite(term)) {
        throw std::domain_error(std::string(to_string(scheme)) +
                                " loss term is non-finite at " + at(i, j));
      }
      out.value += term;
      const double g = weight * huber_grad(a, b, cfg.huber_delta);
      g_left(i, j) = g;
      g_right(i, j) = -g;
    }
  }
  out.value *= weight;

  // Gradients in the prepared (possibly ball) coordinates of S.
  Matrix grad_ps(n, student.cols());
  Matrix scratch(n, student.cols());
  auto backprop = [&](const RelationMatrix &rel, const Matrix &g_hat) {
    if (rel.pair == AgentPair::TT) return;
    const Matrix g = cfg.rkd_normalize ? normalize_backward(g_hat, rel) : g_hat;
    const auto [pa, pb] = operands(rel.pair);
    if (rel.pair == AgentPair::SS) {
      relation_backward(*pa, *pb, manifold, cfg.curvature, g, grad_ps, grad_ps);
    } else {
      relation_backward(*pa, *pb, manifold, cfg.curvature, g, scratch, grad_ps);
    }
  };
  backprop(left, g_left);
  backprop(right, g_right);

  if (manifold == Manifold::Hyperbolic) {
    for (std::size_t i = 0; i < n; ++i) {
      const Vector g = embed_in_ball_vjp(student.row(i), cfg.curvature,
                                         cfg.hyp_prescale, grad_ps.row(i));
      std::copy(g.begin(), g.end(), out.grad.row(i).begin());
    }
  } else {
    out.grad = std::move(grad_ps);
  }
  return out;
}

namespace {

LossResult sum_over_manifolds(const EmbeddingBatch &teacher,
                              const EmbeddingBatch &student, Scheme scheme,
                              const DistillConfig &cfg) {
  cfg.validate();
  LossResult out{0.0, Matrix(student.rows(), student.cols())};
  for (Manifold m : cfg.manifold_set) {
    const LossResult part = scheme_loss(teacher, student, scheme, m, cfg);
    out.value += part.value;
    out.grad += part.grad;
  }
  return out;
}

}  // namespace

LossResult kd_s_loss(const EmbeddingBatch &teacher,
                     const EmbeddingBatch &student, const DistillConfig &cfg) {
  return sum_over_manifolds(teacher, student, Scheme::TT_SS, cfg);
}

LossResult kd_c_loss(const EmbeddingBatch &teacher,
                     const EmbeddingBatch &student, const DistillConfig &cfg) {
  return sum_over_manifolds(teacher, student, Scheme::TS_SS, cfg);
}

LossResult combine_objective(const LossResult &task, const LossResult &kd_s,
                             const LossResult &kd_c, const DistillConfig &cfg,
                             Objective objective) {
  LossResult out = task;
  if (objective == Objective::Self || objective == Objective::SelfCross) {
    out.value += cfg.lambda_s * kd_s.value;
    out.grad.add_scaled(kd_s.grad, cfg.lambda_s);
  }
  if (objective == Objective::Cross || objective == Objective::SelfCross) {
    out.value += cfg.lambda_c * kd_c.value;
    out.grad.add_scaled(kd_c.grad, cfg.lambda_c);
  }
  return out;
}

LossResult total_loss(const LossResult &task, const EmbeddingBatch &teacher,
                      const EmbeddingBatch &student, const DistillConfig &cfg,
                      Objective objective) {
  if (task.grad.rows() != student.rows() || task.grad.cols() != student.cols()) {
    throw std::invalid_argument("total_loss: task gradient shape does not match the student batch");
  }
  const bool self = objective == Objective::Self || objective == Objective::SelfCross;
  const bool cross = objective == Objective::Cross || objective == Objective::SelfCross;
  const LossResult kd_s = self ? kd_s_loss(teacher, student, cfg) : LossResult{};
  const LossResult kd_c = cross ? kd_c_loss(teacher, student, cfg) : LossResult{};
  return combine_objective(task, kd_s, kd_c, cfg, objective);
}

}  // namespace relkd
