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

// Relational knowledge-distillation losses.
//
// A teacher batch T and a student batch S (N rows each) are compared through
// relation matrices R[i][j] = r(a_i, b_j), where r is one of the Euclidean
// distance, the cosine relation, or the Poincare-ball distance of exp_0-mapped
// rows. A scheme picks which two relation matrices the element loss compares:
//
//   TT_SS : l(r(t_i, t_j), r(s_i, s_j))    self-agent
//   TS_SS : l(r(t_i, s_j), r(s_i, s_j))    cross-agent
//   TT_TS : l(r(t_i, t_j), r(t_i, s_j))
//   DIRECT: l(t_ik, s_ik) per coordinate
//
// The element loss l is the Huber / smooth-L1 function. Every loss returns the
// exact gradient with respect to S; T is treated as a constant.

#include <string_view>
#include <vector>

#include "relkd/geometry.hpp"
#include "relkd/numeric.hpp"

namespace relkd {

using EmbeddingBatch = Matrix;
using GradientBatch = Matrix;

enum class AgentPair { TT, SS, TS };
enum class Scheme { TT_SS, TS_SS, TT_TS, DIRECT };
enum class Reduction { Mean, Sum };

//! Which overall objective a training step minimises.
enum class Objective {
  TaskOnly,  // no distillation
  Self,      // task + lambda_s * KD-S
  Cross,     // task + lambda_c * KD-C
  SelfCross  // task + lambda_s * KD-S + lambda_c * KD-C
};

std::string_view to_string(Scheme s);
std::string_view to_string(Objective o);
Objective parse_objective(std::string_view name);

struct DistillConfig {
  double lambda_s = 1.0;
  double lambda_c = 1.0;
  Curvature curvature{1.0};
  double huber_delta = 1.0;
  Reduction reduction = Reduction::Mean;
  bool include_diagonal = true;
  bool rkd_normalize = false;
  double hyp_prescale = 1.0;
  std::vector<Manifold> manifold_set{Manifold::Euclidean, Manifold::Cosine,
                                     Manifold::Hyperbolic};

  DistanceKind kind(Manifold m) const { return {m, curvature}; }
  //! Throws std::invalid_argument on any violated field invariant.
  void validate() const;
};

struct RelationMatrix {
  Matrix values;
  DistanceKind kind;
  AgentPair pair = AgentPair::TT;
  //! Off-diagonal mean used for normalisation (1 when normalisation is off).
  double normalizer = 1.0;
};

struct LossResult {
  double value = 0.0;
  GradientBatch grad;
};

double huber(double a, double b, double delta);
//! d huber / d a. The derivative with respect to b is the negation.
double huber_grad(double a, double b, double delta);

RelationMatrix relation_matrix(const EmbeddingBatch &a, const EmbeddingBatch &b,
                               DistanceKind kind, const DistillConfig &cfg,
                               AgentPair pair = AgentPair::TT);

LossResult scheme_loss(const EmbeddingBatch &teacher,
                       const EmbeddingBatch &student, Scheme scheme,
                       Manifold manifold, const DistillConfig &cfg);

//! Number of element-loss terms a scheme reduces over for an N x C batch.
std::size_t term_count(Scheme scheme, std::size_t n, std::size_t dim,
                       bool include_diagonal);

//! Sum of TT_SS losses over cfg.manifold_set.
LossResult kd_s_loss(const EmbeddingBatch &teacher,
                     const EmbeddingBatch &student, const DistillConfig &cfg);

//! Sum of TS_SS losses over cfg.manifold_set.
LossResult kd_c_loss(const EmbeddingBatch &teacher,
                     const EmbeddingBatch &student, const DistillConfig &cfg);

//! task + lambda_s * kd_s and/or lambda_c * kd_c as selected by `objective`.
//! Terms the objective does not use are ignored (they may be empty).
LossResult combine_objective(const LossResult &task, const LossResult &kd_s,
                             const LossResult &kd_c, const DistillConfig &cfg,
                             Objective objective);

//! Combines a precomputed task loss with the distillation terms of `objective`.
LossResult total_loss(const LossResult &task, const EmbeddingBatch &teacher,
                      const EmbeddingBatch &student, const DistillConfig &cfg,
                      Objective objective);

}  // namespace relkd
