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

#include <span>
#include <string_view>

#include "relkd/numeric.hpp"

namespace relkd {

inline constexpr double kNormEpsilon = 1e-12;    // zero-norm floor
inline constexpr double kBallEpsilon = 1e-5;     // projection margin
inline constexpr double kArtanhClamp = 1.0 - 1e-7;

//! Positive curvature parameter c of the Poincare ball (sectional curvature -c^2).
class Curvature {
 public:
  explicit Curvature(double c = 1.0);
  double value() const { return c_; }
  double sqrt() const;

 private:
  double c_;
};

//! A point strictly inside the ball { x : c |x|^2 < 1 }.
class BallPoint {
 public:
  BallPoint(Vector coords, Curvature c);
  static BallPoint origin(std::size_t dim, Curvature c);

  const Vector &coords() const { return coords_; }
  Curvature curvature() const { return c_; }
  std::size_t dim() const { return coords_.size(); }

 private:
  Vector coords_;
  Curvature c_;
};

enum class Manifold { Euclidean, Cosine, Hyperbolic };

std::string_view to_string(Manifold m);
//! Accepts "euc", "cos", "hyp" and the long names.
Manifold parse_manifold(std::string_view name);

//! Selector among the three relation functions. Hyperbolic carries curvature.
struct DistanceKind {
  Manifold manifold = Manifold::Euclidean;
  Curvature curvature{1.0};

  static DistanceKind euclidean() { return {Manifold::Euclidean, Curvature{1.0}}; }
  static DistanceKind cosine() { return {Manifold::Cosine, Curvature{1.0}}; }
  static DistanceKind hyperbolic(Curvature c) { return {Manifold::Hyperbolic, c}; }
};

double euclidean_distance(std::span<const double> x, std::span<const double> y);

//! <x,y> / (|x| |y|). A similarity: 1 for parallel inputs.
double cosine_relation(std::span<const double> x, std::span<const double> y);

//! lambda_c(p) = 2 / (1 - c |p|^2)
double conformal_factor(const BallPoint &p);

BallPoint mobius_add(const BallPoint &p, const BallPoint &q);

BallPoint exp_map(const BallPoint &z, std::span<const double> v);
BallPoint exp_map_origin(std::span<const double> v, Curvature c);

//! (2 / sqrt c) artanh(sqrt c |(-p) (+)_c q|), argument clamped to 1 - 1e-7.
double hyperbolic_distance(const BallPoint &p, const BallPoint &q);

//! Returns x unchanged when c|x|^2 < (1 - eps)^2, else rescales to norm
//! (1 - eps) / sqrt c.
BallPoint project_to_ball(std::span<const double> x, Curvature c);

// -----------------------------------------------------------------------------
// Differentiable forms used by the loss module. Each returns the relation value
// and accumulates `scale * d value / d x` into grad_x (and likewise for y).
// At coincident points (distance 0) the gradient is taken as zero.

double euclidean_distance_grad(std::span<const double> x,
                               std::span<const double> y, double scale,
                               std::span<double> grad_x,
                               std::span<double> grad_y);

double cosine_relation_grad(std::span<const double> x, std::span<const double> y,
                            double scale, std::span<double> grad_x,
                            std::span<double> grad_y);

//! Hyperbolic distance between raw ball coordinates via the gyro-norm identity
//! below. Agrees with hyperbolic_distance() to round-off.
double hyperbolic_distance_coords(std::span<const double> p,
                                  std::span<const double> q, Curvature c);

//! Hyperbolic distance between two ball coordinates through the gyro-norm
//! identity |(-p) (+) q|^2 = |p-q|^2 / (1 - 2c<p,q> + c^2 |p|^2 |q|^2).
double hyperbolic_distance_grad(std::span<const double> p,
                                std::span<const double> q, Curvature c,
                                double scale, std::span<double> grad_p,
                                std::span<double> grad_q);

//! Maps a raw embedding into the ball: project(exp_0(prescale * x)).
Vector embed_in_ball(std::span<const double> x, Curvature c, double prescale);

//! Vector-Jacobian product of embed_in_ball at x: returns J^T * upstream.
Vector embed_in_ball_vjp(std::span<const double> x, Curvature c,
                         double prescale, std::span<const double> upstream);

}  // namespace relkd
