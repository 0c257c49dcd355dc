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
#include "relkd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace relkd {

namespace {

void require_same_ball(const BallPoint &p, const BallPoint &q, const char *what) {
  require_same_dim(p.dim(), q.dim(), what);
  if (p.curvature().value() != q.curvature().value()) {
    throw std::invalid_argument(std::string(what) + ": curvature mismatch");
  }
}

// Pulls a point back inside the ball only when round-off has pushed it onto or
// past the boundary.
Vector reproject_if_outside(Vector x, Curvature c) {
  const double sq = squared_norm(x);
  if (c.value() * sq >= 1.0) {
    const double scale = (1.0 - kBallEpsilon) / (c.sqrt() * std::sqrt(sq));
    for (double &v : x) v *= scale;
  }
  return x;
}

}  // namespace

Curvature::Curvature(double c) : c_(c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("Curvature: c must be finite and > 0, got " +
                                std::to_string(c));
  }
}

double Curvature::sqrt() const { return std::sqrt(c_); }

BallPoint::BallPoint(Vector coords, Curvature c)
    : coords_(std::move(coords)), c_(c) {
  if (coords_.empty()) throw std::invalid_argument("BallPoint: empty coordinates");
  for (double v : coords_) {
    if (!std::isfinite(v)) throw std::invalid_argument("BallPoint: non-finite coordinate");
  }
  if (!(c_.value() * squared_norm(coords_) < 1.0)) {
    throw std::domain_error("BallPoint: point is not strictly inside the ball");
  }
}

BallPoint BallPoint::origin(std::size_t dim, Curvature c) {
  return BallPoint(Vector(dim, 0.0), c);
}

std::string_view to_string(Manifold m) {
  switch (m) {
    case Manifold::Euclidean: return "euc";
    case Manifold::Cosine: return "cos";
    case Manifold::Hyperbolic: return "hyp";
  }
  return "?";
}

Manifold parse_manifold(std::string_view name) {
  if (name == "euc" || name == "euclidean") return Manifold::Euclidean;
  if (name == "cos" || name == "cosine") return Manifold::Cosine;
  if (name == "hyp" || name == "hyperbolic") return Manifold::Hyperbolic;
  throw std::invalid_argument("unknown manifold '" + std::string(name) + "'");
}

double euclidean_distance(std::span<const double> x, std::span<const double> y) {
  require_same_dim(x.size(), y.size(), "euclidean_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double cosine_relation(std::span<const double> x, std::span<const double> y) {
  require_same_dim(x.size(), y.size(), "cosine_relation");
  const double nx = norm(x);
  const double ny = norm(y);
  if (nx <= kNormEpsilon) throw std::domain_error("cosine_relation: first argument has zero norm");
  if (ny <= kNormEpsilon) throw std::domain_error("cosine_relation: second argument has zero norm");
  return dot(x, y) / (nx * ny);
}

double conformal_factor(const BallPoint &p) {
  return 2.0 / (1.0 - p.curvature().value() * squared_norm(p.coords()));
}

namespace {

// Möbius sum without the reprojection step.
Vector mobius_sum(const Vector &p, const Vector &q, double c) {
  const double pq = dot(p, q);
  const double pp = squared_norm(p);
  const double qq = squared_norm(q);
  const double coef_p = 1.0 + 2.0 * c * pq + c * qq;
  const double coef_q = 1.0 - c * pp;
  const double denom = 1.0 + 2.0 * c * pq + c * c * pp * qq;
  Vector out(p.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (coef_p * p[i] + coef_q * q[i]) / denom;
  }
  return out;
}

}  // namespace

BallPoint mobius_add(const BallPoint &p, const BallPoint &q) {
  require_same_ball(p, q, "mobius_add");
  Vector out = mobius_sum(p.coords(), q.coords(), p.curvature().value());
  return BallPoint(reproject_if_outside(std::move(out), p.curvature()),
                   p.curvature());
}

BallPoint exp_map(const BallPoint &z, std::span<const double> v) {
  require_same_dim(z.dim(), v.size(), "exp_map");
  const double n = norm(v);
  if (n <= kNormEpsilon) return z;
  const Curvature c = z.curvature();
  const double k = c.sqrt();
  const double lambda = conformal_factor(z);
  const double t = std::tanh(k * lambda * n / 2.0) / (k * n);
  Vector step(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) step[i] = t * v[i];
  return mobius_add(z, BallPoint(reproject_if_outside(std::move(step), c), c));
}

BallPoint exp_map_origin(std::span<const double> v, Curvature c) {
  const double n = norm(v);
  if (n <= kNormEpsilon) return BallPoint::origin(v.size(), c);
  const double k = c.sqrt();
  const double t = std::tanh(k * n) / (k * n);
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = t * v[i];
  return BallPoint(reproject_if_outside(std::move(out), c), c);
}

double hyperbolic_distance(const BallPoint &p, const BallPoint &q) {
  require_same_ball(p, q, "hyperbolic_distance");
  if (p.coords() == q.coords()) return 0.0;
  Vector neg = p.coords();
  for (double &v : neg) v = -v;
  // Unprojected: near the boundary the artanh clamp is the only safeguard.
  const Vector w = mobius_sum(neg, q.coords(), p.curvature().value());
  const double k = p.curvature().sqrt();
  const double arg = std::min(k * norm(w), kArtanhClamp);
  return 2.0 / k * std::atanh(arg);
}

BallPoint project_to_ball(std::span<const double> x, Curvature c) {
  const double limit = 1.0 - kBallEpsilon;
  const double sq = squared_norm(x);
  Vector out(x.begin(), x.end());
  if (c.value() * sq >= limit * limit) {
    const double scale = limit / (c.sqrt() * std::sqrt(sq));
    for (double &v : out) v *= scale;
  }
  return BallPoint(std::move(out), c);
}

double euclidean_distance_grad(std::span<const double> x,
                               std::span<const double> y, double scale,
                               std::span<double> grad_x,
                               std::span<double> grad_y) {
  const double d = euclidean_distance(x, y);
  if (d == 0.0) return 0.0;
  const double s = scale / d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = s * (x[i] - y[i]);
    grad_x[i] += g;
    grad_y[i] -= g;
  }
  return d;
}

double cosine_relation_grad(std::span<const double> x, std::span<const double> y,
                            double scale, std::span<double> grad_x,
                            std::span<double> grad_y) {
  const double r = cosine_relation(x, y);
  const double nx = norm(x);
  const double ny = norm(y);
  const double inv = 1.0 / (nx * ny);
  const double rx = r / (nx * nx);
  const double ry = r / (ny * ny);
  for (std::size_t i = 0; i < x.size(); ++i) {
    grad_x[i] += scale * (y[i] * inv - rx * x[i]);
    grad_y[i] += scale * (x[i] * inv - ry * y[i]);
  }
  return r;
}

namespace {

struct GyroTerms {
  double pp, qq, diff_sq, denom, u;
};

GyroTerms gyro_terms(std::span<const double> p, std::span<const double> q,
                     Curvature curv) {
  require_same_dim(p.size(), q.size(), "hyperbolic distance");
  const double c = curv.value();
  GyroTerms t{squared_norm(p), squared_norm(q), 0.0, 0.0, 0.0};
  const double pq = dot(p, q);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - q[i];
    t.diff_sq += d * d;
  }
  t.denom = 1.0 - 2.0 * c * pq + c * c * t.pp * t.qq;
  t.u = std::sqrt(c * t.diff_sq / t.denom);
  return t;
}

}  // namespace

double hyperbolic_distance_coords(std::span<const double> p,
                                  std::span<const double> q, Curvature c) {
  const GyroTerms t = gyro_terms(p, q, c);
  return 2.0 / c.sqrt() * std::atanh(std::min(t.u, kArtanhClamp));
}

double hyperbolic_distance_grad(std::span<const double> p,
                                std::span<const double> q, Curvature curv,
                                double scale, std::span<double> grad_p,
                                std::span<double> grad_q) {
  const GyroTerms t = gyro_terms(p, q, curv);
  const double c = curv.value();
  const double k = curv.sqrt();
  if (t.diff_sq == 0.0) return 0.0;
  if (t.u >= kArtanhClamp) return 2.0 / k * std::atanh(kArtanhClamp);

  // d/du of (2/k) artanh(u), times du/d(u^2) = 1/(2u), times d(u^2) = c d(A/B)
  // with A = |p-q|^2 and B the gyro denominator.
  const double s = scale * (2.0 / k) / (1.0 - t.u * t.u) * c /
                   (2.0 * t.u * t.denom * t.denom);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dA_dp = 2.0 * (p[i] - q[i]);
    const double dB_dp = -2.0 * c * q[i] + 2.0 * c * c * t.qq * p[i];
    const double dB_dq = -2.0 * c * p[i] + 2.0 * c * c * t.pp * q[i];
    grad_p[i] += s * (t.denom * dA_dp - t.diff_sq * dB_dp);
    grad_q[i] += s * (-t.denom * dA_dp - t.diff_sq * dB_dq);
  }
  return 2.0 / k * std::atanh(t.u);
}

Vector embed_in_ball(std::span<const double> x, Curvature c, double prescale) {
  Vector v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = prescale * x[i];
  const BallPoint mapped = exp_map_origin(v, c);
  return project_to_ball(mapped.coords(), c).coords();
}

Vector embed_in_ball_vjp(std::span<const double> x, Curvature c,
                         double prescale, std::span<const double> upstream) {
  require_same_dim(x.size(), upstream.size(), "embed_in_ball_vjp");
  Vector v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = prescale * x[i];
  const double n = norm(v);
  Vector out(upstream.begin(), upstream.end());
  if (n <= kNormEpsilon) {
    for (double &g : out) g *= prescale;
    return out;
  }

  const double k = c.sqrt();
  const double kn = k * n;
  const double th = std::tanh(kn);
  const double gain = th / kn;
  double mapped_sq = 0.0;
  for (double vi : v) mapped_sq += (gain * vi) * (gain * vi);
  const double limit = 1.0 - kBallEpsilon;
  const double va = dot(v, upstream);

  if (c.value() * mapped_sq >= limit * limit) {
    // Saturated: output is (limit / k) * v / |v|, only the tangential part survives.
    const double s = limit / (k * n);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = prescale * s * (upstream[i] - v[i] * va / (n * n));
    }
    return out;
  }

  // d/dv [g(n) v] = g I + (g'(n) / n) v v^T with g(n) = tanh(kn) / (kn).
  double radial;
  if (kn < 1e-4) {
    radial = -2.0 * k * k / 3.0;
  } else {
    const double sech_sq = 1.0 - th * th;
    radial = (kn * sech_sq - th) / (k * n * n * n);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = prescale * (gain * upstream[i] + radial * va * v[i]);
  }
  return out;
}

}  // namespace relkd
