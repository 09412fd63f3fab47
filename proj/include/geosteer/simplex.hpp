#pragma once

#include "geosteer/types.hpp"

namespace geosteer {

class BehaviorManifold;

/// Probability vector on the open simplex: concept classes followed by the
/// trailing 'other' class. Every entry is strictly positive and the entries
/// sum to one within 1e-9.
class BehaviorDistribution {
public:
  BehaviorDistribution() = default;
  /// Validates; throws std::invalid_argument if not on the open simplex.
  explicit BehaviorDistribution(Vec probabilities);

  /// Clips entries below `floor` up to it, then renormalises. Use for raw
  /// model dumps that may contain exact zeros.
  static BehaviorDistribution clipped(Vec weights, double floor = 1e-12);

  const Vec& probabilities() const noexcept { return p_; }
  Eigen::Index size() const noexcept { return p_.size(); }
  double operator[](Eigen::Index i) const { return p_(i); }

private:
  Vec p_;
};

/// Point on the non-negative orthant of the unit sphere (square-root
/// coordinates of a distribution).
class HellingerPoint {
public:
  HellingerPoint() = default;
  /// Validates unit norm (1e-9) and non-negativity.
  explicit HellingerPoint(Vec coordinates);

  const Vec& coords() const noexcept { return x_; }
  Eigen::Index size() const noexcept { return x_.size(); }

  /// Squares back to a distribution (entries floored at 1e-300 then renormalised).
  BehaviorDistribution to_distribution() const;

private:
  Vec x_;
};

HellingerPoint hellinger_embed(const BehaviorDistribution& p);

/// (1/sqrt 2) |sqrt p - sqrt q|, in [0, 1].
double hellinger_distance(const BehaviorDistribution& p, const BehaviorDistribution& q);

/// Hellinger distance between two square-root embeddings.
double hellinger_distance(const Vec& sqrt_p, const Vec& sqrt_q);

/// -log sum_i sqrt(p_i q_i). Returns +infinity when the coefficient underflows.
double bhattacharyya_distance(const BehaviorDistribution& p, const BehaviorDistribution& q);

/// -log(1 - d^2) for a Hellinger distance d.
double bhattacharyya_from_hellinger(double hellinger);

/// Tangent vector at `base` pointing along the great circle to `x`, with
/// length equal to the geodesic angle. Throws for (near-)antipodal points.
Vec sphere_log_map(const Vec& base, const Vec& x);
Vec sphere_log_map(const HellingerPoint& base, const HellingerPoint& x);

/// cos|t| base + sin|t| t/|t|.
Vec sphere_exp_map(const Vec& base, const Vec& tangent);
Vec sphere_exp_map(const HellingerPoint& base, const Vec& tangent);

/// exp(alpha * d_H(p, M_y)), with the distance found by manifold projection.
double conformal_cost(const BehaviorDistribution& p, const BehaviorManifold& behavior,
                      double alpha);

}  // namespace geosteer
