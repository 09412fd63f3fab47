#include "geosteer/simplex.hpp"

#include "geosteer/manifolds.hpp"

#include <cmath>
#include <limits>

namespace geosteer {

BehaviorDistribution::BehaviorDistribution(Vec probabilities) : p_(std::move(probabilities)) {
  if (p_.size() < 2) throw std::invalid_argument("BehaviorDistribution: need at least 2 classes");
  if (!p_.allFinite() || p_.minCoeff() <= 0.0) {
    throw std::invalid_argument("BehaviorDistribution: entries must be finite and strictly positive");
  }
  if (std::abs(p_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("BehaviorDistribution: entries must sum to 1");
  }
}

BehaviorDistribution BehaviorDistribution::clipped(Vec weights, double floor) {
  if (!weights.allFinite() || weights.minCoeff() < 0.0) {
    throw std::invalid_argument("BehaviorDistribution::clipped: weights must be finite and non-negative");
  }
  weights = weights.cwiseMax(floor);
  weights /= weights.sum();
  return BehaviorDistribution(std::move(weights));
}

HellingerPoint::HellingerPoint(Vec coordinates) : x_(std::move(coordinates)) {
  if (!x_.allFinite() || x_.minCoeff() < 0.0) {
    throw std::invalid_argument("HellingerPoint: coordinates must be non-negative");
  }
  if (std::abs(x_.norm() - 1.0) > 1e-9) throw std::invalid_argument("HellingerPoint: must have unit norm");
}

BehaviorDistribution HellingerPoint::to_distribution() const {
  Vec p = x_.array().square().matrix().cwiseMax(1e-300);
  p /= p.sum();
  return BehaviorDistribution(std::move(p));
}

HellingerPoint hellinger_embed(const BehaviorDistribution& p) {
  Vec x = p.probabilities().cwiseSqrt();
  // Sum is 1 within 1e-9; the norm tolerance is the same, so no rescale needed.
  return HellingerPoint(std::move(x));
}

double hellinger_distance(const Vec& sqrt_p, const Vec& sqrt_q) {
  if (sqrt_p.size() != sqrt_q.size()) throw std::invalid_argument("hellinger_distance: dimension mismatch");
  return (sqrt_p - sqrt_q).norm() / std::sqrt(2.0);
}

double hellinger_distance(const BehaviorDistribution& p, const BehaviorDistribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("hellinger_distance: dimension mismatch");
  return hellinger_distance(Vec(p.probabilities().cwiseSqrt()), Vec(q.probabilities().cwiseSqrt()));
}

double bhattacharyya_distance(const BehaviorDistribution& p, const BehaviorDistribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("bhattacharyya_distance: dimension mismatch");
  const double bc = (p.probabilities().array() * q.probabilities().array()).sqrt().sum();
  if (!(bc > 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(0.0, -std::log(bc));
}

double bhattacharyya_from_hellinger(double hellinger) {
  const double one_minus = 1.0 - hellinger * hellinger;
  if (!(one_minus > 0.0)) return std::numeric_limits<double>::infinity();
  return -std::log1p(-hellinger * hellinger);
}

Vec sphere_log_map(const Vec& base, const Vec& x) {
  if (base.size() != x.size()) throw std::invalid_argument("sphere_log_map: dimension mismatch");
  const double cosine = base.dot(x);
  if (cosine <= -1.0 + 1e-9) throw std::invalid_argument("sphere_log_map: antipodal points");
  const Vec ortho = x - cosine * base;
  const double sine = ortho.norm();
  if (sine == 0.0) return Vec::Zero(base.size());
  const double angle = std::atan2(sine, cosine);
  return ortho * (angle / sine);
}

Vec sphere_log_map(const HellingerPoint& base, const HellingerPoint& x) {
  return sphere_log_map(base.coords(), x.coords());
}

Vec sphere_exp_map(const Vec& base, const Vec& tangent) {
  if (base.size() != tangent.size()) throw std::invalid_argument("sphere_exp_map: dimension mismatch");
  const double len = tangent.norm();
  if (len == 0.0) return base;
  return std::cos(len) * base + (std::sin(len) / len) * tangent;
}

Vec sphere_exp_map(const HellingerPoint& base, const Vec& tangent) {
  return sphere_exp_map(base.coords(), tangent);
}

double conformal_cost(const BehaviorDistribution& p, const BehaviorManifold& behavior, double alpha) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("conformal_cost: alpha must be finite");
  if (alpha == 0.0) return 1.0;
  return std::exp(alpha * behavior.hellinger_distance_to(p));
}

}  // namespace geosteer
