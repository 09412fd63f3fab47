#include "geosteer/steering.hpp"

#include <cmath>

namespace geosteer {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::linear: return "linear";
    case Strategy::manifold: return "manifold";
    case Strategy::pullback: return "pullback";
    case Strategy::custom: return "custom";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "linear") return Strategy::linear;
  if (name == "manifold") return Strategy::manifold;
  if (name == "pullback") return Strategy::pullback;
  if (name == "custom") return Strategy::custom;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

const char* to_string(MetricSpec::Kind k) {
  switch (k) {
    case MetricSpec::Kind::flat: return "flat";
    case MetricSpec::Kind::density: return "density";
    case MetricSpec::Kind::pullback: return "pullback";
  }
  return "unknown";
}

Mat SteeringPath::as_matrix() const {
  if (waypoints.empty()) return {};
  Mat m(static_cast<Eigen::Index>(waypoints.size()), waypoints.front().size());
  for (std::size_t k = 0; k < waypoints.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = waypoints[k].transpose();
  return m;
}

SteeringPath make_path(std::vector<Vec> waypoints, Strategy strategy) {
  if (waypoints.size() < 2) throw std::invalid_argument("steering path needs at least two waypoints");
  for (const auto& w : waypoints) {
    if (w.size() != waypoints.front().size()) throw std::invalid_argument("steering path: dimension mismatch");
  }
  SteeringPath path;
  const auto K = static_cast<double>(waypoints.size() - 1);
  for (std::size_t k = 0; k < waypoints.size(); ++k) path.t_values.push_back(static_cast<double>(k) / K);
  path.waypoints = std::move(waypoints);
  path.strategy = strategy;
  return path;
}

Mat behavior_jacobian(const BehaviorMap& map, const Vec& h, const BaseInput& base, Diagnostics* diag) {
  if (auto j = map.jacobian(h, base)) return *std::move(j);
  warn_if(diag, "behavior map has no analytic Jacobian; using central differences");
  Mat jac(map.classes(), h.size());
  Vec probe = h;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double step = 1e-4 * std::max(1.0, std::abs(h(i)));
    probe(i) = h(i) + step;
    const Vec up = map.evaluate(probe, base).probabilities();
    probe(i) = h(i) - step;
    const Vec down = map.evaluate(probe, base).probabilities();
    probe(i) = h(i);
    jac.col(i) = (up - down) / (2.0 * step);
  }
  return jac;
}

SteeringPath linear_path(const Vec& h0, const Vec& h1, int K) {
  if (K < 1) throw std::invalid_argument("linear_path: K must be >= 1");
  if (h0.size() != h1.size()) throw std::invalid_argument("linear_path: dimension mismatch");
  std::vector<Vec> pts;
  for (int k = 0; k <= K; ++k) {
    const double t = static_cast<double>(k) / K;
    if (k == 0) pts.push_back(h0);
    else if (k == K) pts.push_back(h1);
    else pts.push_back((1.0 - t) * h0 + t * h1);
  }
  return make_path(std::move(pts), Strategy::linear);
}

SteeringPath manifold_path(const ActivationManifold& mh, const std::string& label_a, const std::string& label_b,
                           int K) {
  if (K < 1) throw std::invalid_argument("manifold_path: K must be >= 1");
  const ConceptSpace& space = mh.space();
  const Coord ua = space.coord(space.index_of(label_a));
  const Coord ub = space.coord(space.index_of(label_b));
  std::vector<Vec> pts;
  for (int k = 0; k <= K; ++k) {
    pts.push_back(mh.decode_ambient(space.interpolate(ua, ub, static_cast<double>(k) / K)));
  }
  return make_path(std::move(pts), Strategy::manifold);
}

BehaviorTrajectory induce_trajectory(const BehaviorMap& map, const SteeringPath& path,
                                     const std::vector<BaseInput>& bases) {
  if (bases.empty()) throw std::invalid_argument("induce_trajectory: no base inputs");
  BehaviorTrajectory traj;
  traj.strategy = path.strategy;
  traj.base_count = static_cast<int>(bases.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    try {
      Vec mean = Vec::Zero(map.classes());
      for (const auto& b : bases) mean += map.evaluate(path.waypoints[k], b).probabilities();
      mean /= static_cast<double>(bases.size());
      traj.points.push_back(BehaviorDistribution::clipped(std::move(mean), 1e-300));
    } catch (const std::exception& e) {
      throw std::runtime_error("behavior map failed at waypoint " + std::to_string(k) + ": " + e.what());
    }
  }
  return traj;
}

std::vector<double> waypoint_energies(const BehaviorTrajectory& traj, const BehaviorManifold& my) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto& p : traj.points) out.push_back(bhattacharyya_from_hellinger(my.hellinger_distance_to(p)));
  return out;
}

double cumulative_energy(const BehaviorTrajectory& traj, const BehaviorManifold& my) {
  double total = 0.0;
  for (double e : waypoint_energies(traj, my)) total += e;
  return total;
}

double max_offadjacent_gain(const BehaviorTrajectory& traj, const ConceptSpace& space) {
  double worst = 0.0;
  const auto n_labels = static_cast<Eigen::Index>(space.size());
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const Vec& cur = traj.points[k].probabilities();
    const Vec& next = traj.points[k + 1].probabilities();
    const Eigen::Index n = std::min(n_labels, cur.size());
    Eigen::Index top = 0;
    cur.head(n).maxCoeff(&top);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (space.ground_truth_distance(static_cast<std::size_t>(top), static_cast<std::size_t>(j)) < 2.0) continue;
      worst = std::max(worst, next(j) - cur(j));
    }
  }
  return worst;
}

void MetricSpec::validate() const {
  if (kind == Kind::density) {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("density metric: alpha and beta must be positive");
    if (manifold == nullptr) throw std::invalid_argument("density metric needs an activation manifold");
    if (energy_sigma < 0.0) throw std::invalid_argument("density metric: energy_sigma must be non-negative");
  }
  if (kind == Kind::pullback) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("pullback metric: epsilon must be positive");
    if (map == nullptr) throw std::invalid_argument("pullback metric needs a behavior map");
  }
}

double resolve_energy_sigma(const MetricSpec& metric) {
  if (metric.energy_sigma > 0.0) return metric.energy_sigma;
  if (metric.manifold == nullptr) throw std::invalid_argument("energy sigma needs an activation manifold");
  if (metric.manifold->sample_sigma() > 0.0) return metric.manifold->sample_sigma();
  const Mat& c = metric.manifold->centroids();
  const Vec mean = c.colwise().mean().transpose();
  double sq = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) sq += (c.row(i).transpose() - mean).squaredNorm();
  const double rms = std::sqrt(sq / static_cast<double>(c.rows()));
  return rms > 0.0 ? 1e-3 * rms : 1e-3;
}

double path_length(const SteeringPath& path, const MetricSpec& metric, Diagnostics* diag) {
  metric.validate();
  if (path.size() < 2) return 0.0;
  const double sigma = metric.kind == MetricSpec::Kind::density ? resolve_energy_sigma(metric) : 0.0;
  bool warned = false;

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const Vec step = path.waypoints[k + 1] - path.waypoints[k];
    const double len = step.norm();
    if (len == 0.0) continue;
    const Vec mid = 0.5 * (path.waypoints[k] + path.waypoints[k + 1]);
    switch (metric.kind) {
      case MetricSpec::Kind::flat:
        total += len;
        break;
      case MetricSpec::Kind::density: {
        const double d = metric.manifold->project_ambient(mid).distance;
        const double energy = d * d / (2.0 * sigma * sigma);
        total += len / std::sqrt(metric.alpha * std::exp(-energy) + metric.beta);
        break;
      }
      case MetricSpec::Kind::pullback: {
        Diagnostics local;
        const Mat jac = behavior_jacobian(*metric.map, mid, metric.base, &local);
        if (!local.empty() && !warned) {
          for (auto& w : local.warnings) warn_if(diag, w);
          warned = true;
        }
        const Vec p = metric.map->evaluate(mid, metric.base).probabilities();
        const Vec jv = jac * step;
        const double behavior = (jv.array().square() / (8.0 * p.array())).sum();
        total += std::sqrt(behavior + metric.epsilon * len * len);
        break;
      }
    }
  }
  return total;
}

}  // namespace geosteer
