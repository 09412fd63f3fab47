#pragma once

#include "geosteer/manifolds.hpp"

#include <optional>

namespace geosteer {

enum class Strategy { linear, manifold, pullback, custom };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// Waypoints pi(t_k) at uniform fractions t_k = k / K.
struct SteeringPath {
  std::vector<Vec> waypoints;
  Strategy strategy = Strategy::custom;
  std::vector<double> t_values;

  std::size_t size() const noexcept { return waypoints.size(); }
  /// Waypoint count minus one.
  int segments() const noexcept { return static_cast<int>(waypoints.size()) - 1; }
  /// One waypoint per row.
  Mat as_matrix() const;
};

/// Wraps waypoints (at least two, equal dimension) with uniform t values.
SteeringPath make_path(std::vector<Vec> waypoints, Strategy strategy);

/// Per-prompt context for a behavior map. The surrogate adds `context` to the
/// intervened activation; an empty vector means no context.
struct BaseInput {
  Vec context;
};

/// Activation -> output distribution. Implementations must be reentrant.
class BehaviorMap {
public:
  virtual ~BehaviorMap() = default;
  virtual BehaviorDistribution evaluate(const Vec& h, const BaseInput& base) const = 0;
  /// Analytic classes x ambient Jacobian, if the map has one.
  virtual std::optional<Mat> jacobian(const Vec& /*h*/, const BaseInput& /*base*/) const { return std::nullopt; }
  virtual int ambient_dim() const = 0;
  virtual int classes() const = 0;
};

/// Jacobian of `map` at h: analytic when available, otherwise central
/// differences with step 1e-4 * max(1, |h_i|) and a warning.
Mat behavior_jacobian(const BehaviorMap& map, const Vec& h, const BaseInput& base,
                      Diagnostics* diag = nullptr);

struct BehaviorTrajectory {
  std::vector<BehaviorDistribution> points;
  Strategy strategy = Strategy::custom;
  int base_count = 0;

  std::size_t size() const noexcept { return points.size(); }
};

SteeringPath linear_path(const Vec& h0, const Vec& h1, int K = 50);

/// Decodes the intrinsic segment between two labels (shorter arc on periodic
/// axes) into ambient waypoints. Throws std::invalid_argument on unknown labels.
SteeringPath manifold_path(const ActivationManifold& mh, const std::string& label_a,
                           const std::string& label_b, int K = 50);

/// Pointwise mean over base inputs of the map's output at every waypoint.
/// Evaluation errors are rethrown as std::runtime_error naming the waypoint.
BehaviorTrajectory induce_trajectory(const BehaviorMap& map, const SteeringPath& path,
                                     const std::vector<BaseInput>& bases);

/// Bhattacharyya distance of each trajectory point to the nearest point of M_y.
std::vector<double> waypoint_energies(const BehaviorTrajectory& traj, const BehaviorManifold& my);

/// Sum of waypoint_energies.
double cumulative_energy(const BehaviorTrajectory& traj, const BehaviorManifold& my);

/// Largest single-step probability gain of a class whose concept is at least
/// two ground-truth steps away from the current argmax. Classes beyond the
/// label count (the 'other' slot) are ignored.
double max_offadjacent_gain(const BehaviorTrajectory& traj, const ConceptSpace& space);

struct MetricSpec {
  enum class Kind { flat, density, pullback };

  Kind kind = Kind::flat;
  double alpha = 1.0;
  double beta = 1e-3;
  double epsilon = 1e-6;
  /// Scale of the density energy; 0 selects the manifold's sample sigma.
  double energy_sigma = 0.0;
  const ActivationManifold* manifold = nullptr;
  const BehaviorMap* map = nullptr;
  BaseInput base;

  void validate() const;
};

const char* to_string(MetricSpec::Kind k);

/// Energy sigma used by the density metric: the explicit value, else the
/// manifold's sample sigma, else 1e-3 times the RMS centroid radius.
double resolve_energy_sigma(const MetricSpec& metric);

/// Midpoint-rule length of the waypoint polyline under the metric.
double path_length(const SteeringPath& path, const MetricSpec& metric, Diagnostics* diag = nullptr);

}  // namespace geosteer
