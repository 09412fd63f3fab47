#pragma once

#include "geosteer/steering.hpp"

namespace geosteer {

/// K+1 distributions decoded along the intrinsic segment between two labels
/// of the behavior manifold.
std::vector<BehaviorDistribution> behavior_target(const BehaviorManifold& my, const std::string& label_a,
                                                  const std::string& label_b, int K = 20);

/// Great-circle interpolation of the Hellinger embeddings of p_a and p_b.
std::vector<BehaviorDistribution> hellinger_geodesic(const BehaviorDistribution& p_a,
                                                     const BehaviorDistribution& p_b, int K);

struct ConformalOptions {
  int waypoints = 30;
  /// Largest alpha increment between continuation stages started from the
  /// Hellinger geodesic.
  double alpha_step = 5.0;
  OptimizerConfig optimizer{200, 5, 1e-7, 10, 1e-4, 0.9, 1e-12};
};

struct ConformalTarget {
  std::vector<BehaviorDistribution> points;
  /// Sum over segments of cost(midpoint) times the segment's Hellinger arc.
  double cost_length = 0.0;
  std::vector<double> cost_history;
  bool converged = true;
  Diagnostics diagnostics;
};

/// Cost-weighted Hellinger length between consecutive Hellinger coordinates:
/// each segment contributes exp(alpha d_H(midpoint, M_y)) times its arc length.
double conformal_length(const std::vector<Vec>& sqrt_points, const BehaviorManifold& my, double alpha);

/// Behavior path between p_a and p_b minimising conformal_length. The
/// Hellinger geodesic is optimised with continuation in alpha; a second start
/// along M_y between the endpoints' projections is kept if it ends cheaper.
/// alpha = 0 returns the geodesic itself.
ConformalTarget conformal_target(const BehaviorDistribution& p_a, const BehaviorDistribution& p_b,
                                 const BehaviorManifold& my, double alpha, const ConformalOptions& options = {});

struct PullbackConfig {
  enum class Init { chord, custom };

  int control_points = 10;
  int waypoints = 20;
  int subspace_dims = 32;
  double norm_reg_weight = 0.0;
  /// 50 outer x 5 inner with a tighter curvature condition than the shared
  /// default; saturated softmax regions otherwise stall the tail.
  OptimizerConfig optimizer{50, 5, 1e-3, 10, 1e-4, 0.5, 1e-12};
  Init init = Init::chord;
  /// Control coordinates (control_points x subspace_dims) for Init::custom.
  Mat custom_controls;

  void validate(int pca_dims) const;
};

struct PullbackResult {
  SteeringPath path;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_history;
  bool converged = false;
  bool line_search_failed = false;
  double r2_vs_manifold = 0.0;
  double r2_linear_baseline = 0.0;
  Diagnostics diagnostics;
};

/// Path parameterisation shared by the optimiser and plant-and-recover tests:
/// pi(t) = anchor(t) + V s(t) where V holds the leading PCA directions, s is a
/// natural cubic spline through the control coordinates and anchor(t) is the
/// chord between the label centroids with its V component removed.
class PullbackPath {
public:
  PullbackPath(const ActivationManifold& mh, const std::string& label_a, const std::string& label_b,
               int control_points, int waypoints, int subspace_dims);

  /// Control coordinates reproducing the chord exactly.
  Mat chord_controls() const;
  /// Control coordinates sampling `curve` (ambient points at the control fractions).
  Mat controls_through(const std::vector<Vec>& ambient_points) const;
  std::vector<Vec> waypoints(const Mat& controls) const;

  /// (K+1) x C spline weights: waypoint k = sum_j weights(k, j) control_j.
  const Mat& weights() const noexcept { return weights_; }
  const Mat& basis() const noexcept { return basis_; }
  std::vector<double> control_fractions() const;
  Vec chord_point(double t) const;
  int control_count() const noexcept { return static_cast<int>(weights_.cols()); }
  int waypoint_count() const noexcept { return static_cast<int>(weights_.rows()); }

private:
  Mat basis_;       // ambient x subspace
  Vec start_, end_;  // ambient centroids
  Mat weights_;
  std::vector<Vec> anchors_;
};

/// Recovers an activation path whose induced trajectory (averaged over base
/// inputs) matches `target` in squared Hellinger distance.
PullbackResult optimize_pullback(const BehaviorMap& map, const std::vector<BehaviorDistribution>& target,
                                 const std::vector<BaseInput>& bases, const ActivationManifold& mh,
                                 const std::string& label_a, const std::string& label_b,
                                 const PullbackConfig& config = {});

/// Intrinsic R² of `candidate` against `reference` in the reference's leading
/// singular subspace capturing `variance_threshold` of its variance.
/// Throws UndefinedR2 if the reference (or candidate) has zero variance.
double intrinsic_r2(const SteeringPath& candidate, const SteeringPath& reference,
                    double variance_threshold = 0.99);

/// Same score with an explicit orthonormal basis (ambient x r) and origin.
double intrinsic_r2_in_basis(const SteeringPath& candidate, const SteeringPath& reference, const Mat& basis,
                             const Vec& origin);

/// Mean over waypoints of the distance to M_h.
double mean_manifold_distance(const SteeringPath& path, const ActivationManifold& mh);

}  // namespace geosteer
