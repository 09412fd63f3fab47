#pragma once

#include "geosteer/steering.hpp"

#include <cstdint>

namespace geosteer {

/// Label-level sizes: {n} for cyclic/sequential, {rows, cols} for grid and
/// cylinder. `period` rescales the periodic axis (0 keeps one unit per label).
/// Cylinders are periodic along rows (axis 0).
ConceptSpace make_concept_space(Structure kind, std::vector<int> sizes, double period = 0.0);

/// Softmax over negative scaled distances to B centroids with an appended
/// 'other' class held at `other_floor` before renormalisation.
class SoftmaxDistanceMap : public BehaviorMap {
public:
  SoftmaxDistanceMap() = default;
  /// `centroids` holds one centroid per row.
  SoftmaxDistanceMap(Mat centroids, double temperature = 0.5, double other_floor = 1e-6);

  BehaviorDistribution evaluate(const Vec& h, const BaseInput& base) const override;
  std::optional<Mat> jacobian(const Vec& h, const BaseInput& base) const override;
  int ambient_dim() const override { return static_cast<int>(centroids_.cols()); }
  int classes() const override { return static_cast<int>(centroids_.rows()) + 1; }

  BehaviorDistribution evaluate(const Vec& h) const { return evaluate(h, BaseInput{}); }
  /// Jacobian that reports (through `diag`) when h sits on a centroid and was
  /// nudged by 1e-9 to stay off the distance singularity.
  Mat jacobian_checked(const Vec& h, const BaseInput& base, Diagnostics* diag) const;

  const Mat& centroids() const noexcept { return centroids_; }
  double temperature() const noexcept { return temperature_; }
  double other_floor() const noexcept { return other_floor_; }

private:
  Vec effective(const Vec& h, const BaseInput& base) const;

  Mat centroids_;
  double temperature_ = 0.5;
  double other_floor_ = 1e-6;
};

struct SurrogateParams {
  int ambient_dim = 128;
  /// Distance between the centres of adjacent labels.
  double spacing = 3.0;
  /// Height of the second harmonic on the cyclic curve relative to its radius;
  /// 0 gives a plain circle.
  double cyclic_harmonic = 0.8;
  /// Total turning angle of the sequential arc.
  double sequential_bend = 1.5 * 3.141592653589793;
  /// Turning angle per step of the coil wound around the sequential arc; 0
  /// gives a plain arc.
  double sequential_coil = 2.0;
  /// Turning angle per step on non-periodic sheet axes.
  double sheet_step_angle = 0.5;
  /// Turning angle per step along the cylinder's open axis.
  double tube_step_angle = 0.3;
  double noise_sigma = 0.02;
  int samples_per_label = 20;
  double temperature = 0.5;
  double other_floor = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  ConceptSpace space;
  LabeledSamples activations;
  LabeledSamples distributions;
  /// Ground-truth label centres (labels x ambient); the behavior map's centroids.
  Mat centers;
  /// Orthonormal columns spanning the centres' embedding directions.
  Mat frame;
  SurrogateParams params;

  SoftmaxDistanceMap behavior_map() const {
    return SoftmaxDistanceMap(centers, params.temperature, params.other_floor);
  }
};

/// Label centres on a smooth curve or sheet in general position plus
/// isotropic noise. Distributions come from evaluating the softmax map at
/// every sample. Bit-identical for equal (space, params).
SyntheticDataset embed_ground_truth(const ConceptSpace& space, const SurrogateParams& params);

/// Low-dimensional ground-truth coordinates of each label centre (before the
/// random embedding), one row per label.
Mat ground_truth_layout(const ConceptSpace& space, const SurrogateParams& params);

/// Seeded contexts orthogonal to `frame`, standing in for prompt variation.
std::vector<BaseInput> make_base_inputs(const Mat& frame, int count, double sigma, std::uint64_t seed);

}  // namespace geosteer
