#pragma once

#include "geosteer/concept_space.hpp"
#include "geosteer/numerics.hpp"
#include "geosteer/simplex.hpp"
#include "geosteer/splines.hpp"

#include <optional>
#include <string>
#include <vector>

namespace geosteer {

/// Rows of `data` tagged with concept labels.
struct LabeledSamples {
  std::vector<std::string> labels;
  Mat data;  // one row per label entry

  std::size_t size() const noexcept { return labels.size(); }
};

struct Projection {
  Coord u = Coord::Zero();
  Vec foot;
  double distance = 0.0;
};

/// Number of grid samples per intrinsic axis used to seed projections.
struct ProjectionGrid {
  int samples_1d = 512;
  int samples_2d = 128;
};

/// Decodes intrinsic coordinates through a parameterization and answers
/// distance, geodesic and projection queries. Shared by both manifold kinds.
///
/// For sphere charts the parameterization produces tangent vectors at
/// `base`; decoding applies the exponential map and folds the result into the
/// non-negative orthant. Reported lengths are multiplied by `distance_scale`.
class ManifoldChart {
public:
  enum class Kind { euclidean, sphere };

  ManifoldChart() = default;
  ManifoldChart(Parameterization param, ConceptSpace space, Kind kind, Vec base,
                double distance_scale, ProjectionGrid grid = {});

  Vec decode(const Coord& u) const;
  double geodesic_distance(const Coord& a, const Coord& b, int n_steps = 150) const;
  Projection project(const Vec& point) const;

  const Parameterization& parameterization() const noexcept { return param_; }
  const ConceptSpace& space() const noexcept { return space_; }
  Kind kind() const noexcept { return kind_; }
  const Vec& base() const noexcept { return base_; }
  double distance_scale() const noexcept { return scale_; }
  const ProjectionGrid& grid() const noexcept { return grid_; }
  /// Dense samples seeding projections (one decoded point per row).
  const Mat& samples() const noexcept { return samples_; }
  const std::vector<Coord>& sample_coords() const noexcept { return sample_coords_; }

private:
  double squared_gap(const Coord& u, const Vec& point) const;
  double refine_axis(Coord& u, int axis, double half_width, const Vec& point) const;

  Parameterization param_;
  ConceptSpace space_;
  Kind kind_ = Kind::euclidean;
  Vec base_;
  double scale_ = 1.0;
  ProjectionGrid grid_;
  Mat samples_;
  std::vector<Coord> sample_coords_;
  std::array<double, 2> grid_step_{0.0, 0.0};
};

struct ActivationFitOptions {
  int pca_dim = 64;
  /// Replace the cyclic fitting coordinate by the angle of each centroid in
  /// the top-two principal plane.
  bool derive_cyclic_coordinates = false;
  /// Smoothing penalty for sequential structures (weights = sqrt of the
  /// per-label sample count). 0 interpolates the centroids exactly.
  double smoothing = 0.0;
  ProjectionGrid grid;
};

/// Activation manifold: PCA subspace, per-label centroids and a spline
/// through them over the concept coordinates.
class ActivationManifold {
public:
  ActivationManifold() = default;
  ActivationManifold(PcaBasis pca, Mat centroids, Mat raw_centroids, std::vector<int> sample_counts,
                     double sample_sigma, ManifoldChart chart);

  const PcaBasis& pca() const noexcept { return pca_; }
  /// Label centroids in PCA coordinates (labels x k).
  const Mat& centroids() const noexcept { return centroids_; }
  /// Label centroids in the ambient space (labels x ambient).
  const Mat& raw_centroids() const noexcept { return raw_centroids_; }
  const std::vector<int>& sample_counts() const noexcept { return sample_counts_; }
  /// Median over labels of the RMS sample deviation from the label centroid.
  double sample_sigma() const noexcept { return sample_sigma_; }
  const ConceptSpace& space() const noexcept { return chart_.space(); }
  const ManifoldChart& chart() const noexcept { return chart_; }

  /// Point on the manifold in PCA coordinates.
  Vec decode(const Coord& u) const { return chart_.decode(u); }
  /// Point on the manifold lifted to the ambient space.
  Vec decode_ambient(const Coord& u) const { return pca_.reconstruct(chart_.decode(u)); }
  double geodesic_distance(const Coord& a, const Coord& b, int n_steps = 150) const {
    return chart_.geodesic_distance(a, b, n_steps);
  }
  /// Projection of an ambient point; the distance includes the component
  /// orthogonal to the PCA subspace and the foot is ambient.
  Projection project_ambient(const Vec& h) const;
  /// Projection of a point given in PCA coordinates.
  Projection project_subspace(const Vec& z) const { return chart_.project(z); }

private:
  PcaBasis pca_;
  Mat centroids_;
  Mat raw_centroids_;
  std::vector<int> sample_counts_;
  double sample_sigma_ = 0.0;
  ManifoldChart chart_;
};

/// Behavior manifold: a spline in the tangent plane of the Hellinger sphere
/// at `base_point`, decoded through the exponential map.
class BehaviorManifold {
public:
  BehaviorManifold() = default;
  BehaviorManifold(Mat centroids, ManifoldChart chart);

  const Vec& base_point() const noexcept { return chart_.base(); }
  /// Per-label mean distributions (labels x classes).
  const Mat& centroids() const noexcept { return centroids_; }
  const ConceptSpace& space() const noexcept { return chart_.space(); }
  const ManifoldChart& chart() const noexcept { return chart_; }
  Eigen::Index classes() const noexcept { return centroids_.cols(); }

  /// Hellinger coordinates (unit norm, non-negative) at u.
  Vec decode(const Coord& u) const { return chart_.decode(u); }
  BehaviorDistribution decode_distribution(const Coord& u) const;
  /// Geodesic length in Hellinger units.
  double geodesic_distance(const Coord& a, const Coord& b, int n_steps = 150) const {
    return chart_.geodesic_distance(a, b, n_steps);
  }
  /// Projection of square-root coordinates; distance in Hellinger units.
  Projection project(const Vec& sqrt_p) const { return chart_.project(sqrt_p); }
  double hellinger_distance_to(const BehaviorDistribution& p) const;

private:
  Mat centroids_;
  ManifoldChart chart_;
};

/// Mean of each label's rows; throws std::invalid_argument naming missing labels.
Mat label_means(const LabeledSamples& samples, const ConceptSpace& space,
                std::vector<int>* counts = nullptr);

/// Angles atan2(PC2, PC1) of centroids given in PCA coordinates.
/// Throws DegenerateCoordinate if a centroid sits at the plane origin.
Vec derive_cyclic_coordinate(const Mat& centroids);

/// Concept space with cyclic coordinates replaced by angles in [0, 2 pi).
ConceptSpace with_cyclic_angles(const ConceptSpace& space, const Vec& angles);

ActivationManifold fit_activation_manifold(const LabeledSamples& activations,
                                           const ConceptSpace& space,
                                           const ActivationFitOptions& options = {});

BehaviorManifold fit_behavior_manifold(const LabeledSamples& distributions,
                                       const ConceptSpace& space, ProjectionGrid grid = {});

/// Spline over the concept coordinates matching the space's structure.
Parameterization fit_structure_spline(const ConceptSpace& space, const Mat& values,
                                      double smoothing = 0.0, const std::vector<int>* counts = nullptr);

Projection project_to_manifold(const ActivationManifold& manifold, const Vec& ambient_point);
Projection project_to_manifold(const BehaviorManifold& manifold, const BehaviorDistribution& p);

}  // namespace geosteer
