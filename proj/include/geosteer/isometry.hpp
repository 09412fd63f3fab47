#pragma once

#include "geosteer/manifolds.hpp"

#include <optional>
#include <utility>

namespace geosteer {

/// Interior points per centroid pair used when none is given: 4 for small
/// label sets, 1 for medium ones and 0 once the centroids alone are dense.
int default_interior_points(std::size_t label_count);

struct IsometryVertex {
  std::string label;
  Coord u = Coord::Zero();
  /// Centroid pair whose intrinsic segment the vertex was taken from; unset
  /// for centroids.
  std::optional<std::pair<std::size_t, std::size_t>> segment;
  /// Label index for centroid vertices.
  std::optional<std::size_t> centroid;
};

struct IsometryReport {
  std::vector<IsometryVertex> vertices;
  Mat distances_linear;
  Mat distances_mh;
  Mat distances_my;
  double r_mh_my = 0.0;
  double r_linear_my = 0.0;
  MdsEmbedding mds_linear;
  MdsEmbedding mds_mh;
  MdsEmbedding mds_my;
  /// Vertex index pairs (i < j) left out of the correlations.
  std::vector<std::pair<std::size_t, std::size_t>> excluded_pairs;
  int interior_points = 0;

  std::vector<std::string> vertex_labels() const;
};

/// True when both vertices lie on the intrinsic segment of one centroid pair
/// and at least one of them is an interior point of it.
bool shares_centroid_geodesic(const IsometryVertex& a, const IsometryVertex& b);

/// Pairwise linear, activation-geodesic and behavior-geodesic distances over
/// the centroids plus `interior_points` points per centroid pair, their
/// correlations and 3-D MDS embeddings. A negative count selects
/// default_interior_points. Throws InsufficientData with fewer than 3 usable
/// pairs.
IsometryReport isometry_report(const ActivationManifold& mh, const BehaviorManifold& my,
                               int interior_points = -1, int n_steps = 150);

}  // namespace geosteer
