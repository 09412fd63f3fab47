#pragma once

#include "geosteer/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace geosteer {

enum class Structure { cyclic, sequential, grid, cylinder };

const char* to_string(Structure s);
Structure structure_from_string(const std::string& name);

/// A conceptual domain: ordered labels, the intrinsic coordinates used to fit
/// manifolds over them, and the ground-truth graph metric between labels.
///
/// Ground truth lives on integer grid positions (`positions`, one column per
/// axis) with wraparound on periodic axes; it is independent of the fitting
/// coordinates, which may be replaced (for example by derived angles).
class ConceptSpace {
public:
  ConceptSpace() = default;
  ConceptSpace(Structure structure, std::vector<std::string> labels, Mat coords,
               std::array<double, 2> periods, Eigen::MatrixXi positions,
               std::array<int, 2> extents);

  Structure structure() const noexcept { return structure_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  /// 1 for cyclic/sequential, 2 for grid/cylinder.
  int intrinsic_dim() const noexcept { return static_cast<int>(coords_.cols()); }

  const Mat& coords() const noexcept { return coords_; }
  Coord coord(std::size_t i) const;
  /// Period of an axis, or 0 when the axis is not periodic.
  double period(int axis) const noexcept { return periods_[static_cast<std::size_t>(axis)]; }
  bool periodic(int axis) const noexcept { return periods_[static_cast<std::size_t>(axis)] > 0.0; }
  const std::array<double, 2>& periods() const noexcept { return periods_; }
  const Eigen::MatrixXi& positions() const noexcept { return positions_; }
  const std::array<int, 2>& extents() const noexcept { return extents_; }

  /// Throws std::invalid_argument for an unknown label.
  std::size_t index_of(const std::string& label) const;
  std::optional<std::size_t> find(const std::string& label) const;

  /// Graph distance between labels i and j (circular, absolute or l1).
  double ground_truth_distance(std::size_t i, std::size_t j) const;

  /// Signed shortest displacement from a to b in intrinsic coordinates.
  /// On periodic axes an exact half-period tie resolves to +period/2.
  Coord displacement(const Coord& a, const Coord& b) const;
  /// Point at fraction t along the shortest intrinsic segment a -> b, wrapped
  /// into [0, period) on periodic axes.
  Coord interpolate(const Coord& a, const Coord& b, double t) const;
  Coord wrap(const Coord& u) const;

  /// Parameter bounds of axis `axis`: [0, period) if periodic, else the
  /// coordinate range of the labels.
  std::pair<double, double> axis_bounds(int axis) const;

  /// Same labels and ground truth with new fitting coordinates and periods.
  ConceptSpace with_coordinates(Mat coords, std::array<double, 2> periods) const;

private:
  Structure structure_ = Structure::sequential;
  std::vector<std::string> labels_;
  Mat coords_;
  std::array<double, 2> periods_{0.0, 0.0};
  Eigen::MatrixXi positions_;
  std::array<int, 2> extents_{0, 0};
};

}  // namespace geosteer
