#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace geosteer {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Intrinsic manifold coordinate. One-dimensional concept spaces only use x().
using Coord = Eigen::Vector2d;

/// Sample correlation is undefined because an input sequence is constant.
class UndefinedCorrelation : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A cyclic coordinate cannot be derived because a centroid sits at the origin
/// of the principal plane.
class DegenerateCoordinate : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Not enough usable data to compute a statistic.
class InsufficientData : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Intrinsic R² is undefined because the reference path has no variance.
class UndefinedR2 : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Non-fatal problems collected while running an operation.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
  bool empty() const noexcept { return warnings.empty(); }
};

inline void warn_if(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace geosteer
