#include "geosteer/concept_space.hpp"

#include <cmath>
#include <cstdlib>
#include <set>

namespace geosteer {

const char* to_string(Structure s) {
  switch (s) {
    case Structure::cyclic: return "cyclic";
    case Structure::sequential: return "sequential";
    case Structure::grid: return "grid";
    case Structure::cylinder: return "cylinder";
  }
  return "unknown";
}

Structure structure_from_string(const std::string& name) {
  if (name == "cyclic") return Structure::cyclic;
  if (name == "sequential") return Structure::sequential;
  if (name == "grid") return Structure::grid;
  if (name == "cylinder") return Structure::cylinder;
  throw std::invalid_argument("unknown concept structure '" + name + "'");
}

ConceptSpace::ConceptSpace(Structure structure, std::vector<std::string> labels, Mat coords,
                           std::array<double, 2> periods, Eigen::MatrixXi positions,
                           std::array<int, 2> extents)
    : structure_(structure),
      labels_(std::move(labels)),
      coords_(std::move(coords)),
      periods_(periods),
      positions_(std::move(positions)),
      extents_(extents) {
  const int dim = (structure_ == Structure::grid || structure_ == Structure::cylinder) ? 2 : 1;
  if (labels_.empty()) throw std::invalid_argument("ConceptSpace: no labels");
  if (coords_.cols() != dim || coords_.rows() != static_cast<Eigen::Index>(labels_.size())) {
    throw std::invalid_argument("ConceptSpace: coordinates must be " + std::to_string(dim) +
                                "-D with one row per label");
  }
  if (positions_.rows() != coords_.rows() || positions_.cols() != dim) {
    throw std::invalid_argument("ConceptSpace: one ground-truth position per label required");
  }
  if (!coords_.allFinite()) throw std::invalid_argument("ConceptSpace: non-finite coordinates");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw std::invalid_argument("ConceptSpace: duplicate label '" + l + "'");
  }

  const bool needs_period = structure_ == Structure::cyclic || structure_ == Structure::cylinder;
  bool any_period = false;
  for (int ax = 0; ax < dim; ++ax) {
    const double p = periods_[static_cast<std::size_t>(ax)];
    if (p < 0.0 || !std::isfinite(p)) throw std::invalid_argument("ConceptSpace: invalid period");
    if (p > 0.0) {
      any_period = true;
      if (coords_.col(ax).minCoeff() < 0.0 || coords_.col(ax).maxCoeff() >= p) {
        throw std::invalid_argument("ConceptSpace: periodic coordinates must lie in [0, period)");
      }
    }
  }
  if (dim == 1) periods_[1] = 0.0;
  if (needs_period != any_period) {
    throw std::invalid_argument(std::string("ConceptSpace: ") + to_string(structure_) +
                                (needs_period ? " needs a periodic axis" : " must not be periodic"));
  }
  if (structure_ == Structure::cylinder && periods_[0] > 0.0 && periods_[1] > 0.0) {
    throw std::invalid_argument("ConceptSpace: cylinder has exactly one periodic axis");
  }
}

Coord ConceptSpace::coord(std::size_t i) const {
  Coord c = Coord::Zero();
  for (int ax = 0; ax < intrinsic_dim(); ++ax) c(ax) = coords_(static_cast<Eigen::Index>(i), ax);
  return c;
}

std::optional<std::size_t> ConceptSpace::find(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

std::size_t ConceptSpace::index_of(const std::string& label) const {
  if (auto i = find(label)) return *i;
  throw std::invalid_argument("unknown label '" + label + "'");
}

double ConceptSpace::ground_truth_distance(std::size_t i, std::size_t j) const {
  double total = 0.0;
  for (int ax = 0; ax < intrinsic_dim(); ++ax) {
    int d = std::abs(positions_(static_cast<Eigen::Index>(i), ax) -
                     positions_(static_cast<Eigen::Index>(j), ax));
    const int extent = extents_[static_cast<std::size_t>(ax)];
    if (periodic(ax) && extent > 0) d = std::min(d, extent - d);
    total += d;
  }
  return total;
}

Coord ConceptSpace::displacement(const Coord& a, const Coord& b) const {
  Coord d = Coord::Zero();
  for (int ax = 0; ax < intrinsic_dim(); ++ax) {
    double delta = b(ax) - a(ax);
    if (periodic(ax)) {
      const double p = period(ax);
      delta = std::fmod(delta, p);
      if (delta < 0.0) delta += p;  // now in [0, p)
      if (delta > 0.5 * p) delta -= p;
    }
    d(ax) = delta;
  }
  return d;
}

Coord ConceptSpace::wrap(const Coord& u) const {
  Coord w = u;
  for (int ax = 0; ax < intrinsic_dim(); ++ax) {
    if (!periodic(ax)) continue;
    const double p = period(ax);
    double r = std::fmod(u(ax), p);
    if (r < 0.0) r += p;
    if (r >= p) r = 0.0;
    w(ax) = r;
  }
  return w;
}

Coord ConceptSpace::interpolate(const Coord& a, const Coord& b, double t) const {
  if (t == 1.0) return wrap(b);
  return wrap(a + t * displacement(a, b));
}

std::pair<double, double> ConceptSpace::axis_bounds(int axis) const {
  if (periodic(axis)) return {0.0, period(axis)};
  return {coords_.col(axis).minCoeff(), coords_.col(axis).maxCoeff()};
}

ConceptSpace ConceptSpace::with_coordinates(Mat coords, std::array<double, 2> periods) const {
  return ConceptSpace(structure_, labels_, std::move(coords), periods, positions_, extents_);
}

}  // namespace geosteer
