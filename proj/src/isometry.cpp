#include "geosteer/isometry.hpp"

#include <algorithm>

namespace geosteer {

int default_interior_points(std::size_t label_count) {
  if (label_count <= 8) return 4;
  if (label_count < 30) return 1;
  return 0;
}

std::vector<std::string> IsometryReport::vertex_labels() const {
  std::vector<std::string> out;
  out.reserve(vertices.size());
  for (const auto& v : vertices) out.push_back(v.label);
  return out;
}

bool shares_centroid_geodesic(const IsometryVertex& a, const IsometryVertex& b) {
  if (!a.segment && !b.segment) return false;
  auto on_segment = [](const IsometryVertex& v, std::pair<std::size_t, std::size_t> seg) {
    if (v.segment) return *v.segment == seg;
    return *v.centroid == seg.first || *v.centroid == seg.second;
  };
  if (a.segment && on_segment(b, *a.segment)) return true;
  if (b.segment && on_segment(a, *b.segment)) return true;
  return false;
}

IsometryReport isometry_report(const ActivationManifold& mh, const BehaviorManifold& my, int interior_points,
                               int n_steps) {
  const ConceptSpace& space = mh.space();
  if (space.labels() != my.space().labels() || space.structure() != my.space().structure()) {
    throw std::invalid_argument("isometry_report: manifolds must share a concept space");
  }
  IsometryReport report;
  const int k_interior = interior_points < 0 ? default_interior_points(space.size()) : interior_points;
  report.interior_points = k_interior;

  // Activation and behavior charts may use different fitting coordinates
  // (derived angles on one side), so each vertex keeps a coordinate per chart.
  std::vector<Coord> uh;
  std::vector<Coord> uy;
  const std::size_t n_labels = space.size();
  for (std::size_t i = 0; i < n_labels; ++i) {
    IsometryVertex v;
    v.label = space.labels()[i];
    v.u = mh.space().coord(i);
    v.centroid = i;
    report.vertices.push_back(v);
    uh.push_back(mh.space().coord(i));
    uy.push_back(my.space().coord(i));
  }
  for (std::size_t i = 0; i < n_labels; ++i) {
    for (std::size_t j = i + 1; j < n_labels; ++j) {
      for (int k = 1; k <= k_interior; ++k) {
        const double t = static_cast<double>(k) / (k_interior + 1);
        IsometryVertex v;
        v.label = space.labels()[i] + "-" + space.labels()[j] + "@" + std::to_string(k) + "/" +
                  std::to_string(k_interior + 1);
        v.u = mh.space().interpolate(mh.space().coord(i), mh.space().coord(j), t);
        v.segment = std::make_pair(i, j);
        report.vertices.push_back(v);
        uh.push_back(v.u);
        uy.push_back(my.space().interpolate(my.space().coord(i), my.space().coord(j), t));
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(report.vertices.size());
  std::vector<Vec> points(report.vertices.size());
  for (std::size_t v = 0; v < points.size(); ++v) points[v] = mh.decode(uh[v]);

  report.distances_linear = Mat::Zero(n, n);
  report.distances_mh = Mat::Zero(n, n);
  report.distances_my = Mat::Zero(n, n);
  std::vector<double> lin, geo_h, geo_y;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const auto ua = static_cast<std::size_t>(a);
      const auto ub = static_cast<std::size_t>(b);
      const double dl = (points[ua] - points[ub]).norm();
      const double dh = mh.geodesic_distance(uh[ua], uh[ub], n_steps);
      const double dy = my.geodesic_distance(uy[ua], uy[ub], n_steps);
      report.distances_linear(a, b) = report.distances_linear(b, a) = dl;
      report.distances_mh(a, b) = report.distances_mh(b, a) = dh;
      report.distances_my(a, b) = report.distances_my(b, a) = dy;
      if (shares_centroid_geodesic(report.vertices[ua], report.vertices[ub])) {
        report.excluded_pairs.emplace_back(ua, ub);
        continue;
      }
      lin.push_back(dl);
      geo_h.push_back(dh);
      geo_y.push_back(dy);
    }
  }
  if (lin.size() < 3) {
    throw InsufficientData("isometry_report: fewer than 3 usable vertex pairs");
  }
  report.r_mh_my = pearson(geo_h, geo_y);
  report.r_linear_my = pearson(lin, geo_y);

  const int mds_dim = static_cast<int>(std::min<Eigen::Index>(3, n));
  report.mds_linear = classical_mds(report.distances_linear, mds_dim);
  report.mds_mh = classical_mds(report.distances_mh, mds_dim);
  report.mds_my = classical_mds(report.distances_my, mds_dim);
  return report;
}

}  // namespace geosteer
