#include "geosteer/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace geosteer {

// ---------------------------------------------------------------------------
// ManifoldChart
// ---------------------------------------------------------------------------

ManifoldChart::ManifoldChart(Parameterization param, ConceptSpace space, Kind kind, Vec base,
                             double distance_scale, ProjectionGrid grid)
    : param_(std::move(param)),
      space_(std::move(space)),
      kind_(kind),
      base_(std::move(base)),
      scale_(distance_scale),
      grid_(grid) {
  if (kind_ == Kind::sphere && base_.size() != value_dim(param_)) {
    throw std::invalid_argument("ManifoldChart: sphere base dimension mismatch");
  }
  const int dim = space_.intrinsic_dim();
  const int per_axis = dim == 1 ? grid_.samples_1d : grid_.samples_2d;
  if (per_axis < 2) throw std::invalid_argument("ManifoldChart: projection grid needs >= 2 samples per axis");

  std::array<std::vector<double>, 2> axis_values;
  for (int ax = 0; ax < dim; ++ax) {
    const auto [lo, hi] = space_.axis_bounds(ax);
    auto& vals = axis_values[static_cast<std::size_t>(ax)];
    vals.resize(static_cast<std::size_t>(per_axis));
    const bool periodic = space_.periodic(ax);
    const double step = periodic ? (hi - lo) / per_axis : (hi - lo) / (per_axis - 1);
    for (int i = 0; i < per_axis; ++i) vals[static_cast<std::size_t>(i)] = lo + i * step;
    grid_step_[static_cast<std::size_t>(ax)] = step;
  }

  if (dim == 1) {
    for (double v : axis_values[0]) sample_coords_.emplace_back(v, 0.0);
  } else {
    for (double a : axis_values[0]) {
      for (double b : axis_values[1]) sample_coords_.emplace_back(a, b);
    }
  }
  samples_.resize(static_cast<Eigen::Index>(sample_coords_.size()), value_dim(param_));
  for (std::size_t i = 0; i < sample_coords_.size(); ++i) {
    samples_.row(static_cast<Eigen::Index>(i)) = decode(sample_coords_[i]).transpose();
  }
}

Vec ManifoldChart::decode(const Coord& u) const {
  Vec value = eval(param_, u);
  if (kind_ == Kind::euclidean) return value;
  value -= value.dot(base_) * base_;  // keep the tangent vector in the tangent plane
  return sphere_exp_map(base_, value).cwiseAbs();
}

double ManifoldChart::geodesic_distance(const Coord& a, const Coord& b, int n_steps) const {
  if (n_steps < 1) throw std::invalid_argument("geodesic_distance: n_steps must be positive");
  double length = 0.0;
  Vec prev = decode(space_.wrap(a));
  for (int k = 1; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) / n_steps;
    Vec cur = decode(space_.interpolate(a, b, t));
    length += (cur - prev).norm();
    prev = std::move(cur);
  }
  return scale_ * length;
}

double ManifoldChart::squared_gap(const Coord& u, const Vec& point) const {
  return (decode(u) - point).squaredNorm();
}

double ManifoldChart::refine_axis(Coord& u, int axis, double half_width, const Vec& point) const {
  const double centre = u(axis);
  double lo = centre - half_width;
  double hi = centre + half_width;
  if (!space_.periodic(axis)) {
    const auto [blo, bhi] = space_.axis_bounds(axis);
    lo = std::max(lo, blo);
    hi = std::min(hi, bhi);
  }
  auto gap_at = [&](double s) {
    Coord probe = u;
    probe(axis) = s;
    return squared_gap(probe, point);
  };

  const double best_start = gap_at(centre);
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = gap_at(x1);
  double f2 = gap_at(x2);
  const double tol = 1e-10 * std::max(1.0, std::abs(centre));
  for (int it = 0; it < 80 && (hi - lo) > tol; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = gap_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = gap_at(x2);
    }
  }
  const double cand = f1 <= f2 ? x1 : x2;
  const double fc = std::min(f1, f2);
  if (fc < best_start) {
    u(axis) = cand;
    return fc;
  }
  return best_start;
}

Projection ManifoldChart::project(const Vec& point) const {
  if (point.size() != samples_.cols()) throw std::invalid_argument("project: dimension mismatch");
  Eigen::Index best = 0;
  (samples_.rowwise() - point.transpose()).rowwise().squaredNorm().minCoeff(&best);

  Coord u = sample_coords_[static_cast<std::size_t>(best)];
  if (space_.intrinsic_dim() == 1) {
    refine_axis(u, 0, grid_step_[0], point);
  } else {
    double current = squared_gap(u, point);
    for (int sweep = 0; sweep < 30; ++sweep) {
      const Coord before = u;
      refine_axis(u, 0, grid_step_[0], point);
      const double after = refine_axis(u, 1, grid_step_[1], point);
      const bool settled = (u - before).cwiseAbs().maxCoeff() < 1e-11 || current - after <= 1e-16 * current;
      current = after;
      if (settled) break;
    }
  }

  Projection out;
  out.u = space_.wrap(u);
  out.foot = decode(out.u);
  out.distance = scale_ * (out.foot - point).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Manifold types
// ---------------------------------------------------------------------------

ActivationManifold::ActivationManifold(PcaBasis pca, Mat centroids, Mat raw_centroids,
                                       std::vector<int> sample_counts, double sample_sigma,
                                       ManifoldChart chart)
    : pca_(std::move(pca)),
      centroids_(std::move(centroids)),
      raw_centroids_(std::move(raw_centroids)),
      sample_counts_(std::move(sample_counts)),
      sample_sigma_(sample_sigma),
      chart_(std::move(chart)) {
  if (centroids_.rows() != static_cast<Eigen::Index>(chart_.space().size())) {
    throw std::invalid_argument("ActivationManifold: centroid count must equal label count");
  }
}

Projection ActivationManifold::project_ambient(const Vec& h) const {
  if (h.size() != pca_.ambient_dim) throw std::invalid_argument("project: ambient dimension mismatch");
  const Vec z = pca_.project(h);
  const double off = pca_.residual(h).norm();
  Projection p = chart_.project(z);
  p.distance = std::hypot(p.distance, off);
  p.foot = pca_.reconstruct(p.foot);
  return p;
}

BehaviorManifold::BehaviorManifold(Mat centroids, ManifoldChart chart)
    : centroids_(std::move(centroids)), chart_(std::move(chart)) {
  if (centroids_.rows() != static_cast<Eigen::Index>(chart_.space().size())) {
    throw std::invalid_argument("BehaviorManifold: centroid count must equal label count");
  }
}

BehaviorDistribution BehaviorManifold::decode_distribution(const Coord& u) const {
  return BehaviorDistribution::clipped(decode(u).array().square().matrix(), 1e-300);
}

double BehaviorManifold::hellinger_distance_to(const BehaviorDistribution& p) const {
  return project(p.probabilities().cwiseSqrt()).distance;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

Mat label_means(const LabeledSamples& samples, const ConceptSpace& space, std::vector<int>* counts) {
  if (samples.labels.size() != static_cast<std::size_t>(samples.data.rows())) {
    throw std::invalid_argument("label/sample count mismatch");
  }
  const auto n = static_cast<Eigen::Index>(space.size());
  Mat sums = Mat::Zero(n, samples.data.cols());
  std::vector<int> count(space.size(), 0);
  for (std::size_t r = 0; r < samples.labels.size(); ++r) {
    const auto idx = space.index_of(samples.labels[r]);
    sums.row(static_cast<Eigen::Index>(idx)) += samples.data.row(static_cast<Eigen::Index>(r));
    ++count[idx];
  }
  std::string missing;
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] == 0) missing += (missing.empty() ? "" : ", ") + space.labels()[i];
  }
  if (!missing.empty()) throw std::invalid_argument("no samples for labels: " + missing);
  for (Eigen::Index i = 0; i < n; ++i) sums.row(i) /= count[static_cast<std::size_t>(i)];
  if (counts != nullptr) *counts = std::move(count);
  return sums;
}

Vec derive_cyclic_coordinate(const Mat& centroids) {
  if (centroids.cols() < 2) throw std::invalid_argument("derive_cyclic_coordinate: need two principal components");
  const Eigen::Index n = centroids.rows();
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::hypot(centroids(i, 0), centroids(i, 1)));
  Vec angles(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::hypot(centroids(i, 0), centroids(i, 1));
    if (!(r > 1e-12 * scale) || scale == 0.0) {
      throw DegenerateCoordinate("derive_cyclic_coordinate: centroid " + std::to_string(i) +
                                 " lies at the origin of the principal plane");
    }
    angles(i) = std::atan2(centroids(i, 1), centroids(i, 0));
  }
  return angles;
}

ConceptSpace with_cyclic_angles(const ConceptSpace& space, const Vec& angles) {
  if (space.structure() != Structure::cyclic) throw std::invalid_argument("with_cyclic_angles: space is not cyclic");
  if (angles.size() != static_cast<Eigen::Index>(space.size())) {
    throw std::invalid_argument("with_cyclic_angles: one angle per label required");
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Mat coords(angles.size(), 1);
  for (Eigen::Index i = 0; i < angles.size(); ++i) {
    double a = std::fmod(angles(i), two_pi);
    if (a < 0.0) a += two_pi;
    if (a >= two_pi) a = 0.0;
    coords(i, 0) = a;
  }
  return space.with_coordinates(std::move(coords), {two_pi, 0.0});
}

Parameterization fit_structure_spline(const ConceptSpace& space, const Mat& values, double smoothing,
                                      const std::vector<int>* counts) {
  if (values.rows() != static_cast<Eigen::Index>(space.size())) {
    throw std::invalid_argument("fit_structure_spline: one value row per label required");
  }
  if (space.intrinsic_dim() == 1) {
    std::vector<std::size_t> order(space.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return space.coords()(static_cast<Eigen::Index>(a), 0) < space.coords()(static_cast<Eigen::Index>(b), 0);
    });
    std::vector<double> knots;
    Mat sorted(values.rows(), values.cols());
    std::vector<double> weights;
    for (std::size_t k = 0; k < order.size(); ++k) {
      knots.push_back(space.coords()(static_cast<Eigen::Index>(order[k]), 0));
      sorted.row(static_cast<Eigen::Index>(k)) = values.row(static_cast<Eigen::Index>(order[k]));
      if (counts != nullptr) weights.push_back(std::sqrt(static_cast<double>((*counts)[order[k]])));
    }
    if (space.structure() == Structure::cyclic) {
      return fit_periodic_cubic(std::move(knots), std::move(sorted), space.period(0));
    }
    if (smoothing > 0.0) {
      if (weights.empty()) weights.assign(knots.size(), 1.0);
      return fit_smoothing_cubic(std::move(knots), std::move(sorted), std::move(weights), smoothing);
    }
    return fit_natural_cubic(std::move(knots), std::move(sorted));
  }

  std::optional<PeriodicAxis> periodic;
  for (int ax = 0; ax < 2; ++ax) {
    if (space.periodic(ax)) periodic = PeriodicAxis{ax, space.period(ax)};
  }
  return fit_thin_plate(space.coords(), values, periodic);
}

ActivationManifold fit_activation_manifold(const LabeledSamples& activations, const ConceptSpace& space,
                                           const ActivationFitOptions& options) {
  if (activations.data.rows() == 0) throw std::invalid_argument("fit_activation_manifold: no samples");
  if (options.pca_dim < 1 || options.pca_dim > activations.data.cols()) {
    throw std::invalid_argument("fit_activation_manifold: pca_dim must be in [1, ambient dim]");
  }

  std::vector<int> counts;
  Mat raw = label_means(activations, space, &counts);
  PcaBasis pca = pca_fit(activations.data, options.pca_dim);

  Mat centroids(raw.rows(), pca.dims());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) centroids.row(i) = pca.project(raw.row(i).transpose()).transpose();

  std::vector<double> spread(space.size(), 0.0);
  for (std::size_t r = 0; r < activations.labels.size(); ++r) {
    const auto idx = space.index_of(activations.labels[r]);
    spread[idx] += (activations.data.row(static_cast<Eigen::Index>(r)) - raw.row(static_cast<Eigen::Index>(idx))).squaredNorm();
  }
  for (std::size_t i = 0; i < spread.size(); ++i) spread[i] = std::sqrt(spread[i] / counts[i]);
  std::sort(spread.begin(), spread.end());
  const std::size_t mid = spread.size() / 2;
  const double sigma = spread.size() % 2 == 1 ? spread[mid] : 0.5 * (spread[mid - 1] + spread[mid]);

  ConceptSpace fit_space = space;
  if (options.derive_cyclic_coordinates && space.structure() == Structure::cyclic) {
    fit_space = with_cyclic_angles(space, derive_cyclic_coordinate(centroids));
  }
  Parameterization param = fit_structure_spline(fit_space, centroids, options.smoothing, &counts);
  ManifoldChart chart(std::move(param), std::move(fit_space), ManifoldChart::Kind::euclidean, Vec(), 1.0,
                      options.grid);
  return ActivationManifold(std::move(pca), std::move(centroids), std::move(raw), std::move(counts), sigma,
                            std::move(chart));
}

BehaviorManifold fit_behavior_manifold(const LabeledSamples& distributions, const ConceptSpace& space,
                                       ProjectionGrid grid) {
  if (distributions.data.rows() == 0) throw std::invalid_argument("fit_behavior_manifold: no samples");
  Mat centroids = label_means(distributions, space);
  for (Eigen::Index i = 0; i < centroids.rows(); ++i) {
    if (centroids.row(i).minCoeff() <= 0.0) {
      throw std::invalid_argument("fit_behavior_manifold: distributions must be strictly positive");
    }
    centroids.row(i) /= centroids.row(i).sum();
  }

  const Mat roots = centroids.cwiseSqrt();
  Vec base = roots.colwise().sum().transpose();
  base.normalize();

  Mat tangents(roots.rows(), roots.cols());
  for (Eigen::Index i = 0; i < roots.rows(); ++i) {
    tangents.row(i) = sphere_log_map(base, Vec(roots.row(i).transpose())).transpose();
  }
  Parameterization param = fit_structure_spline(space, tangents);
  ManifoldChart chart(std::move(param), space, ManifoldChart::Kind::sphere, std::move(base),
                      1.0 / std::sqrt(2.0), grid);
  return BehaviorManifold(std::move(centroids), std::move(chart));
}

Projection project_to_manifold(const ActivationManifold& manifold, const Vec& ambient_point) {
  return manifold.project_ambient(ambient_point);
}

Projection project_to_manifold(const BehaviorManifold& manifold, const BehaviorDistribution& p) {
  return manifold.project(p.probabilities().cwiseSqrt());
}

}  // namespace geosteer
