#include "geosteer/surrogate.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <random>

namespace geosteer {

namespace {

const std::vector<std::string> kWeekdays{"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};

std::string padded(int v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

int digits(int n) { return static_cast<int>(std::to_string(std::max(n - 1, 0)).size()); }

int layout_dim(Structure) { return 4; }

// Radius of a circle on which consecutive points `angle` apart are `chord` apart.
double radius_for(double chord, double angle) { return chord / (2.0 * std::sin(0.5 * angle)); }

}  // namespace

ConceptSpace make_concept_space(Structure kind, std::vector<int> sizes, double period) {
  if (period < 0.0 || !std::isfinite(period)) throw std::invalid_argument("make_concept_space: invalid period");
  const bool two_d = kind == Structure::grid || kind == Structure::cylinder;
  if (sizes.size() != (two_d ? 2u : 1u)) {
    throw std::invalid_argument(std::string("make_concept_space: ") + to_string(kind) + " needs " +
                                (two_d ? "two sizes" : "one size"));
  }
  const int min_size = kind == Structure::cyclic || kind == Structure::sequential ? 3 : 2;
  for (int s : sizes) {
    if (s < min_size) throw std::invalid_argument("make_concept_space: sizes must be >= " + std::to_string(min_size));
  }
  if (kind == Structure::grid && sizes[0] * sizes[1] < 4) {
    throw std::invalid_argument("make_concept_space: grid needs at least 4 nodes");
  }

  std::vector<std::string> labels;
  if (!two_d) {
    const int n = sizes[0];
    Mat coords(n, 1);
    Eigen::MatrixXi pos(n, 1);
    double p = 0.0;
    double unit = 1.0;
    if (kind == Structure::cyclic) {
      p = period > 0.0 ? period : static_cast<double>(n);
      unit = p / n;
    }
    for (int i = 0; i < n; ++i) {
      if (kind == Structure::cyclic && n == 7) labels.push_back(kWeekdays[static_cast<std::size_t>(i)]);
      else labels.push_back((kind == Structure::cyclic ? "c" : "s") + padded(i, digits(n)));
      coords(i, 0) = i * unit;
      pos(i, 0) = i;
    }
    return ConceptSpace(kind, std::move(labels), std::move(coords), {p, 0.0}, std::move(pos), {n, 0});
  }

  const int rows = sizes[0];
  const int cols = sizes[1];
  const int n = rows * cols;
  Mat coords(n, 2);
  Eigen::MatrixXi pos(n, 2);
  double p = 0.0;
  double unit = 1.0;
  if (kind == Structure::cylinder) {
    p = period > 0.0 ? period : static_cast<double>(rows);
    unit = p / rows;
  }
  int idx = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c, ++idx) {
      labels.push_back((kind == Structure::cylinder ? "t" : "r") + padded(r, digits(rows)) +
                       (kind == Structure::cylinder ? "z" : "c") + padded(c, digits(cols)));
      coords(idx, 0) = r * unit;
      coords(idx, 1) = c;
      pos(idx, 0) = r;
      pos(idx, 1) = c;
    }
  }
  return ConceptSpace(kind, std::move(labels), std::move(coords), {p, 0.0}, std::move(pos), {rows, cols});
}

// ---------------------------------------------------------------------------
// Softmax-distance map
// ---------------------------------------------------------------------------

SoftmaxDistanceMap::SoftmaxDistanceMap(Mat centroids, double temperature, double other_floor)
    : centroids_(std::move(centroids)), temperature_(temperature), other_floor_(other_floor) {
  if (centroids_.rows() < 1 || centroids_.cols() < 1) throw std::invalid_argument("SoftmaxDistanceMap: no centroids");
  if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
    throw std::invalid_argument("SoftmaxDistanceMap: temperature must be positive");
  }
  if (!(other_floor_ > 0.0)) throw std::invalid_argument("SoftmaxDistanceMap: other_floor must be positive");
}

Vec SoftmaxDistanceMap::effective(const Vec& h, const BaseInput& base) const {
  if (h.size() != centroids_.cols()) throw std::invalid_argument("SoftmaxDistanceMap: dimension mismatch");
  if (!h.allFinite()) throw std::invalid_argument("SoftmaxDistanceMap: non-finite activation");
  if (base.context.size() == 0) return h;
  if (base.context.size() != h.size()) throw std::invalid_argument("SoftmaxDistanceMap: context dimension mismatch");
  return h + base.context;
}

BehaviorDistribution SoftmaxDistanceMap::evaluate(const Vec& h, const BaseInput& base) const {
  const Vec x = effective(h, base);
  const Eigen::Index B = centroids_.rows();
  Vec z(B);
  for (Eigen::Index b = 0; b < B; ++b) z(b) = -(x - centroids_.row(b).transpose()).norm() / temperature_;
  const Vec e = (z.array() - z.maxCoeff()).exp();
  const double norm = 1.0 + other_floor_;
  Vec p(B + 1);
  p.head(B) = e / (e.sum() * norm);
  p(B) = other_floor_ / norm;
  // Far tails underflow to zero; keep the distribution in the open simplex.
  return BehaviorDistribution::clipped(std::move(p), 1e-300);
}

std::optional<Mat> SoftmaxDistanceMap::jacobian(const Vec& h, const BaseInput& base) const {
  return jacobian_checked(h, base, nullptr);
}

Mat SoftmaxDistanceMap::jacobian_checked(const Vec& h, const BaseInput& base, Diagnostics* diag) const {
  Vec x = effective(h, base);
  const Eigen::Index B = centroids_.rows();
  const Eigen::Index n = x.size();
  Mat diff(B, n);
  Vec dist(B);
  for (int attempt = 0; attempt < 2; ++attempt) {
    for (Eigen::Index b = 0; b < B; ++b) {
      diff.row(b) = x.transpose() - centroids_.row(b);
      dist(b) = diff.row(b).norm();
    }
    if (dist.minCoeff() > 0.0) break;
    warn_if(diag, "activation sits on a centroid; perturbed by 1e-9 for the Jacobian");
    x(0) += 1e-9;
  }
  const Vec z = -dist / temperature_;
  Vec s = (z.array() - z.maxCoeff()).exp();
  s /= s.sum();
  // dz_b/dx = -(x - mu_b)^T / (tau d_b)
  Mat grad_z(B, n);
  for (Eigen::Index b = 0; b < B; ++b) grad_z.row(b) = -diff.row(b) / (temperature_ * dist(b));
  const Vec sg = grad_z.transpose() * s;  // sum_c s_c dz_c/dx
  Mat jac = Mat::Zero(B + 1, n);
  const double norm = 1.0 + other_floor_;
  for (Eigen::Index b = 0; b < B; ++b) jac.row(b) = s(b) * (grad_z.row(b) - sg.transpose()) / norm;
  return jac;
}

// ---------------------------------------------------------------------------
// Synthetic datasets
// ---------------------------------------------------------------------------

void SurrogateParams::validate() const {
  if (ambient_dim < 2) throw std::invalid_argument("surrogate: ambient_dim must be >= 2");
  if (!(spacing > 0.0)) throw std::invalid_argument("surrogate: spacing must be positive");
  if (!(sequential_bend > 0.0) || !(sheet_step_angle > 0.0) || !(tube_step_angle > 0.0)) {
    throw std::invalid_argument("surrogate: curvature parameters must be positive");
  }
  if (!(sequential_coil >= 0.0 && sequential_coil < std::numbers::pi)) {
    throw std::invalid_argument("surrogate: sequential_coil must lie in [0, pi)");
  }
  if (cyclic_harmonic < 0.0) throw std::invalid_argument("surrogate: cyclic_harmonic must be non-negative");
  if (noise_sigma < 0.0) throw std::invalid_argument("surrogate: noise_sigma must be non-negative");
  if (samples_per_label < 1) throw std::invalid_argument("surrogate: samples_per_label must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("surrogate: temperature must be positive");
  if (!(other_floor > 0.0)) throw std::invalid_argument("surrogate: other_floor must be positive");
}

Mat ground_truth_layout(const ConceptSpace& space, const SurrogateParams& params) {
  const auto n = static_cast<Eigen::Index>(space.size());
  Mat layout = Mat::Zero(n, layout_dim(space.structure()));
  const Eigen::MatrixXi& pos = space.positions();
  const double two_pi = 2.0 * std::numbers::pi;
  switch (space.structure()) {
    case Structure::cyclic: {
      // (r cos t, r sin t, h r cos 2t, h r sin 2t) with adjacent centres `spacing` apart.
      const double step = two_pi / space.extents()[0];
      const double h = params.cyclic_harmonic;
      const double a = 2.0 * std::sin(0.5 * step);
      const double b = 2.0 * h * std::sin(step);
      const double r = params.spacing / std::sqrt(a * a + b * b);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = pos(i, 0) * step;
        layout(i, 0) = r * std::cos(t);
        layout(i, 1) = r * std::sin(t);
        layout(i, 2) = h * r * std::cos(2.0 * t);
        layout(i, 3) = h * r * std::sin(2.0 * t);
      }
      break;
    }
    case Structure::sequential: {
      // Arc in the first plane with a coil wound around it in the second. Both
      // contribute equal chords, so adjacent centres stay `spacing` apart.
      const double step = params.sequential_bend / static_cast<double>(std::max(space.extents()[0] - 1, 1));
      const double turn = params.sequential_coil;
      const double r = turn > 0.0 ? radius_for(params.spacing / std::sqrt(2.0), step) : radius_for(params.spacing, step);
      const double w = turn > 0.0 ? r * std::sin(0.5 * step) / std::sin(0.5 * turn) : 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        layout(i, 0) = r * std::cos(pos(i, 0) * step);
        layout(i, 1) = r * std::sin(pos(i, 0) * step);
        layout(i, 2) = w * std::cos(pos(i, 0) * turn);
        layout(i, 3) = w * std::sin(pos(i, 0) * turn);
      }
      break;
    }
    case Structure::grid:
    case Structure::cylinder: {
      const bool tube = space.structure() == Structure::cylinder;
      const double step0 = tube ? two_pi / space.extents()[0] : params.sheet_step_angle;
      const double step1 = tube ? params.tube_step_angle : params.sheet_step_angle;
      const double r0 = radius_for(params.spacing, step0);
      const double r1 = radius_for(params.spacing, step1);
      for (Eigen::Index i = 0; i < n; ++i) {
        layout(i, 0) = r0 * std::cos(pos(i, 0) * step0);
        layout(i, 1) = r0 * std::sin(pos(i, 0) * step0);
        layout(i, 2) = r1 * std::cos(pos(i, 1) * step1);
        layout(i, 3) = r1 * std::sin(pos(i, 1) * step1);
      }
      break;
    }
  }
  return layout;
}

SyntheticDataset embed_ground_truth(const ConceptSpace& space, const SurrogateParams& params) {
  params.validate();
  const int m = layout_dim(space.structure());
  if (params.ambient_dim < m + 1) {
    throw std::invalid_argument("surrogate: ambient_dim must be >= " + std::to_string(m + 1));
  }
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Mat gauss(params.ambient_dim, m);
  for (Eigen::Index j = 0; j < gauss.cols(); ++j) {
    for (Eigen::Index i = 0; i < gauss.rows(); ++i) gauss(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Mat> qr(gauss);
  const Mat frame = qr.householderQ() * Mat::Identity(params.ambient_dim, m);

  SyntheticDataset ds;
  ds.space = space;
  ds.params = params;
  ds.frame = frame;
  ds.centers = ground_truth_layout(space, params) * frame.transpose();

  const auto n_labels = static_cast<Eigen::Index>(space.size());
  const Eigen::Index total = n_labels * params.samples_per_label;
  ds.activations.data.resize(total, params.ambient_dim);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < n_labels; ++i) {
    for (int s = 0; s < params.samples_per_label; ++s, ++row) {
      Vec x = ds.centers.row(i).transpose();
      if (params.noise_sigma > 0.0) {
        for (Eigen::Index d = 0; d < x.size(); ++d) x(d) += params.noise_sigma * normal(rng);
      }
      ds.activations.data.row(row) = x.transpose();
      ds.activations.labels.push_back(space.labels()[static_cast<std::size_t>(i)]);
    }
  }

  const SoftmaxDistanceMap map = ds.behavior_map();
  ds.distributions.labels = ds.activations.labels;
  ds.distributions.data.resize(total, map.classes());
  for (Eigen::Index r = 0; r < total; ++r) {
    ds.distributions.data.row(r) = map.evaluate(Vec(ds.activations.data.row(r).transpose())).probabilities().transpose();
  }
  return ds;
}

std::vector<BaseInput> make_base_inputs(const Mat& frame, int count, double sigma, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("make_base_inputs: count must be >= 1");
  if (sigma < 0.0) throw std::invalid_argument("make_base_inputs: sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<BaseInput> out;
  for (int c = 0; c < count; ++c) {
    Vec g(frame.rows());
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
    g -= frame * (frame.transpose() * g);
    out.push_back(BaseInput{sigma * g});
  }
  return out;
}

}  // namespace geosteer
