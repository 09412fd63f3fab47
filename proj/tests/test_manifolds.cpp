#include "geosteer/manifolds.hpp"
#include "geosteer/surrogate.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace geosteer;

namespace {

SyntheticDataset cyclic7() {
  SurrogateParams p;
  p.samples_per_label = 10;
  return embed_ground_truth(make_concept_space(Structure::cyclic, {7}), p);
}

}  // namespace

TEST_CASE("activation manifold passes through every centroid") {
  const auto data = cyclic7();
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space);
  CHECK(mh.pca().dims() == 64);
  for (std::size_t i = 0; i < data.space.size(); ++i) {
    CHECK((mh.decode(mh.space().coord(i)) - mh.centroids().row(static_cast<Eigen::Index>(i)).transpose()).norm() <
          1e-8);
  }
  // Centroids are the projected label means.
  const Mat means = label_means(data.activations, data.space);
  for (Eigen::Index i = 0; i < means.rows(); ++i) {
    CHECK((mh.pca().project(means.row(i).transpose()) - mh.centroids().row(i).transpose()).norm() < 1e-9);
  }
}

TEST_CASE("pca of wide activations keeps the manifold in the subspace") {
  SurrogateParams p;
  p.ambient_dim = 4096;
  p.samples_per_label = 12;
  const auto data = embed_ground_truth(make_concept_space(Structure::cyclic, {7}), p);
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space);
  CHECK(mh.pca().components.rows() == 4096);
  CHECK(mh.pca().dims() == 64);
  const Vec on = mh.decode_ambient(Coord(1.3, 0.0));
  CHECK(mh.pca().residual(on).norm() < 1e-9);
  // A vector orthogonal to the subspace survives projection unchanged.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  Vec g(4096);
  for (auto& x : g) x = n(rng);
  const Vec perp = g - mh.pca().components * (mh.pca().components.transpose() * g);
  const Vec moved = on + perp;
  CHECK((mh.pca().residual(moved) - perp).norm() < 1e-9);
  CHECK(mh.project_ambient(moved).distance >= perp.norm() - 1e-9);
}

TEST_CASE("projection of on-manifold points is exact") {
  const auto data = cyclic7();
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space);
  for (double u : {0.0, 0.37, 2.5, 4.91, 6.99}) {
    const Vec z = mh.decode(Coord(u, 0.0));
    const Projection pr = mh.project_subspace(z);
    CHECK(pr.distance < 1e-6);
    CHECK((pr.foot - z).norm() < 1e-6);
  }
}

TEST_CASE("projection distance is never larger than the distance to any sample") {
  const auto data = cyclic7();
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    Vec z = mh.decode(Coord(0.35 * trial, 0.0));
    for (auto& x : z) x += 0.3 * n(rng);
    const Projection pr = mh.project_subspace(z);
    const Mat& s = mh.chart().samples();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < s.rows(); ++r) best = std::min(best, (s.row(r).transpose() - z).norm());
    CHECK(pr.distance <= best + 1e-12);
    CHECK((mh.decode(pr.u) - pr.foot).norm() < 1e-12);
  }
}

TEST_CASE("geodesic length converges with the step count") {
  const auto data = cyclic7();
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space);
  const double d150 = mh.geodesic_distance(Coord(0.0, 0.0), Coord(3.0, 0.0), 150);
  const double d600 = mh.geodesic_distance(Coord(0.0, 0.0), Coord(3.0, 0.0), 600);
  CHECK(std::abs(d150 - d600) / d600 < 1e-3);
  CHECK(d150 <= d600);
  CHECK(mh.geodesic_distance(Coord(2.0, 0.0), Coord(2.0, 0.0)) == 0.0);
  // Chord never exceeds arc length.
  const double chord = (mh.decode(Coord(0.0, 0.0)) - mh.decode(Coord(3.0, 0.0))).norm();
  CHECK(chord <= d150 + 1e-12);
}

TEST_CASE("behavior manifold passes through every square-root centroid") {
  const auto data = cyclic7();
  const BehaviorManifold my = fit_behavior_manifold(data.distributions, data.space);
  CHECK(my.base_point().norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(my.base_point().minCoeff() >= 0.0);
  for (std::size_t i = 0; i < data.space.size(); ++i) {
    const Vec b = my.centroids().row(static_cast<Eigen::Index>(i)).transpose();
    CHECK((my.decode(my.space().coord(i)) - b.cwiseSqrt()).norm() < 1e-8);
  }
  for (double u = 0.0; u < 7.0; u += 0.29) {
    const Vec x = my.decode(Coord(u, 0.0));
    CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x.minCoeff() >= 0.0);
  }
}

TEST_CASE("behavior geodesic length is in hellinger units") {
  const auto data = cyclic7();
  const BehaviorManifold my = fit_behavior_manifold(data.distributions, data.space);
  const double d = my.geodesic_distance(Coord(0.0, 0.0), Coord(1.0, 0.0), 600);
  const auto p = my.decode_distribution(Coord(0.0, 0.0));
  const auto q = my.decode_distribution(Coord(1.0, 0.0));
  CHECK(d >= hellinger_distance(p, q) - 1e-12);
  // Arcs between distributions with disjoint support reach pi / (2 sqrt 2).
  CHECK(d <= std::numbers::pi / (2.0 * std::sqrt(2.0)));
  CHECK(my.hellinger_distance_to(p) < 1e-6);
}

TEST_CASE("label means list every missing label") {
  const auto data = cyclic7();
  LabeledSamples partial;
  for (std::size_t i = 0; i < data.activations.size(); ++i) {
    if (data.activations.labels[i] == "Tue" || data.activations.labels[i] == "Sat") continue;
    partial.labels.push_back(data.activations.labels[i]);
  }
  partial.data = Mat::Zero(static_cast<Eigen::Index>(partial.labels.size()), 3);
  try {
    label_means(partial, data.space);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Tue") != std::string::npos);
    CHECK(msg.find("Sat") != std::string::npos);
  }
}

TEST_CASE("cyclic coordinates derived from the principal plane") {
  Mat c(6, 3);
  for (int i = 0; i < 6; ++i) c.row(i) << std::cos(1.0 * i), std::sin(1.0 * i), 0.1;
  const Vec a = derive_cyclic_coordinate(c);
  for (int i = 0; i < 6; ++i) CHECK(std::remainder(a(i) - 1.0 * i, 2.0 * std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-12));
  c.row(2) << 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(derive_cyclic_coordinate(c), DegenerateCoordinate);

  Vec raw(6);
  raw << 0.2, 1.1, 2.9, -2.5, -1.0, 7.0;
  const ConceptSpace s = with_cyclic_angles(make_concept_space(Structure::cyclic, {6}), raw);
  CHECK(s.period(0) == doctest::Approx(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.coord(i).x() >= 0.0);
    CHECK(s.coord(i).x() < 2.0 * std::numbers::pi);
    CHECK(std::remainder(s.coord(i).x() - raw(static_cast<Eigen::Index>(i)), 2.0 * std::numbers::pi) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("derived angles on the surrogate keep the weekday order") {
  const auto data = cyclic7();
  ActivationFitOptions opts;
  opts.derive_cyclic_coordinates = true;
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space, opts);
  CHECK(mh.space().period(0) == doctest::Approx(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK((mh.decode(mh.space().coord(i)) - mh.centroids().row(static_cast<Eigen::Index>(i)).transpose()).norm() <
          1e-8);
  }
}

TEST_CASE("grid and cylinder manifolds interpolate their centroids") {
  SurrogateParams p;
  p.samples_per_label = 3;
  for (auto [kind, n] : {std::pair{Structure::grid, 5}, std::pair{Structure::cylinder, 6}}) {
    const auto data = embed_ground_truth(make_concept_space(kind, {n, n}), p);
    const ActivationManifold mh = fit_activation_manifold(data.activations, data.space);
    const BehaviorManifold my = fit_behavior_manifold(data.distributions, data.space);
    for (std::size_t i = 0; i < data.space.size(); ++i) {
      const Coord u = data.space.coord(i);
      CHECK((mh.decode(u) - mh.centroids().row(static_cast<Eigen::Index>(i)).transpose()).norm() < 1e-8);
      CHECK((my.decode(u) - my.centroids().row(static_cast<Eigen::Index>(i)).transpose().cwiseSqrt()).norm() < 1e-8);
    }
    if (kind == Structure::cylinder) {
      CHECK((mh.decode(Coord(0.4, 2.0)) - mh.decode(Coord(0.4 + n, 2.0))).norm() < 1e-8);
    }
  }
}

TEST_CASE("sequential smoothing trades exactness for smoothness") {
  SurrogateParams p;
  p.samples_per_label = 5;
  const auto data = embed_ground_truth(make_concept_space(Structure::sequential, {10}), p);
  ActivationFitOptions opts;
  opts.pca_dim = 16;
  opts.smoothing = 5.0;
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space, opts);
  double gap = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    gap = std::max(gap, (mh.decode(mh.space().coord(i)) - mh.centroids().row(static_cast<Eigen::Index>(i)).transpose()).norm());
  }
  CHECK(gap > 1e-6);
  CHECK(std::holds_alternative<CubicSpline>(mh.chart().parameterization()));
  CHECK(std::get<CubicSpline>(mh.chart().parameterization()).smoothing() == 5.0);
}
