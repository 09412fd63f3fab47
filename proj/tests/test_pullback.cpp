#include "geosteer/pullback.hpp"
#include "geosteer/surrogate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace geosteer;

namespace {

struct Fixture {
  SyntheticDataset data;
  ActivationManifold mh;
  BehaviorManifold my;
  SoftmaxDistanceMap map;
  std::vector<BaseInput> bases;

  Fixture() {
    SurrogateParams p;
    p.samples_per_label = 20;
    data = embed_ground_truth(make_concept_space(Structure::cyclic, {7}), p);
    mh = fit_activation_manifold(data.activations, data.space);
    my = fit_behavior_manifold(data.distributions, data.space);
    map = data.behavior_map();
    bases = make_base_inputs(data.frame, 16, 0.01, 1);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

BehaviorDistribution random_distribution(std::mt19937_64& rng, int n) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Vec w(n);
  for (int i = 0; i < n; ++i) w(i) = g(rng) + 1e-3;
  return BehaviorDistribution(w / w.sum());
}

}  // namespace

TEST_CASE("pullback config defaults") {
  const PullbackConfig c;
  CHECK(c.control_points == 10);
  CHECK(c.waypoints == 20);
  CHECK(c.subspace_dims == 32);
  CHECK(c.optimizer.max_outer_steps == 50);
  CHECK(c.optimizer.max_inner_iterations == 5);
  CHECK(c.optimizer.relative_loss_tolerance == 1e-3);
  CHECK(c.norm_reg_weight == 0.0);
  CHECK_NOTHROW(c.validate(64));
  CHECK_THROWS_AS(c.validate(16), std::invalid_argument);
  PullbackConfig age = c;
  age.norm_reg_weight = 1e-3;
  CHECK_NOTHROW(age.validate(64));
  age.norm_reg_weight = 5e-4;
  CHECK_NOTHROW(age.validate(64));
}

TEST_CASE("behavior target samples the manifold at K+1 fractions") {
  const Fixture& f = fixture();
  const auto target = behavior_target(f.my, "Mon", "Thu");
  CHECK(target.size() == 21);
  for (const auto& p : target) CHECK(f.my.hellinger_distance_to(p) < 1e-6);
  const Vec first = f.my.centroids().row(0).transpose();
  CHECK((target.front().probabilities() - first).norm() < 1e-8);
}

TEST_CASE("hellinger geodesic is a constant-speed great circle") {
  std::mt19937_64 rng(31);
  const auto a = random_distribution(rng, 6), b = random_distribution(rng, 6);
  const auto g = hellinger_geodesic(a, b, 10);
  CHECK(g.size() == 11);
  CHECK((g.front().probabilities() - a.probabilities()).norm() == 0.0);
  CHECK((g.back().probabilities() - b.probabilities()).norm() == 0.0);
  const double total = std::acos(hellinger_embed(a).coords().dot(hellinger_embed(b).coords()));
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const double step = std::acos(std::min(1.0, hellinger_embed(g[k]).coords().dot(hellinger_embed(g[k + 1]).coords())));
    CHECK(step == doctest::Approx(total / 10.0).epsilon(1e-8));
  }
}

TEST_CASE("conformal target at alpha zero is the hellinger geodesic") {
  const Fixture& f = fixture();
  const auto pa = f.my.decode_distribution(Coord(0.0, 0.0));
  const auto pb = f.my.decode_distribution(Coord(3.0, 0.0));
  const ConformalTarget t = conformal_target(pa, pb, f.my, 0.0);
  const auto g = hellinger_geodesic(pa, pb, 30);
  REQUIRE(t.points.size() == g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK((hellinger_embed(t.points[k]).coords() - hellinger_embed(g[k]).coords()).norm() < 1e-6);
  }
}

TEST_CASE("conformal length reduces to hellinger arc length at alpha zero") {
  const Fixture& f = fixture();
  std::mt19937_64 rng(32);
  const auto a = random_distribution(rng, 8), b = random_distribution(rng, 8);
  std::vector<Vec> pts;
  for (const auto& p : hellinger_geodesic(a, b, 12)) pts.push_back(hellinger_embed(p).coords());
  const double arc = std::acos(hellinger_embed(a).coords().dot(hellinger_embed(b).coords())) / std::sqrt(2.0);
  CHECK(conformal_length(pts, f.my, 0.0) == doctest::Approx(arc).epsilon(1e-10));
  CHECK(conformal_length(pts, f.my, 2.0) >= conformal_length(pts, f.my, 0.0));
}

TEST_CASE("conformal target is pulled toward the behavior manifold") {
  const Fixture& f = fixture();
  const auto pa = f.my.decode_distribution(Coord(0.0, 0.0));
  const auto pb = f.my.decode_distribution(Coord(2.0, 0.0));
  const ConformalTarget loose = conformal_target(pa, pb, f.my, 0.0);
  const ConformalTarget tight = conformal_target(pa, pb, f.my, 20.0);
  double worst_loose = 0.0, worst_tight = 0.0;
  for (std::size_t k = 1; k + 1 < loose.points.size(); ++k) {
    worst_loose = std::max(worst_loose, f.my.hellinger_distance_to(loose.points[k]));
    worst_tight = std::max(worst_tight, f.my.hellinger_distance_to(tight.points[k]));
  }
  CHECK(worst_tight < worst_loose);
  for (std::size_t k = 1; k < tight.cost_history.size(); ++k) {
    CHECK(tight.cost_history[k] <= tight.cost_history[k - 1] + 1e-13 * std::abs(tight.cost_history[k - 1]));
  }
  CHECK((tight.points.front().probabilities() - pa.probabilities()).norm() == 0.0);
  CHECK((tight.points.back().probabilities() - pb.probabilities()).norm() == 0.0);
}

TEST_CASE("chord controls reproduce the chord") {
  const Fixture& f = fixture();
  const PullbackPath path(f.mh, "Mon", "Thu", 10, 20, 32);
  const auto pts = path.waypoints(path.chord_controls());
  REQUIRE(pts.size() == 21);
  for (int k = 0; k <= 20; ++k) CHECK((pts[static_cast<std::size_t>(k)] - path.chord_point(k / 20.0)).norm() < 1e-10);
  // Spline weights form a partition of unity.
  for (Eigen::Index k = 0; k < path.weights().rows(); ++k) CHECK(path.weights().row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("controls through a curve interpolate it at the control fractions") {
  const Fixture& f = fixture();
  const PullbackPath path(f.mh, "Mon", "Thu", 10, 27, 32);
  const auto fr = path.control_fractions();
  REQUIRE(fr.size() == 10);
  std::vector<Vec> curve;
  for (double t : fr) curve.push_back(f.mh.decode_ambient(f.mh.space().interpolate(Coord(0, 0), Coord(3, 0), t)));
  const auto pts = path.waypoints(path.controls_through(curve));
  // With 27 = 3 x 9 segments every third waypoint is a control fraction.
  for (std::size_t j = 0; j < fr.size(); ++j) {
    const Vec& w = pts[j * 3];
    const Vec inside = path.basis() * (path.basis().transpose() * (curve[j] - path.chord_point(fr[j])));
    CHECK((w - path.chord_point(fr[j]) - inside).norm() < 1e-9);
  }
}

TEST_CASE("intrinsic r2 basics") {
  std::vector<Vec> ref;
  for (int k = 0; k <= 20; ++k) {
    Vec v(3);
    v << std::cos(0.1 * k), std::sin(0.1 * k), 0.0;
    ref.push_back(v);
  }
  const SteeringPath r = make_path(ref, Strategy::manifold);
  CHECK(intrinsic_r2(r, r) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<Vec> shifted = ref;
  for (auto& v : shifted) v(0) += 0.05;
  CHECK(intrinsic_r2(make_path(shifted, Strategy::custom), r) < 1.0);
  const SteeringPath flat = make_path(std::vector<Vec>(5, Vec::Ones(3)), Strategy::custom);
  CHECK_THROWS_AS(intrinsic_r2(r, flat), UndefinedR2);
}

TEST_CASE("intrinsic r2 measures distance to the reference polyline, not to its waypoints") {
  // Candidate waypoints fall between reference waypoints on the same segment.
  std::vector<Vec> ref{Vec::Zero(2), Vec::Unit(2, 0), Vec(Vec::Unit(2, 0) + Vec::Unit(2, 1))};
  std::vector<Vec> cand{Vec::Zero(2), Vec(0.5 * Vec::Unit(2, 0)), Vec::Unit(2, 0), Vec(Vec::Unit(2, 0) + 0.5 * Vec::Unit(2, 1)),
                        Vec(Vec::Unit(2, 0) + Vec::Unit(2, 1))};
  const Mat basis = Mat::Identity(2, 2);
  CHECK(intrinsic_r2_in_basis(make_path(cand, Strategy::custom), make_path(ref, Strategy::manifold), basis,
                              Vec::Zero(2)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("plant-and-recover on one pair") {
  const Fixture& f = fixture();
  const PullbackConfig cfg;
  const PullbackPath path(f.mh, "Mon", "Thu", cfg.control_points, cfg.waypoints, cfg.subspace_dims);
  std::vector<Vec> planted;
  for (double t : path.control_fractions()) {
    planted.push_back(f.mh.decode_ambient(f.mh.space().interpolate(Coord(0, 0), Coord(3, 0), t)));
  }
  const auto pts = path.waypoints(path.controls_through(planted));
  const auto traj = induce_trajectory(f.map, make_path(pts, Strategy::custom), f.bases);
  const PullbackResult r = optimize_pullback(f.map, traj.points, f.bases, f.mh, "Mon", "Thu", cfg);
  CHECK(r.final_loss < 1e-6);
  CHECK(r.final_loss <= r.initial_loss);
  CHECK(r.r2_vs_manifold > r.r2_linear_baseline);
  CHECK(r.path.size() == 21);
  for (std::size_t k = 1; k < r.loss_history.size(); ++k) {
    CHECK(r.loss_history[k] <= r.loss_history[k - 1] + 1e-13 * std::abs(r.loss_history[k - 1]));
  }
  const SteeringPath chord = linear_path(f.mh.decode_ambient(Coord(0, 0)), f.mh.decode_ambient(Coord(3, 0)), 20);
  const SteeringPath man = manifold_path(f.mh, "Mon", "Thu", 20);
  const double dc = mean_manifold_distance(chord, f.mh);
  const double dp = mean_manifold_distance(r.path, f.mh);
  const double dm = mean_manifold_distance(man, f.mh);
  CHECK(dc > dp);
  CHECK(dp >= dm);
}

TEST_CASE("mean manifold distance of an antipodal chord against dense projection") {
  SurrogateParams p;
  p.cyclic_harmonic = 0.0;
  p.noise_sigma = 0.0;
  p.samples_per_label = 2;
  p.ambient_dim = 16;
  const auto data = embed_ground_truth(make_concept_space(Structure::cyclic, {24}), p);
  ActivationFitOptions opts;
  opts.pca_dim = 8;
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space, opts);
  const SteeringPath chord = linear_path(mh.decode_ambient(Coord(0, 0)), mh.decode_ambient(Coord(12, 0)), 20);
  // Ten times the projection grid density.
  const int n = 10 * 512;
  std::vector<Vec> curve;
  for (int i = 0; i < n; ++i) curve.push_back(mh.decode_ambient(Coord(24.0 * i / n, 0)));
  double oracle = 0.0;
  for (const auto& w : chord.waypoints) {
    double best = 1e300;
    for (const auto& q : curve) best = std::min(best, (q - w).norm());
    oracle += best;
  }
  oracle /= static_cast<double>(chord.size());
  CHECK(mean_manifold_distance(chord, mh) == doctest::Approx(oracle).epsilon(1e-4));
  CHECK(mean_manifold_distance(chord, mh) <= oracle + 1e-9);
}

TEST_CASE("pullback rejects a target of the wrong length") {
  const Fixture& f = fixture();
  const auto target = behavior_target(f.my, "Mon", "Tue", 10);
  CHECK_THROWS_AS(optimize_pullback(f.map, target, f.bases, f.mh, "Mon", "Tue"), std::invalid_argument);
}
