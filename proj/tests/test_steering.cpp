#include "geosteer/steering.hpp"
#include "geosteer/surrogate.hpp"

#include <doctest.h>

#include <cmath>

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
    p.samples_per_label = 10;
    data = embed_ground_truth(make_concept_space(Structure::cyclic, {7}), p);
    mh = fit_activation_manifold(data.activations, data.space);
    my = fit_behavior_manifold(data.distributions, data.space);
    map = data.behavior_map();
    bases = make_base_inputs(data.frame, 4, 0.01, 1);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

// Map without an analytic Jacobian.
class BlindMap : public BehaviorMap {
public:
  explicit BlindMap(const SoftmaxDistanceMap& inner) : inner_(inner) {}
  BehaviorDistribution evaluate(const Vec& h, const BaseInput& b) const override { return inner_.evaluate(h, b); }
  int ambient_dim() const override { return inner_.ambient_dim(); }
  int classes() const override { return inner_.classes(); }

private:
  const SoftmaxDistanceMap& inner_;
};

class FailingMap : public BehaviorMap {
public:
  BehaviorDistribution evaluate(const Vec& h, const BaseInput&) const override {
    if (h(0) > 0.5) throw std::runtime_error("out of range");
    return BehaviorDistribution(Vec::Constant(2, 0.5));
  }
  int ambient_dim() const override { return 1; }
  int classes() const override { return 2; }
};

}  // namespace

TEST_CASE("default waypoint count is 50") {
  const SteeringPath p = linear_path(Vec::Zero(3), Vec::Ones(3));
  CHECK(p.size() == 51);
  CHECK(p.segments() == 50);
  CHECK(p.t_values.front() == 0.0);
  CHECK(p.t_values.back() == 1.0);
}

TEST_CASE("linear path hits its endpoints exactly and is evenly spaced") {
  Vec a(2), b(2);
  a << 0.1, -3.0;
  b << 7.3, 2.2;
  const SteeringPath p = linear_path(a, b, 8);
  CHECK((p.waypoints.front() - a).norm() == 0.0);
  CHECK((p.waypoints.back() - b).norm() == 0.0);
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    CHECK((p.waypoints[k + 1] - p.waypoints[k]).norm() == doctest::Approx((b - a).norm() / 8.0).epsilon(1e-12));
  }
  CHECK(p.strategy == Strategy::linear);
  CHECK_THROWS_AS(linear_path(a, b, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_path({a}, Strategy::custom), std::invalid_argument);
}

TEST_CASE("manifold path stays on the activation manifold") {
  const Fixture& f = fixture();
  const SteeringPath p = manifold_path(f.mh, "Tue", "Fri", 20);
  CHECK(p.strategy == Strategy::manifold);
  CHECK((p.waypoints.front() - f.mh.decode_ambient(f.mh.space().coord(1))).norm() < 1e-12);
  CHECK((p.waypoints.back() - f.mh.decode_ambient(f.mh.space().coord(4))).norm() < 1e-12);
  for (const auto& w : p.waypoints) CHECK(f.mh.project_ambient(w).distance < 1e-6);
}

TEST_CASE("identical endpoints give K+1 copies of the stationary energy") {
  const Fixture& f = fixture();
  const Vec h = f.mh.decode_ambient(Coord(2.0, 0.0)) + 0.5 * f.data.frame.col(0);
  const SteeringPath p = linear_path(h, h, 50);
  const BehaviorTrajectory traj = induce_trajectory(f.map, p, f.bases);
  Vec mean = Vec::Zero(f.map.classes());
  for (const auto& b : f.bases) mean += f.map.evaluate(h, b).probabilities();
  mean /= static_cast<double>(f.bases.size());
  const double d = f.my.hellinger_distance_to(BehaviorDistribution(mean));
  CHECK(cumulative_energy(traj, f.my) == doctest::Approx(51.0 * -std::log(1.0 - d * d)).epsilon(1e-12));
  MetricSpec flat;
  CHECK(path_length(p, flat) < 1e-12);
}

TEST_CASE("induced trajectory averages over base inputs") {
  const Fixture& f = fixture();
  const SteeringPath p = manifold_path(f.mh, "Mon", "Wed", 4);
  const BehaviorTrajectory traj = induce_trajectory(f.map, p, f.bases);
  CHECK(traj.size() == 5);
  CHECK(traj.base_count == 4);
  Vec mean = Vec::Zero(f.map.classes());
  for (const auto& b : f.bases) mean += f.map.evaluate(p.waypoints[2], b).probabilities();
  CHECK((traj.points[2].probabilities() - mean / 4.0).norm() < 1e-15);
  CHECK_THROWS_AS(induce_trajectory(f.map, p, {}), std::invalid_argument);
}

TEST_CASE("map failures name the waypoint") {
  const FailingMap map;
  std::vector<Vec> pts;
  for (double x : {0.0, 0.25, 0.75}) pts.push_back(Vec::Constant(1, x));
  try {
    induce_trajectory(map, make_path(pts, Strategy::custom), {BaseInput{}});
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("waypoint 2") != std::string::npos);
  }
}

TEST_CASE("energy is zero along the behavior manifold itself") {
  const Fixture& f = fixture();
  BehaviorTrajectory traj;
  for (int k = 0; k <= 10; ++k) traj.points.push_back(f.my.decode_distribution(Coord(0.3 * k, 0.0)));
  for (double e : waypoint_energies(traj, f.my)) CHECK(e < 1e-10);
}

TEST_CASE("off-adjacent gain on a hand-built trajectory") {
  const ConceptSpace s = make_concept_space(Structure::cyclic, {7});
  auto dist = [](std::vector<double> w) {
    Vec v(8);
    for (int i = 0; i < 8; ++i) v(i) = w[static_cast<std::size_t>(i)];
    return BehaviorDistribution(v / v.sum());
  };
  BehaviorTrajectory traj;
  traj.points.push_back(dist({0.9, 0.05, 0.01, 0.01, 0.01, 0.01, 0.009, 0.001}));
  // Mass moves to Tue (adjacent) and Thu (three away from Mon).
  traj.points.push_back(dist({0.6, 0.2, 0.01, 0.16, 0.01, 0.01, 0.009, 0.001}));
  CHECK(max_offadjacent_gain(traj, s) == doctest::Approx(0.15).epsilon(1e-9));
  BehaviorTrajectory smooth;
  smooth.points.push_back(traj.points[0]);
  smooth.points.push_back(dist({0.7, 0.25, 0.01, 0.01, 0.01, 0.01, 0.009, 0.001}));
  CHECK(max_offadjacent_gain(smooth, s) <= 0.0);
}

TEST_CASE("flat length is the polyline length") {
  std::vector<Vec> pts{Vec::Zero(2), Vec::Unit(2, 0), Vec::Ones(2)};
  MetricSpec flat;
  CHECK(path_length(make_path(pts, Strategy::custom), flat) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("density length rescales by the local energy") {
  const Fixture& f = fixture();
  const SteeringPath on = manifold_path(f.mh, "Mon", "Tue", 300);
  MetricSpec flat, density;
  density.kind = MetricSpec::Kind::density;
  density.manifold = &f.mh;
  // On the manifold the energy vanishes (up to O(1/K^2) chord sag), so the
  // factor is 1/sqrt(alpha + beta).
  CHECK(path_length(on, density) == doctest::Approx(path_length(on, flat) / std::sqrt(1.0 + 1e-3)).epsilon(1e-7));
  // Far off the manifold the factor approaches 1/sqrt(beta).
  const Vec off = 50.0 * f.data.frame.col(0);
  std::vector<Vec> pts{off, Vec(off + 1e-3 * Vec::Unit(off.size(), 5))};
  const SteeringPath far = make_path(pts, Strategy::custom);
  CHECK(path_length(far, density) == doctest::Approx(1e-3 / std::sqrt(1e-3)).epsilon(1e-6));
  CHECK(resolve_energy_sigma(density) == f.mh.sample_sigma());
  MetricSpec broken;
  broken.kind = MetricSpec::Kind::density;
  CHECK_THROWS_AS(path_length(on, broken), std::invalid_argument);
}

TEST_CASE("pullback length approaches the hellinger arc of the induced path") {
  // (1/8) sum dp^2 / p equals (1/2)|d sqrt p|^2, the squared Hellinger line element.
  const Fixture& f = fixture();
  MetricSpec pull;
  pull.kind = MetricSpec::Kind::pullback;
  pull.map = &f.map;
  pull.epsilon = 1e-14;
  const SteeringPath p = linear_path(f.mh.decode_ambient(Coord(0.0, 0.0)), f.mh.decode_ambient(Coord(2.0, 0.0)), 400);
  double arc = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    arc += hellinger_distance(f.map.evaluate(p.waypoints[k]), f.map.evaluate(p.waypoints[k + 1]));
  }
  CHECK(path_length(p, pull) == doctest::Approx(arc).epsilon(1e-3));
}

TEST_CASE("finite-difference jacobian fallback warns and agrees") {
  const Fixture& f = fixture();
  const BlindMap blind(f.map);
  const Vec h = f.mh.decode_ambient(Coord(1.5, 0.0));
  Diagnostics diag;
  const Mat fd = behavior_jacobian(blind, h, {}, &diag);
  const Mat exact = *f.map.jacobian(h, {});
  CHECK(diag.warnings.size() == 1);
  CHECK((fd - exact).norm() < 1e-6 * exact.norm());
}

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::linear, Strategy::manifold, Strategy::pullback, Strategy::custom}) {
    CHECK(strategy_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(strategy_from_string("teleport"), std::invalid_argument);
}
