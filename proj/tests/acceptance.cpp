// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "geosteer/commands.hpp"
#include "geosteer/isometry.hpp"
#include "geosteer/pullback.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace geosteer;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  Outcome& out;
  std::ostringstream msg;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      out.pass = false;
      msg << " [failed: " << what << "]";
    }
  }
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

Vec gaussian(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

BehaviorDistribution random_distribution(std::mt19937_64& rng, int n) {
  std::gamma_distribution<double> g(0.7, 1.0);
  Vec w(n);
  for (auto& x : w) x = g(rng) + 1e-9;
  return BehaviorDistribution(w / w.sum());
}

struct Surrogate {
  SyntheticDataset data;
  ActivationManifold mh;
  BehaviorManifold my;
  SoftmaxDistanceMap map;
  std::vector<BaseInput> bases;
};

Surrogate build(Structure kind, std::vector<int> sizes, SurrogateParams p = {}) {
  Surrogate s;
  s.data = embed_ground_truth(make_concept_space(kind, std::move(sizes)), p);
  s.mh = fit_activation_manifold(s.data.activations, s.data.space);
  s.my = fit_behavior_manifold(s.data.distributions, s.data.space);
  s.map = s.data.behavior_map();
  // Same base inputs as the steer command: 16 contexts, sigma 0.01, seed + 1.
  s.bases = make_base_inputs(s.data.frame, 16, 0.01, p.seed + 1);
  return s;
}

// ---------------------------------------------------------------------------

Outcome spline_exactness() {
  Outcome o;
  Check c{o, {}};
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double interp = 0.0, natural = 0.0, seam0 = 0.0, seam1 = 0.0, seam2 = 0.0;

  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + trial;
    std::vector<double> knots(static_cast<std::size_t>(n));
    double t = 0.0;
    for (auto& k : knots) k = (t += 0.2 + u(rng));
    Mat values(n, 3);
    for (int i = 0; i < n; ++i) values.row(i) = gaussian(rng, 3).transpose();

    const CubicSpline nat = fit_natural_cubic(knots, values);
    for (int i = 0; i < n; ++i) interp = std::max(interp, (nat.eval(knots[i]) - values.row(i).transpose()).norm());
    natural = std::max({natural, nat.derivative(knots.front(), 2).norm(), nat.derivative(knots.back(), 2).norm()});

    const double period = t + 0.2 + u(rng);
    std::vector<double> pk(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) pk[i] = knots[i] - knots.front();
    const CubicSpline per = fit_periodic_cubic(pk, values, period);
    for (int i = 0; i < n; ++i) interp = std::max(interp, (per.eval(pk[i]) - values.row(i).transpose()).norm());
    const double left = std::nextafter(period, 0.0);
    seam0 = std::max(seam0, (per.eval(left) - per.eval(0.0)).norm());
    seam1 = std::max(seam1, (per.derivative(left, 1) - per.derivative(0.0, 1)).norm());
    seam2 = std::max(seam2, (per.derivative(left, 2) - per.derivative(0.0, 2)).norm());

    // Scattered points jittered off a 5 x 5 grid: distinct centroids, as in the
    // fitted charts (the kernel ridge only matters for near-duplicates).
    Mat pts(25, 2), vals(25, 2);
    for (int i = 0; i < 25; ++i) {
      pts.row(i) << i / 5 + 0.6 * u(rng), i % 5 + 0.6 * u(rng);
      vals.row(i) = gaussian(rng, 2).transpose();
    }
    const TpsSurface tps = fit_thin_plate(pts, vals);
    for (int i = 0; i < 25; ++i) {
      interp = std::max(interp, (tps.eval(Coord(pts(i, 0), pts(i, 1))) - vals.row(i).transpose()).norm());
    }
  }

  // The spline and thin-plate charts fitted to every surrogate family.
  for (auto [kind, sizes] : {std::pair{Structure::cyclic, std::vector<int>{7}},
                             std::pair{Structure::sequential, std::vector<int>{24}},
                             std::pair{Structure::grid, std::vector<int>{5, 5}},
                             std::pair{Structure::cylinder, std::vector<int>{9, 9}}}) {
    SurrogateParams p;
    p.samples_per_label = 10;
    const Surrogate s = build(kind, sizes, p);
    for (std::size_t i = 0; i < s.data.space.size(); ++i) {
      const Coord z = s.data.space.coord(i);
      const auto r = static_cast<Eigen::Index>(i);
      interp = std::max(interp, (s.mh.decode(z) - s.mh.centroids().row(r).transpose()).norm());
      interp = std::max(interp, (s.my.decode(z) - s.my.centroids().row(r).transpose().cwiseSqrt()).norm());
    }
    if (kind == Structure::sequential) {
      const auto& sp = std::get<CubicSpline>(s.mh.chart().parameterization());
      natural = std::max({natural, sp.derivative(sp.domain_begin(), 2).norm(), sp.derivative(sp.knots().back(), 2).norm()});
    }
    if (kind == Structure::cyclic) {
      const auto& sp = std::get<CubicSpline>(s.mh.chart().parameterization());
      const double left = std::nextafter(sp.period(), 0.0);
      seam0 = std::max(seam0, (sp.eval(left) - sp.eval(0.0)).norm());
      seam1 = std::max(seam1, (sp.derivative(left, 1) - sp.derivative(0.0, 1)).norm());
      seam2 = std::max(seam2, (sp.derivative(left, 2) - sp.derivative(0.0, 2)).norm());
    }
  }

  c.require(interp <= 1e-8, "interpolation");
  c.require(natural <= 1e-6, "natural boundary");
  c.require(seam1 <= 1e-5 && seam2 <= 1e-5 && seam0 <= 1e-5, "periodic seam");
  o.detail = "max interpolation error " + num(interp) + " (<= 1e-8), natural f'' at ends " + num(natural) +
             " (<= 1e-6), seam jumps C0/C1/C2 " + num(seam0) + "/" + num(seam1) + "/" + num(seam2) + " (<= 1e-5)" +
             c.msg.str();
  return o;
}

Outcome simplex_geometry() {
  Outcome o;
  Check c{o, {}};
  std::mt19937_64 rng(202);
  double identity = 0.0, roundtrip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + i % 30;
    const auto p = random_distribution(rng, n), q = random_distribution(rng, n);
    const double dh = hellinger_distance(p, q);
    identity = std::max(identity, std::abs(bhattacharyya_distance(p, q) + std::log(1.0 - dh * dh)));
    const Vec a = hellinger_embed(p).coords(), b = hellinger_embed(q).coords();
    roundtrip = std::max(roundtrip, (sphere_exp_map(a, sphere_log_map(a, b)) - b).norm());
  }
  c.require(identity <= 1e-10, "D_BC identity");
  c.require(roundtrip < 1e-10, "exp(log) roundtrip");
  o.detail = "max |D_BC + log(1 - d_H^2)| " + num(identity) + " (<= 1e-10), max |exp(log) - x| " + num(roundtrip) +
             " (< 1e-10) over 1000 pairs" + c.msg.str();
  return o;
}

Outcome geodesic_fidelity() {
  Outcome o;
  Check c{o, {}};
  // Plain circle: 24 labels so that label 12 is antipodal to label 0.
  SurrogateParams p;
  p.cyclic_harmonic = 0.0;
  p.samples_per_label = 20;
  const auto data = embed_ground_truth(make_concept_space(Structure::cyclic, {24}), p);
  const ActivationManifold mh = fit_activation_manifold(data.activations, data.space);
  const double radius = p.spacing / (2.0 * std::sin(std::numbers::pi / 24.0));
  const double target = std::numbers::pi * radius;
  const Coord a = data.space.coord(0), b = data.space.coord(12);
  const double d150 = mh.geodesic_distance(a, b, 150);
  const double d300 = mh.geodesic_distance(a, b, 300);
  const double err = std::abs(d150 - target) / target;
  const double refine = std::abs(d300 - d150) / d150;
  c.require(err <= 0.005, "within 0.5% of pi r");
  c.require(refine < 0.001, "refinement change");
  o.detail = "pi r = " + num(target) + ", geodesic(150) = " + num(d150) + " (rel err " + num(err) +
             " <= 0.005), change at 300 steps " + num(refine) + " (< 0.001)" + c.msg.str();
  return o;
}

Outcome isometry_reproduction() {
  Outcome o;
  Check c{o, {}};
  const Surrogate s = build(Structure::cyclic, {7});
  const IsometryReport rep = isometry_report(s.mh, s.my);
  c.require(rep.r_mh_my >= 0.99, "r(M_h, M_y) >= 0.99");
  c.require(rep.r_mh_my > rep.r_linear_my, "manifold beats linear");
  o.detail = "r(M_h-geo, M_y-geo) = " + num(rep.r_mh_my) + " (>= 0.99), r(linear, M_y-geo) = " +
             num(rep.r_linear_my) + ", " + std::to_string(rep.vertices.size()) + " vertices" + c.msg.str();
  return o;
}

struct SteerStats {
  std::vector<double> linear, manifold, gain_linear, gain_manifold;
};

SteerStats steer_pairs(const Surrogate& s) {
  SteerStats st;
  const ConceptSpace& space = s.mh.space();
  for (auto [i, j] : select_pairs(space.size(), 50, 0)) {
    const SteeringPath lin = linear_path(s.mh.decode_ambient(space.coord(i)), s.mh.decode_ambient(space.coord(j)), 50);
    const SteeringPath man = manifold_path(s.mh, space.labels()[i], space.labels()[j], 50);
    const auto tl = induce_trajectory(s.map, lin, s.bases);
    const auto tm = induce_trajectory(s.map, man, s.bases);
    st.linear.push_back(cumulative_energy(tl, s.my));
    st.manifold.push_back(cumulative_energy(tm, s.my));
    st.gain_linear.push_back(max_offadjacent_gain(tl, space));
    st.gain_manifold.push_back(max_offadjacent_gain(tm, space));
  }
  return st;
}

std::map<std::string, SteerStats>& steer_cache() {
  static std::map<std::string, SteerStats> cache;
  return cache;
}

Outcome energy_ordering() {
  Outcome o;
  Check c{o, {}};
  std::ostringstream d;
  for (auto [name, kind, sizes] :
       {std::tuple{"cyclic-7", Structure::cyclic, std::vector<int>{7}},
        std::tuple{"sequential-24", Structure::sequential, std::vector<int>{24}},
        std::tuple{"grid-5x5", Structure::grid, std::vector<int>{5, 5}},
        std::tuple{"cylinder-9x9", Structure::cylinder, std::vector<int>{9, 9}}}) {
    const SteerStats st = steer_pairs(build(kind, sizes));
    steer_cache()[name] = st;
    const PairedTest t = paired_t_test(st.manifold, st.linear);
    std::size_t wins = 0;
    for (std::size_t k = 0; k < st.linear.size(); ++k) wins += st.manifold[k] < st.linear[k];
    const double frac = static_cast<double>(wins) / static_cast<double>(st.linear.size());
    const double ml = mean_stderr(st.linear).mean, mm = mean_stderr(st.manifold).mean;
    c.require(mm < ml && t.p_value < 0.01 && frac >= 0.95, name);
    d << name << ": E(manifold) " << num(mm) << " vs E(linear) " << num(ml) << ", p = " << num(t.p_value)
      << ", lower on " << wins << "/" << st.linear.size() << "; ";
  }
  o.detail = d.str() + "need p < 0.01 and >= 95% of pairs" + c.msg.str();
  return o;
}

Outcome teleportation() {
  Outcome o;
  Check c{o, {}};
  if (!steer_cache().count("cyclic-7")) steer_cache()["cyclic-7"] = steer_pairs(build(Structure::cyclic, {7}));
  const SteerStats& st = steer_cache()["cyclic-7"];
  const double worst_manifold = *std::max_element(st.gain_manifold.begin(), st.gain_manifold.end());
  const double worst_linear = *std::max_element(st.gain_linear.begin(), st.gain_linear.end());
  const auto violating = std::count_if(st.gain_linear.begin(), st.gain_linear.end(), [](double g) { return g >= 0.05; });
  c.require(worst_manifold < 0.05, "manifold gain");
  c.require(violating >= 1, "linear teleports");
  o.detail = "max off-adjacent gain: manifold " + num(worst_manifold) + " (< 0.05 on all " +
             std::to_string(st.gain_manifold.size()) + " pairs), linear " + num(worst_linear) + " (>= 0.05 on " +
             std::to_string(violating) + " pairs)" + c.msg.str();
  return o;
}

Outcome pullback_recovery() {
  Outcome o;
  Check c{o, {}};
  const Surrogate s = build(Structure::cyclic, {7});
  const ConceptSpace& space = s.mh.space();
  const PullbackConfig cfg;
  double worst_loss = 0.0, dc = 0.0, dp = 0.0, dm = 0.0, r2p = 0.0, r2c = 0.0;
  std::size_t beats = 0, n = 0;
  for (auto [i, j] : select_pairs(space.size(), 50, 0)) {
    const std::string& a = space.labels()[i];
    const std::string& b = space.labels()[j];
    const PullbackPath path(s.mh, a, b, cfg.control_points, cfg.waypoints, cfg.subspace_dims);
    std::vector<Vec> planted;
    for (double t : path.control_fractions()) {
      planted.push_back(s.mh.decode_ambient(space.interpolate(space.coord(i), space.coord(j), t)));
    }
    const auto truth = make_path(path.waypoints(path.controls_through(planted)), Strategy::custom);
    const auto target = induce_trajectory(s.map, truth, s.bases).points;
    const PullbackResult r = optimize_pullback(s.map, target, s.bases, s.mh, a, b, cfg);
    worst_loss = std::max(worst_loss, r.final_loss);
    beats += r.r2_vs_manifold > r.r2_linear_baseline;
    r2p += r.r2_vs_manifold;
    r2c += r.r2_linear_baseline;
    dc += mean_manifold_distance(linear_path(s.mh.decode_ambient(space.coord(i)), s.mh.decode_ambient(space.coord(j)),
                                             cfg.waypoints),
                                 s.mh);
    dp += mean_manifold_distance(r.path, s.mh);
    dm += mean_manifold_distance(manifold_path(s.mh, a, b, cfg.waypoints), s.mh);
    ++n;
  }
  const double k = static_cast<double>(n);
  c.require(worst_loss < 1e-6, "final loss");
  c.require(beats == n, "R2 beats chord on every pair");
  c.require(dc / k > dp / k && dp / k >= dm / k, "distance ordering");
  o.detail = std::to_string(n) + " pairs: max final loss " + num(worst_loss) + " (< 1e-6), R2 pullback > chord on " +
             std::to_string(beats) + "/" + std::to_string(n) + " (mean " + num(r2p / k) + " vs " + num(r2c / k) +
             "), mean distance to M_h chord " + num(dc / k) + " > pullback " + num(dp / k) + " >= manifold " +
             num(dm / k) + c.msg.str();
  return o;
}

Outcome conformal_limit() {
  Outcome o;
  Check c{o, {}};
  const Surrogate s = build(Structure::cyclic, {7});
  const ConceptSpace& space = s.my.space();
  double free_err = 0.0, pinned = 0.0;
  std::size_t n = 0;
  for (auto [i, j] : select_pairs(space.size(), 50, 0)) {
    const auto pa = s.my.decode_distribution(space.coord(i));
    const auto pb = s.my.decode_distribution(space.coord(j));
    const ConformalTarget free = conformal_target(pa, pb, s.my, 0.0);
    const auto geo = hellinger_geodesic(pa, pb, static_cast<int>(free.points.size()) - 1);
    for (std::size_t k = 0; k < geo.size(); ++k) {
      free_err = std::max(free_err, (hellinger_embed(free.points[k]).coords() - hellinger_embed(geo[k]).coords()).norm());
    }
    // Pairs i -> j and j -> i share a path; solve each unordered pair once.
    if (i > j) continue;
    const ConformalTarget tight = conformal_target(pa, pb, s.my, 50.0);
    for (std::size_t k = 1; k + 1 < tight.points.size(); ++k) {
      pinned = std::max(pinned, s.my.hellinger_distance_to(tight.points[k]));
    }
    ++n;
  }
  c.require(free_err <= 1e-6, "alpha = 0 geodesic");
  c.require(pinned <= 0.02, "alpha = 50 on M_y");
  o.detail = "alpha = 0: max waypoint gap to the great circle " + num(free_err) +
             " (<= 1e-6); alpha = 50: max interior Hellinger distance to M_y " + num(pinned) + " (<= 0.02) over " +
             std::to_string(n) + " label pairs" + c.msg.str();
  return o;
}

Outcome jacobian_correctness() {
  Outcome o;
  Check c{o, {}};
  SurrogateParams p;
  p.samples_per_label = 2;
  const auto data = embed_ground_truth(make_concept_space(Structure::cyclic, {7}), p);
  const SoftmaxDistanceMap map = data.behavior_map();
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<Eigen::Index> pick(0, data.centers.rows() - 1);
  double rel = 0.0, colsum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec h = data.centers.row(pick(rng)).transpose() + gaussian(rng, data.centers.cols(), 0.3);
    const Mat J = *map.jacobian(h, {});
    Mat fd(J.rows(), J.cols());
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      const double step = 1e-6 * std::max(1.0, std::abs(h(i)));
      Vec up = h, down = h;
      up(i) += step;
      down(i) -= step;
      fd.col(i) = (map.evaluate(up).probabilities() - map.evaluate(down).probabilities()) / (2.0 * step);
    }
    rel = std::max(rel, (J - fd).norm() / fd.norm());
    colsum = std::max(colsum, J.colwise().sum().cwiseAbs().maxCoeff());
  }
  c.require(rel <= 1e-5, "relative error");
  c.require(colsum <= 1e-10, "column sums");
  o.detail = "max relative |J - J_fd| " + num(rel) + " (<= 1e-5), max |column sum| " + num(colsum) +
             " (<= 1e-10) over 100 points" + c.msg.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  Check c{o, {}};
  const fs::path root = fs::temp_directory_path() / "geosteer_acceptance";
  fs::remove_all(root);
  std::ostringstream log;
  std::size_t compared = 0;

  for (const char* kind : {"cyclic", "sequential", "grid", "cylinder"}) {
    RunConfig a;
    a.kind = kind;
    a.labels = 24;
    a.rows = a.cols = std::string(kind) == "cylinder" ? 9 : 5;
    a.quiet = true;
    RunConfig b = a;
    a.out = (root / kind / "a").string();
    b.out = (root / kind / "b").string();
    if (std::string(kind) == "cyclic") a.labels = b.labels = 7;
    for (const RunConfig* r : {&a, &b}) {
      cmd_generate(*r, log);
      if (std::string(kind) == "cyclic") {
        cmd_fit(*r, log);
        cmd_isometry(*r, log);
        cmd_steer(*r, log);
        cmd_report(*r, log);
      }
    }
    for (const auto& e : fs::directory_iterator(a.out)) {
      const fs::path other = fs::path(b.out) / e.path().filename();
      c.require(fs::exists(other) && slurp(e.path()) == slurp(other), std::string("identical ") + kind + "/" +
                                                                          e.path().filename().string());
      ++compared;
    }
    const fs::path again = root / kind / "again.json";
    save_dataset(again, load_dataset(a.dataset_path()));
    c.require(slurp(again) == slurp(a.dataset_path()), std::string("dataset round trip ") + kind);
  }
  const RunConfig cyc = [&] {
    RunConfig r;
    r.out = (root / "cyclic" / "a").string();
    return r;
  }();
  const fs::path again = root / "cyclic" / "manifolds_again.json";
  save_manifolds(again, load_manifolds(cyc.manifolds_path()));
  c.require(slurp(again) == slurp(cyc.manifolds_path()), "manifolds round trip");
  fs::remove_all(root);
  o.detail = std::to_string(compared) +
             " files byte-identical across same-seed runs; dataset and manifolds serialize/load/serialize identical" +
             c.msg.str();
  return o;
}

Outcome optimizer_sanity() {
  Outcome o;
  Check c{o, {}};
  OptimizerConfig cfg;  // 50 outer x 5 inner
  cfg.relative_loss_tolerance = 0.0;
  Vec x0(2);
  x0 << -1.2, 1.0;
  const auto rb = lbfgs_minimize([](const Vec& x, Vec& g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  }, x0, cfg);
  const double rb_err = (rb.x - Vec::Ones(2)).lpNorm<Eigen::Infinity>();
  c.require(rb_err < 1e-6, "rosenbrock");

  cfg.gradient_tolerance = 1e-9;
  double worst = 0.0;
  int most = 0;
  std::mt19937_64 rng(1111);
  for (int trial = 0; trial < 5; ++trial) {
    Mat q(64, 64);
    for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = gaussian(rng, 1)(0);
    const Mat A = q.transpose() * q / 64.0 + 0.1 * Mat::Identity(64, 64);
    const Vec b = gaussian(rng, 64);
    const auto r = lbfgs_minimize([&](const Vec& x, Vec& g) {
      g = A * x - b;
      return 0.5 * x.dot(A * x) - b.dot(x);
    }, Vec::Zero(64), cfg);
    worst = std::max(worst, (A * r.x - b).norm());
    most = std::max(most, r.iterations);
  }
  c.require(worst < 1e-8, "quadratic gradient");
  c.require(most <= 250, "budget");
  o.detail = "rosenbrock max |x - 1| " + num(rb_err) + " (< 1e-6) after " + std::to_string(rb.iterations) +
             " iterations; 64-D quadratics max |grad| " + num(worst) + " (< 1e-8) within " + std::to_string(most) +
             "/250 iterations" + c.msg.str();
  return o;
}

}  // namespace

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "spline exactness", 5, spline_exactness},
      {2, "simplex geometry", 5, simplex_geometry},
      {3, "geodesic fidelity", 10, geodesic_fidelity},
      {4, "isometry reproduction", 30, isometry_reproduction},
      {5, "energy ordering", 300, energy_ordering},
      {6, "teleportation", 60, teleportation},
      {7, "pullback recovery", 600, pullback_recovery},
      {8, "conformal limit", 120, conformal_limit},
      {9, "jacobian correctness", 10, jacobian_correctness},
      {10, "determinism and round-trip", 60, determinism},
      {11, "optimizer sanity", 10, optimizer_sanity},
  };

  int failures = 0, ran = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), cr.id) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.limit_s) {
      o.pass = false;
      o.detail += " [failed: runtime]";
    }
    failures += !o.pass;
    std::printf("criterion %2d %s  %-28s %7.2fs (limit %gs)  %s\n", cr.id, o.pass ? "PASS" : "FAIL", cr.name, secs,
                cr.limit_s, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
